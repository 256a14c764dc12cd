#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

// Rotating-frame density-matrix model of a driven Lambda system: two ground
// spin states |+>, |-> coupled to one excited state |e> by fields with Rabi
// frequencies Omega+, Omega-. All rates and frequencies are angular (rad/s).
namespace sivcpt::lambda {

using cd = std::complex<double>;
using Matrix3c = Eigen::Matrix3cd;
using Vector9 = Eigen::Matrix<double, 9, 1>;
using Matrix9 = Eigen::Matrix<double, 9, 9>;

// Basis ordering of every 3x3 matrix in this module.
enum Level : int { kPlus = 0, kExcited = 1, kMinus = 2 };

struct LambdaParams {
  double omega_plus = 0.0;        // Omega+
  double omega_minus = 0.0;       // Omega-
  double delta_plus = 0.0;        // optical detuning omega0 - omega+
  double delta_minus = 0.0;       // optical detuning omega0 - omegaB - omega-
  double two_photon_delta = 0.0;  // delta = omega+ - omega-
  double omega_b = 0.0;           // ground splitting |+> -> |->
  double gamma_opt = 0.0;         // optical coherence decay
  double gamma_spin = 0.0;        // spin coherence decay
  double gamma_e = 0.0;           // excited population decay
  double branch_plus = 0.5;       // fraction of gamma_e decaying into |+>
  double spin_flip_up = 0.0;      // population transfer |-> -> |+>
  double spin_flip_down = 0.0;    // population transfer |+> -> |->

  // omega_B - delta, the detuning from two-photon resonance.
  double spin_detuning() const { return omega_b - two_photon_delta; }

  // Rates nonnegative, branch in [0,1], and the rotating-frame geometry
  // delta_plus - delta_minus == omega_b - two_photon_delta (1e-9 relative).
  void validate() const;

  // Copy with delta set to `delta` and delta_minus moved to keep the
  // geometry, holding delta_plus fixed.
  LambdaParams with_two_photon_delta(double delta) const;
};

class DensityMatrix {
 public:
  DensityMatrix() : rho_(Matrix3c::Zero()) {}
  explicit DensityMatrix(const Matrix3c& rho) : rho_(rho) {}

  static DensityMatrix diagonal(double p_plus, double p_excited, double p_minus);
  // |psi><psi| for an (unnormalized) amplitude vector in the {+, e, -} basis.
  static DensityMatrix pure(const Eigen::Vector3cd& amplitudes);
  // (Omega- |+> - Omega+ |->) / norm, the state decoupled from both fields.
  static DensityMatrix dark_state(double omega_plus, double omega_minus);

  const Matrix3c& matrix() const { return rho_; }
  cd operator()(int i, int j) const { return rho_(i, j); }

  double population(Level l) const { return rho_(l, l).real(); }
  double trace() const { return rho_.trace().real(); }
  double hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }
  double min_eigenvalue() const;

  // Hermitian to 1e-10, unit trace to 1e-9, eigenvalues >= -1e-9 unless
  // looser tolerances are supplied. Throws NumericalError naming the breach.
  void validate(double herm_tol = 1e-10, double trace_tol = 1e-9, double pos_tol = 1e-9) const;

  // Real 9-vector {rho++, rhoee, rho--, Re/Im rho_e+, Re/Im rho_e-, Re/Im rho_-+}.
  Vector9 to_real_vector() const;
  static DensityMatrix from_real_vector(const Vector9& v);

 private:
  Matrix3c rho_;
};

// d rho / dt. Linear in `rho`; accepts any Hermitian matrix, not only states.
Matrix3c rhs(const Matrix3c& rho, const LambdaParams& params);
inline Matrix3c rhs(const DensityMatrix& rho, const LambdaParams& params) {
  return rhs(rho.matrix(), params);
}

// The generator acting on real 9-vectors, assembled column by column from rhs.
Matrix9 liouvillian(const LambdaParams& params);

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  LambdaParams params;
};

struct EvolveOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  // Emit exactly these times (ascending, within (0, t_final]); when empty
  // every accepted step is emitted. t = 0 is always the first sample.
  std::vector<double> output_times;
  double invariant_tol = 1e-7;
  long max_steps = 50'000'000;
};

// Adaptive Dormand-Prince 5(4) integration. Throws IntegrationError on step
// underflow or when an emitted state breaks the trace/positivity invariant
// by more than invariant_tol (states are never silently renormalized).
Trajectory evolve(const DensityMatrix& initial, const LambdaParams& params, double t_final,
                  const EvolveOptions& options);
Trajectory evolve(const DensityMatrix& initial, const LambdaParams& params, double t_final,
                  double rel_tol = 1e-8, double abs_tol = 1e-10);

// Exact stationary state: null vector of the real generator with the trace
// row swapped in, solved by row-equilibrated Gaussian elimination with
// partial pivoting. Throws NonUniqueSteadyState when the null space is not
// one-dimensional.
DensityMatrix steady_state(const LambdaParams& params);

// Validity of the fast-variable elimination for the given parameters.
struct RegimeFlags {
  bool large_optical_detuning = false;  // |Delta+-| > 0.1 gamma
  bool fast_spin_decay = false;         // gamma_s > 0.1 min(gamma, Gamma)
  bool in_regime() const { return !large_optical_detuning && !fast_spin_decay; }
};

RegimeFlags check_regime(const LambdaParams& params);

struct OpticalCoherences {
  cd e_plus;   // rho_e+
  cd e_minus;  // rho_e-
  RegimeFlags regime;
};

// rho_e+ = -(i / 2gamma)(Omega+ N+ + Omega- rho_-+),
// rho_e- = -(i / 2gamma)(Omega- N- + Omega+ rho_+-), with N = rho_gg - rho_ee.
OpticalCoherences adiabatic_optical_coherences(double n_plus, double n_minus, cd rho_mp,
                                               const LambdaParams& params);

// rho_ee = [Omega+^2 N+ + Omega-^2 N- + 2 Omega+ Omega- Re rho_-+] / (2 Gamma gamma).
double adiabatic_excited_population(double n_plus, double n_minus, cd rho_mp,
                                    const LambdaParams& params);

// Stationary spin coherence of the power-broadened spin equation:
// rho_-+ = -(Omega+ Omega- / 4gamma)(N+ + N-) /
//          [i(omega_B - delta) + gamma_s + (Omega+^2 + Omega-^2) / 4gamma].
cd adiabatic_spin_coherence(double n_plus, double n_minus, const LambdaParams& params);

// HWHM of the CPT dip in delta: gamma_s + (Omega+^2 + Omega-^2) / 4gamma.
double analytic_cpt_halfwidth(const LambdaParams& params);

struct AdiabaticSteadyState {
  DensityMatrix state;
  RegimeFlags regime;
  int iterations = 0;
  double residual = 0.0;
};

struct FixedPointOptions {
  double damping = 0.5;
  double tolerance = 1e-10;
  int max_iterations = 1000;
};

// Populations balanced with the adiabatic pumping terms, iterated to
// self-consistency with the stationary spin coherence. Throws
// ConvergenceError (with the last residual) when the damped iteration stalls.
AdiabaticSteadyState self_consistent_adiabatic_steady_state(const LambdaParams& params,
                                                            const FixedPointOptions& options = {});

}  // namespace sivcpt::lambda
