#include "sivcpt/lambda_dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "sivcpt/errors.hpp"

namespace sivcpt::lambda {

namespace {

constexpr cd kI{0.0, 1.0};

void require_nonnegative(double v, const char* name) {
  if (!(v >= 0.0)) throw DomainError(std::string("lambda params: ") + name + " must be >= 0");
}

}  // namespace

// ---------------------------------------------------------------- params

void LambdaParams::validate() const {
  require_nonnegative(gamma_opt, "gamma_opt");
  require_nonnegative(gamma_spin, "gamma_spin");
  require_nonnegative(gamma_e, "gamma_e");
  require_nonnegative(spin_flip_up, "spin_flip_up");
  require_nonnegative(spin_flip_down, "spin_flip_down");
  if (!(branch_plus >= 0.0 && branch_plus <= 1.0))
    throw DomainError("lambda params: branch_plus must lie in [0, 1]");
  const double scale = std::max({std::abs(delta_plus), std::abs(delta_minus),
                                 std::abs(two_photon_delta), std::abs(omega_b)});
  const double mismatch = (delta_plus - delta_minus) - spin_detuning();
  if (std::abs(mismatch) > 1e-9 * scale) {
    std::ostringstream os;
    os << "lambda params: rotating-frame geometry violated, delta_plus - delta_minus = "
       << delta_plus - delta_minus << " but omega_b - delta = " << spin_detuning();
    throw DomainError(os.str());
  }
}

LambdaParams LambdaParams::with_two_photon_delta(double delta) const {
  LambdaParams p = *this;
  p.two_photon_delta = delta;
  p.delta_minus = p.delta_plus - p.spin_detuning();
  return p;
}

// ---------------------------------------------------------- density matrix

DensityMatrix DensityMatrix::diagonal(double p_plus, double p_excited, double p_minus) {
  Matrix3c m = Matrix3c::Zero();
  m(kPlus, kPlus) = p_plus;
  m(kExcited, kExcited) = p_excited;
  m(kMinus, kMinus) = p_minus;
  return DensityMatrix(m);
}

DensityMatrix DensityMatrix::pure(const Eigen::Vector3cd& amplitudes) {
  const Eigen::Vector3cd v = amplitudes.normalized();
  return DensityMatrix(v * v.adjoint());
}

DensityMatrix DensityMatrix::dark_state(double omega_plus, double omega_minus) {
  if (omega_plus == 0.0 && omega_minus == 0.0)
    throw DomainError("dark_state: both Rabi frequencies vanish");
  return pure(Eigen::Vector3cd(omega_minus, 0.0, -omega_plus));
}

double DensityMatrix::min_eigenvalue() const {
  const Matrix3c h = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix3c> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void DensityMatrix::validate(double herm_tol, double trace_tol, double pos_tol) const {
  std::ostringstream os;
  if (hermiticity_error() > herm_tol) {
    os << "density matrix not Hermitian (error " << hermiticity_error() << ")";
    throw NumericalError(os.str());
  }
  if (std::abs(trace() - 1.0) > trace_tol || std::abs(rho_.trace().imag()) > trace_tol) {
    os << "density matrix trace " << trace() << " differs from 1";
    throw NumericalError(os.str());
  }
  if (min_eigenvalue() < -pos_tol) {
    os << "density matrix not positive (min eigenvalue " << min_eigenvalue() << ")";
    throw NumericalError(os.str());
  }
}

Vector9 DensityMatrix::to_real_vector() const {
  Vector9 v;
  v << rho_(kPlus, kPlus).real(), rho_(kExcited, kExcited).real(), rho_(kMinus, kMinus).real(),
      rho_(kExcited, kPlus).real(), rho_(kExcited, kPlus).imag(), rho_(kExcited, kMinus).real(),
      rho_(kExcited, kMinus).imag(), rho_(kMinus, kPlus).real(), rho_(kMinus, kPlus).imag();
  return v;
}

DensityMatrix DensityMatrix::from_real_vector(const Vector9& v) {
  Matrix3c m;
  m(kPlus, kPlus) = v[0];
  m(kExcited, kExcited) = v[1];
  m(kMinus, kMinus) = v[2];
  m(kExcited, kPlus) = cd(v[3], v[4]);
  m(kExcited, kMinus) = cd(v[5], v[6]);
  m(kMinus, kPlus) = cd(v[7], v[8]);
  m(kPlus, kExcited) = std::conj(m(kExcited, kPlus));
  m(kMinus, kExcited) = std::conj(m(kExcited, kMinus));
  m(kPlus, kMinus) = std::conj(m(kMinus, kPlus));
  return DensityMatrix(m);
}

// ---------------------------------------------------------------- generator

Matrix3c rhs(const Matrix3c& rho, const LambdaParams& p) {
  const cd rho_ep = rho(kExcited, kPlus);
  const cd rho_em = rho(kExcited, kMinus);
  const cd rho_mp = rho(kMinus, kPlus);
  const cd rho_pm = rho(kPlus, kMinus);
  const cd rho_me = rho(kMinus, kExcited);
  const cd ee = rho(kExcited, kExcited);
  const cd pp = rho(kPlus, kPlus);
  const cd mm = rho(kMinus, kMinus);
  const double hp = 0.5 * p.omega_plus;
  const double hm = 0.5 * p.omega_minus;

  Matrix3c d;
  d(kExcited, kPlus) = -(kI * p.delta_plus + p.gamma_opt) * rho_ep + kI * hp * (ee - pp) - kI * hm * rho_mp;
  d(kExcited, kMinus) = -(kI * p.delta_minus + p.gamma_opt) * rho_em + kI * hm * (ee - mm) - kI * hp * rho_pm;
  d(kMinus, kPlus) = -(kI * p.spin_detuning() + p.gamma_spin) * rho_mp + kI * hp * rho_me - kI * hm * rho_ep;

  // (i Omega/2 rho_eg + c.c.)
  const double pump_plus = 2.0 * (kI * hp * rho_ep).real();
  const double pump_minus = 2.0 * (kI * hm * rho_em).real();
  const double exchange = p.spin_flip_up * mm.real() - p.spin_flip_down * pp.real();

  d(kExcited, kExcited) = -p.gamma_e * ee.real() + pump_plus + pump_minus;
  d(kPlus, kPlus) = p.branch_plus * p.gamma_e * ee.real() - pump_plus + exchange;
  d(kMinus, kMinus) = (1.0 - p.branch_plus) * p.gamma_e * ee.real() - pump_minus - exchange;

  d(kPlus, kExcited) = std::conj(d(kExcited, kPlus));
  d(kMinus, kExcited) = std::conj(d(kExcited, kMinus));
  d(kPlus, kMinus) = std::conj(d(kMinus, kPlus));
  return d;
}

Matrix9 liouvillian(const LambdaParams& params) {
  Matrix9 l;
  for (int j = 0; j < 9; ++j) {
    const Vector9 basis = Vector9::Unit(j);
    l.col(j) = DensityMatrix(rhs(DensityMatrix::from_real_vector(basis).matrix(), params)).to_real_vector();
  }
  return l;
}

// -------------------------------------------------------------- integrator

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

double rate_scale(const LambdaParams& p) {
  return std::max({p.gamma_e, p.gamma_opt, p.gamma_spin, std::abs(p.omega_plus), std::abs(p.omega_minus),
                   std::abs(p.delta_plus), std::abs(p.delta_minus), std::abs(p.spin_detuning()),
                   p.spin_flip_up, p.spin_flip_down});
}

void check_emitted(const DensityMatrix& s, double t, double tol) {
  const double trace_err = std::abs(s.trace() - 1.0);
  const double min_eig = s.min_eigenvalue();
  if (trace_err > tol || min_eig < -tol) {
    std::ostringstream os;
    os << "evolve: state invariant violated at t = " << t << " s (trace error " << trace_err
       << ", min eigenvalue " << min_eig << ")";
    throw IntegrationError(os.str(), t);
  }
}

}  // namespace

Trajectory evolve(const DensityMatrix& initial, const LambdaParams& params, double t_final,
                  const EvolveOptions& options) {
  params.validate();
  if (!(t_final > 0.0)) throw DomainError("evolve: t_final must be positive");
  if (!(options.rel_tol > 0.0) || !(options.abs_tol > 0.0))
    throw DomainError("evolve: tolerances must be positive");
  const auto& outs = options.output_times;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    if (!(outs[i] > 0.0) || outs[i] > t_final * (1 + 1e-12) || (i > 0 && !(outs[i] > outs[i - 1])))
      throw DomainError("evolve: output_times must be ascending within (0, t_final]");
  }

  Trajectory traj;
  traj.params = params;
  traj.times.push_back(0.0);
  traj.states.push_back(initial);
  check_emitted(initial, 0.0, options.invariant_tol);

  auto f = [&](const Matrix3c& m) { return rhs(m, params); };
  auto error_norm = [&](const Matrix3c& y0, const Matrix3c& y1, const Matrix3c& err) {
    double worst = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double sc = options.abs_tol + options.rel_tol * std::max(std::abs(y0(i, j)), std::abs(y1(i, j)));
        worst = std::max(worst, std::abs(err(i, j)) / sc);
      }
    return worst;
  };

  Matrix3c y = initial.matrix();
  Matrix3c k1 = f(y);
  double t = 0.0;
  const double scale = rate_scale(params);
  double h = scale > 0.0 ? std::min(t_final, 0.01 / scale) : t_final;
  std::size_t next_out = 0;
  long steps = 0;

  while (t < t_final) {
    const double target = outs.empty() ? t_final : outs[next_out];
    bool lands = false;
    if (t + h >= target) {
      h = target - t;
      lands = true;
    }
    if (h <= 1e-14 * std::max(t_final, std::abs(t)) || t + h == t)
      throw IntegrationError("evolve: step size underflow", t);
    if (++steps > options.max_steps) throw IntegrationError("evolve: step budget exhausted", t);

    const Matrix3c k2 = f(y + h * a21 * k1);
    const Matrix3c k3 = f(y + h * (a31 * k1 + a32 * k2));
    const Matrix3c k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Matrix3c k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Matrix3c k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Matrix3c y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Matrix3c k7 = f(y_new);
    const Matrix3c err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = error_norm(y, y_new, err);

    if (en <= 1.0) {
      t = lands ? target : t + h;
      y = y_new;
      k1 = k7;
      const bool emit = outs.empty() || lands;
      if (emit) {
        DensityMatrix s(y);
        check_emitted(s, t, options.invariant_tol);
        traj.times.push_back(t);
        traj.states.push_back(std::move(s));
        if (!outs.empty() && ++next_out == outs.size()) break;
      }
      const double grow = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      // A landing step may have been truncated; grow from the untruncated size.
      h *= grow;
    } else {
      h *= std::max(0.2, 0.9 * std::pow(en, -0.25));
    }
  }
  return traj;
}

Trajectory evolve(const DensityMatrix& initial, const LambdaParams& params, double t_final,
                  double rel_tol, double abs_tol) {
  EvolveOptions opt;
  opt.rel_tol = rel_tol;
  opt.abs_tol = abs_tol;
  return evolve(initial, params, t_final, opt);
}

// ------------------------------------------------------------ steady state

namespace {

// Gaussian elimination with partial pivoting on a row-equilibrated copy.
// Returns nullopt when a pivot falls below `pivot_tol`.
std::optional<Vector9> solve_equilibrated(Matrix9 a, Vector9 b, double pivot_tol) {
  for (int i = 0; i < 9; ++i) {
    const double s = a.row(i).cwiseAbs().maxCoeff();
    if (s == 0.0) return std::nullopt;
    a.row(i) /= s;
    b[i] /= s;
  }
  for (int col = 0; col < 9; ++col) {
    int piv = col;
    for (int r = col + 1; r < 9; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (std::abs(a(piv, col)) < pivot_tol) return std::nullopt;
    if (piv != col) {
      a.row(piv).swap(a.row(col));
      std::swap(b[piv], b[col]);
    }
    for (int r = col + 1; r < 9; ++r) {
      const double factor = a(r, col) / a(col, col);
      if (factor == 0.0) continue;
      a.row(r).tail(9 - col) -= factor * a.row(col).tail(9 - col);
      b[r] -= factor * b[col];
    }
  }
  Vector9 x;
  for (int r = 8; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < 9; ++c) acc -= a(r, c) * x[c];
    x[r] = acc / a(r, r);
  }
  return x;
}

}  // namespace

DensityMatrix steady_state(const LambdaParams& params) {
  params.validate();
  const Matrix9 l = liouvillian(params);
  // The three population rows sum to zero; replace the |+> row by the trace.
  Matrix9 a = l;
  a.row(0).setZero();
  a(0, 0) = a(0, 1) = a(0, 2) = 1.0;
  Vector9 b = Vector9::Zero();
  b[0] = 1.0;

  const auto x = solve_equilibrated(a, b, 1e-11);
  if (!x) {
    throw NonUniqueSteadyState(
        "steady_state: non-unique steady state; the dissipative pathways do not connect all levels "
        "(need gamma_e > 0 with decay into both ground states, or nonzero spin exchange)");
  }
  const DensityMatrix rho = DensityMatrix::from_real_vector(*x);
  const double resid = (l * (*x)).norm() / std::max(l.norm(), 1e-300);
  if (resid > 1e-9) {
    std::ostringstream os;
    os << "steady_state: generator residual " << resid << " too large";
    throw NumericalError(os.str());
  }
  rho.validate();
  return rho;
}

// ----------------------------------------------------- adiabatic formulas

RegimeFlags check_regime(const LambdaParams& p) {
  RegimeFlags f;
  f.large_optical_detuning = std::max(std::abs(p.delta_plus), std::abs(p.delta_minus)) > 0.1 * p.gamma_opt;
  f.fast_spin_decay = p.gamma_spin > 0.1 * std::min(p.gamma_opt, p.gamma_e);
  return f;
}

OpticalCoherences adiabatic_optical_coherences(double n_plus, double n_minus, cd rho_mp,
                                               const LambdaParams& p) {
  if (!(p.gamma_opt > 0.0)) throw DomainError("adiabatic_optical_coherences: gamma_opt must be positive");
  const cd pre = -kI / (2.0 * p.gamma_opt);
  OpticalCoherences out;
  out.e_plus = pre * (p.omega_plus * n_plus + p.omega_minus * rho_mp);
  out.e_minus = pre * (p.omega_minus * n_minus + p.omega_plus * std::conj(rho_mp));
  out.regime = check_regime(p);
  return out;
}

double adiabatic_excited_population(double n_plus, double n_minus, cd rho_mp, const LambdaParams& p) {
  if (!(p.gamma_e * p.gamma_opt > 0.0))
    throw DomainError("adiabatic_excited_population: gamma_e and gamma_opt must be positive");
  const double op = p.omega_plus, om = p.omega_minus;
  return (op * op * n_plus + om * om * n_minus + 2.0 * op * om * rho_mp.real()) /
         (2.0 * p.gamma_e * p.gamma_opt);
}

cd adiabatic_spin_coherence(double n_plus, double n_minus, const LambdaParams& p) {
  if (!(p.gamma_opt > 0.0)) throw DomainError("adiabatic_spin_coherence: gamma_opt must be positive");
  const double op = p.omega_plus, om = p.omega_minus;
  const cd denom = kI * p.spin_detuning() + p.gamma_spin + (op * op + om * om) / (4.0 * p.gamma_opt);
  if (denom == cd(0.0, 0.0)) throw NumericalError("adiabatic_spin_coherence: vanishing denominator");
  return -(op * om / (4.0 * p.gamma_opt)) * (n_plus + n_minus) / denom;
}

double analytic_cpt_halfwidth(const LambdaParams& p) {
  if (!(p.gamma_opt > 0.0)) throw DomainError("analytic_cpt_halfwidth: gamma_opt must be positive");
  return p.gamma_spin + (p.omega_plus * p.omega_plus + p.omega_minus * p.omega_minus) / (4.0 * p.gamma_opt);
}

AdiabaticSteadyState self_consistent_adiabatic_steady_state(const LambdaParams& p,
                                                            const FixedPointOptions& options) {
  p.validate();
  if (!(p.gamma_opt > 0.0) || !(p.gamma_e > 0.0))
    throw DomainError("adiabatic steady state: gamma_opt and gamma_e must be positive");

  const double op = p.omega_plus, om = p.omega_minus, g = p.gamma_opt;
  // Rate balance for (p+, pe, p-) at fixed Re rho_-+; rows: trace, rho_ee, rho_++.
  Eigen::Matrix3d a;
  a << 1.0, 1.0, 1.0,
       op * op / (2 * g), -p.gamma_e - (op * op + om * om) / (2 * g), om * om / (2 * g),
       -op * op / (2 * g) - p.spin_flip_down, p.branch_plus * p.gamma_e + op * op / (2 * g), p.spin_flip_up;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible())
    throw NonUniqueSteadyState("adiabatic steady state: population balance is singular (no pathway "
                               "connects both ground states)");

  auto populations = [&](cd rho_mp) {
    const Eigen::Vector3d b(1.0, -op * om * rho_mp.real() / g, op * om * rho_mp.real() / (2 * g));
    return Eigen::Vector3d(lu.solve(b));
  };

  cd rho_mp{0.0, 0.0};
  Eigen::Vector3d pops = populations(rho_mp);
  double residual = 0.0;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    pops = populations(rho_mp);
    const cd next = adiabatic_spin_coherence(pops[0] - pops[1], pops[2] - pops[1], p);
    residual = std::abs(next - rho_mp);
    if (residual < options.tolerance) {
      rho_mp = next;
      break;
    }
    rho_mp = (1.0 - options.damping) * rho_mp + options.damping * next;
  }
  if (it == options.max_iterations) {
    throw ConvergenceError("adiabatic steady state: fixed point did not converge in " +
                               std::to_string(options.max_iterations) + " iterations",
                           residual);
  }

  const double n_plus = pops[0] - pops[1];
  const double n_minus = pops[2] - pops[1];
  const OpticalCoherences coh = adiabatic_optical_coherences(n_plus, n_minus, rho_mp, p);
  Matrix3c m;
  m(kPlus, kPlus) = pops[0];
  m(kExcited, kExcited) = pops[1];
  m(kMinus, kMinus) = pops[2];
  m(kMinus, kPlus) = rho_mp;
  m(kPlus, kMinus) = std::conj(rho_mp);
  m(kExcited, kPlus) = coh.e_plus;
  m(kPlus, kExcited) = std::conj(coh.e_plus);
  m(kExcited, kMinus) = coh.e_minus;
  m(kMinus, kExcited) = std::conj(coh.e_minus);

  AdiabaticSteadyState out;
  out.state = DensityMatrix(m);
  out.regime = check_regime(p);
  out.iterations = it + 1;
  out.residual = residual;
  return out;
}

}  // namespace sivcpt::lambda
