#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "oracles.hpp"
#include "sivcpt/errors.hpp"
#include "sivcpt/lambda_dynamics.hpp"
#include "sivcpt/units.hpp"

using namespace sivcpt;
using namespace sivcpt::lambda;

namespace {

// Physical rates: optical and spin coherences decay at least as fast as
// the population processes require.
LambdaParams physical() {
  LambdaParams p;
  p.gamma_opt = units::mhz(100.0);
  p.gamma_e = 1.0 / 1.7e-9;
  p.gamma_spin = units::mhz(0.5);
  p.omega_b = units::ghz(3.0);
  p.omega_plus = units::mhz(40.0);
  p.omega_minus = units::mhz(25.0);
  p.delta_plus = units::mhz(15.0);
  p.spin_flip_up = 1e6;
  p.spin_flip_down = 0.8e6;
  p.branch_plus = 0.4;
  return p.with_two_photon_delta(p.omega_b - units::mhz(3.0));
}

Matrix3c random_hermitian(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix3c m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = {g(rng), g(rng)};
  return 0.5 * (m + m.adjoint());
}

}  // namespace

TEST_CASE("rhs preserves trace and Hermiticity") {
  std::mt19937_64 rng(1);
  const LambdaParams p = physical();
  for (int k = 0; k < 50; ++k) {
    const Matrix3c d = rhs(random_hermitian(rng), p);
    CHECK(std::abs(d.trace()) < 1e-6);
    CHECK((d - d.adjoint()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("liouvillian reproduces rhs on real vectors") {
  std::mt19937_64 rng(2);
  const LambdaParams p = physical();
  const Matrix9 l = liouvillian(p);
  for (int k = 0; k < 20; ++k) {
    const DensityMatrix rho(random_hermitian(rng));
    const Vector9 lhs = l * rho.to_real_vector();
    const Vector9 ref = DensityMatrix(rhs(rho, p)).to_real_vector();
    CHECK((lhs - ref).cwiseAbs().maxCoeff() < 1e-6 * ref.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("real-vector round trip") {
  std::mt19937_64 rng(3);
  const DensityMatrix rho(oracle::random_density(rng));
  const DensityMatrix back = DensityMatrix::from_real_vector(rho.to_real_vector());
  CHECK((back.matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("dark state is an exact stationary state without spin decoherence") {
  LambdaParams p = physical();
  p.gamma_spin = 0.0;
  p.spin_flip_up = p.spin_flip_down = 0.0;
  p.omega_plus = p.omega_minus = units::mhz(30.0);
  p = p.with_two_photon_delta(p.omega_b);
  const DensityMatrix dark = DensityMatrix::dark_state(p.omega_plus, p.omega_minus);
  CHECK(rhs(dark, p).cwiseAbs().maxCoeff() < 1e-6);
  const DensityMatrix ss = steady_state(p);
  CHECK(ss.population(kExcited) < 1e-10);
  CHECK(std::abs(ss(kMinus, kPlus) - cd(-0.5, 0.0)) < 1e-9);
  CHECK_THROWS_AS(DensityMatrix::dark_state(0.0, 0.0), DomainError);
}

TEST_CASE("steady state is stationary, normalized and positive") {
  const LambdaParams p = physical();
  const DensityMatrix ss = steady_state(p);
  ss.validate();
  const double scale = liouvillian(p).cwiseAbs().maxCoeff();
  CHECK((liouvillian(p) * ss.to_real_vector()).cwiseAbs().maxCoeff() < 1e-12 * scale);
}

TEST_CASE("long-time evolution relaxes onto the steady state") {
  LambdaParams p = physical();
  p.gamma_spin = units::mhz(5.0);
  p.spin_flip_up = p.spin_flip_down = 2e7;
  const DensityMatrix ss = steady_state(p);
  const auto traj = evolve(DensityMatrix::diagonal(1.0, 0.0, 0.0), p, 3e-6, 1e-9, 1e-12);
  CHECK((traj.states.back().matrix() - ss.matrix()).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("underdetermined generator raises NonUniqueSteadyState") {
  LambdaParams p;  // no drive, no decay: every diagonal state is stationary
  CHECK_THROWS_AS(steady_state(p), NonUniqueSteadyState);
}

TEST_CASE("evolve matches the matrix-exponential oracle") {
  std::mt19937_64 rng(4);
  const LambdaParams p = physical();
  const Matrix9 l = liouvillian(p);
  for (int k = 0; k < 5; ++k) {
    const DensityMatrix rho0(oracle::random_density(rng));
    const double t = 80e-9 + 40e-9 * k;
    const auto traj = evolve(rho0, p, t, 1e-11, 1e-13);
    const Matrix9 prop = (l * t).exp();
    const DensityMatrix ref = DensityMatrix::from_real_vector(prop * rho0.to_real_vector());
    CHECK(traj.times.back() == doctest::Approx(t));
    CHECK((traj.states.back().matrix() - ref.matrix()).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("trace, Hermiticity and positivity hold along trajectories") {
  std::mt19937_64 rng(5);
  const LambdaParams p = physical();
  for (int k = 0; k < 100; ++k) {
    const auto traj = evolve(DensityMatrix(oracle::random_density(rng)), p, 50e-9);
    for (const auto& s : traj.states) {
      CHECK(std::abs(s.trace() - 1.0) < 1e-7);
      CHECK(s.hermiticity_error() == 0.0);
      CHECK(s.min_eigenvalue() > -1e-7);
    }
  }
}

TEST_CASE("requested output times are emitted exactly") {
  EvolveOptions opt;
  opt.output_times = {1e-9, 2e-9, 10e-9};
  const auto traj = evolve(DensityMatrix::diagonal(0.5, 0.0, 0.5), physical(), 10e-9, opt);
  REQUIRE(traj.times.size() == 4);
  CHECK(traj.times[0] == 0.0);
  CHECK(traj.times[3] == 10e-9);
  opt.output_times = {2e-9, 1e-9};
  CHECK_THROWS_AS(evolve(DensityMatrix::diagonal(1, 0, 0), physical(), 10e-9, opt), DomainError);
  CHECK_THROWS_AS(evolve(DensityMatrix::diagonal(1, 0, 0), physical(), 0.0), DomainError);
  EvolveOptions tight;
  tight.max_steps = 1;
  CHECK_THROWS_AS(evolve(DensityMatrix::diagonal(1, 0, 0), physical(), 1e-6, tight), IntegrationError);
}

TEST_CASE("rotating-frame geometry is enforced") {
  LambdaParams p = physical();
  CHECK_NOTHROW(p.validate());
  CHECK((p.delta_plus - p.delta_minus) == doctest::Approx(p.omega_b - p.two_photon_delta));
  p.delta_minus += units::mhz(1.0);
  CHECK_THROWS_AS(p.validate(), DomainError);
  CHECK_THROWS_AS(steady_state(p), DomainError);
}

TEST_CASE("density-matrix validation names the broken invariant") {
  Matrix3c m = Matrix3c::Zero();
  m(0, 0) = 1.0;
  m(0, 1) = 0.1;
  CHECK_THROWS_AS(DensityMatrix(m).validate(), NumericalError);
  CHECK_THROWS_AS(DensityMatrix::diagonal(0.5, 0.0, 0.4).validate(), NumericalError);
  CHECK_THROWS_AS(DensityMatrix::diagonal(1.2, 0.0, -0.2).validate(), NumericalError);
  CHECK_NOTHROW(DensityMatrix::diagonal(0.2, 0.3, 0.5).validate());
}

TEST_CASE("adiabatic pipeline is exact on optical resonance") {
  // With Delta+ = Delta- = 0 the elimination only drops terms that vanish in
  // the steady state.
  LambdaParams p = physical();
  p.delta_plus = 0.0;
  p.spin_flip_up = p.spin_flip_down = 0.0;
  p.omega_plus = p.omega_minus = units::mhz(5.0);
  p = p.with_two_photon_delta(p.omega_b);
  const auto ad = self_consistent_adiabatic_steady_state(p);
  const auto ex = steady_state(p);
  CHECK(ad.regime.in_regime());
  CHECK(ad.state.population(kExcited) == doctest::Approx(ex.population(kExcited)).epsilon(1e-6));
  CHECK(std::abs(ad.state(kMinus, kPlus) - ex(kMinus, kPlus)) < 1e-6 * std::abs(ex(kMinus, kPlus)));
  // The closed forms evaluated on exact populations reproduce the exact coherences.
  const double n_plus = ex.population(kPlus) - ex.population(kExcited);
  const double n_minus = ex.population(kMinus) - ex.population(kExcited);
  const auto oc = adiabatic_optical_coherences(n_plus, n_minus, ex(kMinus, kPlus), p);
  CHECK(std::abs(oc.e_plus - ex(kExcited, kPlus)) < 1e-3 * std::abs(ex(kExcited, kPlus)));
  CHECK(std::abs(oc.e_minus - ex(kExcited, kMinus)) < 1e-3 * std::abs(ex(kExcited, kMinus)));
  CHECK(adiabatic_excited_population(n_plus, n_minus, ex(kMinus, kPlus), p) ==
        doctest::Approx(ex.population(kExcited)).epsilon(1e-3));
}

TEST_CASE("power-broadened half-width and regime flags") {
  LambdaParams p = physical();
  p.gamma_spin = 1e5;
  const double hw = analytic_cpt_halfwidth(p);
  CHECK(hw == doctest::Approx(1e5 + (p.omega_plus * p.omega_plus + p.omega_minus * p.omega_minus) /
                                        (4.0 * p.gamma_opt)));
  p.delta_plus = 0.0;
  p = p.with_two_photon_delta(p.omega_b);
  CHECK(check_regime(p).in_regime());
  p.delta_plus = 0.2 * p.gamma_opt;
  p = p.with_two_photon_delta(p.omega_b);
  CHECK(check_regime(p).large_optical_detuning);
  p.delta_plus = 0.0;
  p = p.with_two_photon_delta(p.omega_b);
  p.gamma_spin = 0.2 * p.gamma_opt;
  CHECK(check_regime(p).fast_spin_decay);
}

TEST_CASE("stationary spin coherence formula") {
  LambdaParams p = physical();
  p = p.with_two_photon_delta(p.omega_b - units::mhz(1.0));
  const cd r = adiabatic_spin_coherence(0.5, 0.5, p);
  const double hw = analytic_cpt_halfwidth(p);
  const cd expected = -(p.omega_plus * p.omega_minus / (4.0 * p.gamma_opt)) / (cd(0.0, p.spin_detuning()) + hw);
  CHECK(std::abs(r - expected) < 1e-12 * std::abs(expected));
}
