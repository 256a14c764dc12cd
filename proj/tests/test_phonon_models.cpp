#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sivcpt/errors.hpp"
#include "sivcpt/phonon_models.hpp"

using namespace sivcpt;
using namespace sivcpt::phonon;

namespace {

constexpr double kH = 6.62607015e-34;
constexpr double kKb = 1.380649e-23;

std::vector<double> log_temperatures() {
  std::vector<double> t;
  for (int i = 0; i < 50; ++i) t.push_back(0.05 * std::pow(300.0 / 0.05, i / 49.0));
  return t;
}

ThermalModel model_with_rates(double r1, double r2) {
  ThermalModel m;
  m.rate1 = r1;
  m.rate2 = r2;
  return m;
}

}  // namespace

TEST_CASE("Bose occupation matches the closed form and its limits") {
  for (double t : log_temperatures()) {
    const double x = kH * 50e9 / (kKb * t);
    const double n = thermal_occupation(50e9, t);
    CHECK(n == doctest::Approx(1.0 / std::expm1(x)).epsilon(1e-12));
    CHECK(n >= 0.0);
  }
  CHECK(thermal_occupation(50e9, 0.01) < 1e-100);
  // High-temperature limit kT / h nu.
  CHECK(thermal_occupation(1e9, 300.0) == doctest::Approx(kKb * 300.0 / (kH * 1e9)).epsilon(1e-3));
  CHECK_THROWS_AS(thermal_occupation(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(thermal_occupation(1e9, 0.0), DomainError);
  CHECK_THROWS_AS(thermal_occupation(1e9, -1.0), DomainError);
}

TEST_CASE("absorption and emission forms of the two-phonon rate agree") {
  const ThermalModel m = model_with_rates(0.0, 1e6);
  for (double t : log_temperatures()) {
    const double a = two_phonon_rate(m, t, TwoPhononForm::kAbsorption);
    const double e = two_phonon_rate(m, t, TwoPhononForm::kEmission);
    CHECK(a == doctest::Approx(e).epsilon(1e-10));
    const double nh = thermal_occupation(25e9, t);
    const double n = thermal_occupation(50e9, t);
    CHECK(a == doctest::Approx(1e6 * nh * nh * (1.0 + n)).epsilon(1e-12));
  }
}

TEST_CASE("4 K to 1 K rate ratios discriminate the two mechanisms") {
  const ThermalModel one = model_with_rates(1.0, 0.0);
  const ThermalModel two = model_with_rates(0.0, 1.0);
  const double r1 = single_phonon_rate(one, 4.0) / single_phonon_rate(one, 1.0);
  const double r2 = two_phonon_rate(two, 4.0) / two_phonon_rate(two, 1.0);
  CHECK(r1 == doctest::Approx(24.6).epsilon(0.01));
  CHECK(r2 == doctest::Approx(88.6).epsilon(0.01));
  CHECK(r2 / r1 > 3.0);
  CHECK(combined_relaxation_rate(model_with_rates(2.0, 3.0), 2.0) ==
        doctest::Approx(2.0 * single_phonon_rate(one, 2.0) + 3.0 * two_phonon_rate(two, 2.0)));
}

TEST_CASE("dephasing reaches the bath floor at low temperature") {
  ThermalModel m;
  m.bath_floor = 0.5e6;
  m.dephasing_amplitude = 1.8e6 / thermal_occupation(50e9, 4.0);
  CHECK(dephasing_fwhm(m, 0.15) == doctest::Approx(0.5e6).epsilon(1e-3));
  CHECK(dephasing_fwhm(m, 4.0) == doctest::Approx(2.3e6).epsilon(1e-12));
  double last = 0.0;
  for (double t : log_temperatures()) {
    const double f = dephasing_fwhm(m, t);
    CHECK(f >= last);
    last = f;
  }
}

TEST_CASE("lifetime and the spontaneous emission bound") {
  CHECK(bound_multiplier(1.0, 3e9) == doctest::Approx(13.9).epsilon(0.01));
  CHECK(bound_multiplier(1.0, 3e9) == doctest::Approx(1.0 / std::tanh(kH * 3e9 / (2.0 * kKb))).epsilon(1e-12));
  CHECK(bound_multiplier(0.01, 3e9) == doctest::Approx(1.0).epsilon(1e-5));
  ThermalModel m;
  m.nu_direct = 3e9;
  CHECK(spontaneous_lifetime_bound(30e-6, 1.0, m) == doctest::Approx(0.42e-3).epsilon(0.01));
  CHECK_THROWS_AS(spontaneous_lifetime_bound(-1.0, 1.0, m), DomainError);

  const ThermalModel r = model_with_rates(1e5, 0.0);
  CHECK(spin_lifetime(r, 4.0) == doctest::Approx(1.0 / single_phonon_rate(r, 4.0)));
  CHECK_THROWS_AS(spin_lifetime(model_with_rates(0.0, 0.0), 4.0), InfiniteLifetime);
  CHECK_THROWS_AS(spin_lifetime(model_with_rates(1e5, 0.0), 1e-3), InfiniteLifetime);
}

TEST_CASE("relaxation fit tells the mechanisms apart") {
  const ThermalModel truth = model_with_rates(0.0, 3e6);
  std::vector<RelaxationPoint> data;
  for (double t : {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0}) {
    const double t1 = 1.0 / combined_relaxation_rate(truth, t);
    data.push_back({t, t1, 0.05 * t1});
  }
  const auto good = fit_relaxation_model(data, RelaxationModel::kTwo);
  const auto bad = fit_relaxation_model(data, RelaxationModel::kSingle);
  CHECK(good.estimate("rate2") == doctest::Approx(3e6).epsilon(1e-6));
  CHECK(bad.residual_norm >= 10.0 * std::max(good.residual_norm, 1e-3));
  CHECK(bad.residual_norm >= 10.0);

  const auto both = fit_relaxation_model(data, RelaxationModel::kBoth);
  CHECK(both.names.size() == 2);
}

TEST_CASE("dephasing fit recovers floor and amplitude") {
  ThermalModel m;
  m.bath_floor = 0.5e6;
  m.dephasing_amplitude = 4e7;
  std::vector<DephasingPoint> data;
  for (double t : {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}) data.push_back({t, dephasing_fwhm(m, t), 2e4});
  const auto free = fit_dephasing_model(data);
  CHECK(free.estimate("bath_floor") == doctest::Approx(0.5e6).epsilon(1e-6));
  CHECK(free.estimate("dephasing_amplitude") == doctest::Approx(4e7).epsilon(1e-6));
  const auto pinned = fit_dephasing_model(data, 50e9, true, 0.5e6);
  CHECK(pinned.names.size() == 1);
  CHECK(pinned.estimate("dephasing_amplitude") == doctest::Approx(4e7).epsilon(1e-6));
}

TEST_CASE("fits reject unusable data") {
  std::vector<RelaxationPoint> one{{4.0, 1e-6, 1e-7}};
  CHECK_THROWS_AS(fit_relaxation_model(one, RelaxationModel::kSingle), DomainError);
  std::vector<RelaxationPoint> neg{{1.0, 1e-6, 1e-7}, {2.0, -1e-6, 1e-7}, {3.0, 1e-6, 1e-7}};
  CHECK_THROWS_AS(fit_relaxation_model(neg, RelaxationModel::kSingle), DomainError);
  std::vector<DephasingPoint> bad{{1.0, 1e6, 0.0}, {2.0, 1e6, 1e4}, {3.0, 1e6, 1e4}};
  CHECK_THROWS_AS(fit_dephasing_model(bad), DomainError);
  ThermalModel m;
  m.rate1 = -1.0;
  CHECK_THROWS_AS(m.validate(), DomainError);
}
