#include "sivcpt/phonon_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sivcpt/errors.hpp"
#include "sivcpt/units.hpp"

namespace sivcpt::phonon {

double thermal_occupation(double nu_hz, double temperature_k) {
  if (!(nu_hz > 0.0)) throw DomainError("thermal_occupation: frequency must be positive");
  if (!(temperature_k > 0.0)) throw DomainError("thermal_occupation: temperature must be positive");
  const double x = units::kPlanck * nu_hz / (units::kBoltzmann * temperature_k);
  return 1.0 / std::expm1(x);
}

void ThermalModel::validate() const {
  if (!(nu_so > 0.0) || !(nu_direct > 0.0)) throw DomainError("thermal model: frequencies must be positive");
  if (!(dephasing_amplitude >= 0.0) || !(bath_floor >= 0.0) || !(rate1 >= 0.0) || !(rate2 >= 0.0))
    throw DomainError("thermal model: amplitudes must be nonnegative");
}

double dephasing_fwhm(const ThermalModel& model, double temperature_k) {
  model.validate();
  return model.bath_floor + model.dephasing_amplitude * thermal_occupation(model.nu_so, temperature_k);
}

double single_phonon_rate(const ThermalModel& model, double temperature_k) {
  model.validate();
  const double n = thermal_occupation(model.nu_so, temperature_k);
  return model.rate1 * n * (1.0 + n);
}

double two_phonon_rate(const ThermalModel& model, double temperature_k, TwoPhononForm form) {
  model.validate();
  const double n = thermal_occupation(model.nu_so, temperature_k);
  const double n_half = thermal_occupation(0.5 * model.nu_so, temperature_k);
  const double shape = form == TwoPhononForm::kAbsorption ? n_half * n_half * (1.0 + n)
                                                          : n * (1.0 + n_half) * (1.0 + n_half);
  return model.rate2 * shape;
}

double combined_relaxation_rate(const ThermalModel& model, double temperature_k) {
  return single_phonon_rate(model, temperature_k) + two_phonon_rate(model, temperature_k);
}

double spin_lifetime(const ThermalModel& model, double temperature_k) {
  const double rate = combined_relaxation_rate(model, temperature_k);
  if (!(rate > 0.0))
    throw InfiniteLifetime("spin_lifetime: total relaxation rate is zero at T = " +
                           std::to_string(temperature_k) + " K");
  return 1.0 / rate;
}

double bound_multiplier(double temperature_k, double nu_direct_hz) {
  return 1.0 + 2.0 * thermal_occupation(nu_direct_hz, temperature_k);
}

double spontaneous_lifetime_bound(double t1_observed_s, double temperature_k, const ThermalModel& model) {
  if (!(t1_observed_s > 0.0)) throw DomainError("spontaneous_lifetime_bound: T1 must be positive");
  model.validate();
  return t1_observed_s * bound_multiplier(temperature_k, model.nu_direct);
}

std::string to_string(RelaxationModel which) {
  switch (which) {
    case RelaxationModel::kSingle: return "single";
    case RelaxationModel::kTwo: return "two";
    case RelaxationModel::kBoth: return "both";
  }
  return "unknown";
}

fit::FitResult fit_relaxation_model(std::span<const RelaxationPoint> data, RelaxationModel which,
                                    double nu_so_hz) {
  if (data.size() < 3) throw DomainError("fit_relaxation_model: need at least 3 points");
  ThermalModel shape;
  shape.nu_so = nu_so_hz;
  shape.rate1 = 1.0;
  shape.rate2 = 1.0;

  std::vector<double> temps, log_rates, sigmas;
  std::vector<double> single, two;
  for (const auto& pt : data) {
    if (!(pt.temperature_k > 0.0) || !(pt.t1_s > 0.0) || !(pt.t1_err_s > 0.0))
      throw DomainError("fit_relaxation_model: temperatures, T1 and errors must be positive");
    temps.push_back(pt.temperature_k);
    log_rates.push_back(-std::log(pt.t1_s));
    sigmas.push_back(pt.t1_err_s / pt.t1_s);
    single.push_back(single_phonon_rate(shape, pt.temperature_k));
    two.push_back(two_phonon_rate(shape, pt.temperature_k));
  }

  // The temperature axis is carried by index so the basis functions are
  // evaluated once.
  std::vector<double> index(data.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = static_cast<double>(i);

  const bool use1 = which != RelaxationModel::kTwo;
  const bool use2 = which != RelaxationModel::kSingle;
  fit::FitProblem prob;
  prob.x = index;
  prob.y = log_rates;
  prob.y_err = sigmas;
  if (use1) prob.names.push_back("rate1");
  if (use2) prob.names.push_back("rate2");
  prob.transforms.assign(prob.names.size(), fit::Transform::kLog);

  // Start each amplitude from a geometric-mean match of the data.
  auto start = [&](const std::vector<double>& basis) {
    double acc = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i) acc += log_rates[i] - std::log(basis[i]);
    return std::exp(acc / static_cast<double>(basis.size()));
  };
  prob.initial = fit::Vector(static_cast<Eigen::Index>(prob.names.size()));
  if (use1 && use2) {
    prob.initial << 0.5 * start(single), 0.5 * start(two);
  } else {
    prob.initial << start(use1 ? single : two);
  }

  prob.model = [=](const fit::Vector& p, std::span<const double> x) {
    fit::Vector out(static_cast<Eigen::Index>(x.size()));
    for (std::size_t k = 0; k < x.size(); ++k) {
      const auto i = static_cast<std::size_t>(x[k]);
      double rate = 0.0;
      Eigen::Index slot = 0;
      if (use1) rate += p[slot++] * single[i];
      if (use2) rate += p[slot] * two[i];
      out[static_cast<Eigen::Index>(k)] = std::log(rate);
    }
    return out;
  };
  prob.jacobian = [=](const fit::Vector& p, std::span<const double> x) {
    fit::Matrix j(static_cast<Eigen::Index>(x.size()), p.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      const auto i = static_cast<std::size_t>(x[k]);
      const auto r = static_cast<Eigen::Index>(k);
      double rate = 0.0;
      Eigen::Index slot = 0;
      if (use1) rate += p[slot++] * single[i];
      if (use2) rate += p[slot] * two[i];
      slot = 0;
      if (use1) j(r, slot++) = single[i] / rate;
      if (use2) j(r, slot) = two[i] / rate;
    }
    return j;
  };
  return fit::least_squares(prob);
}

fit::FitResult fit_dephasing_model(std::span<const DephasingPoint> data, double nu_so_hz, bool pin_floor,
                                   double pinned_floor_hz) {
  if (data.size() < (pin_floor ? 1u : 2u)) throw DomainError("fit_dephasing_model: too few points");
  std::vector<double> occ, y, err;
  for (const auto& pt : data) {
    if (!(pt.fwhm_err_hz > 0.0)) throw DomainError("fit_dephasing_model: errors must be positive");
    occ.push_back(thermal_occupation(nu_so_hz, pt.temperature_k));
    y.push_back(pin_floor ? pt.fwhm_hz - pinned_floor_hz : pt.fwhm_hz);
    err.push_back(pt.fwhm_err_hz);
  }
  fit::FitProblem prob;
  prob.x = occ;
  prob.y = y;
  prob.y_err = err;
  if (pin_floor) {
    prob.names = {"dephasing_amplitude"};
    prob.initial = fit::Vector::Constant(1, 1e6);
    prob.model = [](const fit::Vector& p, std::span<const double> x) {
      fit::Vector out(static_cast<Eigen::Index>(x.size()));
      for (std::size_t i = 0; i < x.size(); ++i) out[static_cast<Eigen::Index>(i)] = p[0] * x[i];
      return out;
    };
    prob.jacobian = [](const fit::Vector&, std::span<const double> x) {
      return fit::Matrix(Eigen::Map<const fit::Vector>(x.data(), static_cast<Eigen::Index>(x.size())));
    };
  } else {
    prob.names = {"bath_floor", "dephasing_amplitude"};
    prob.initial = fit::Vector(2);
    prob.initial << *std::min_element(y.begin(), y.end()), 1e6;
    prob.model = fit::models::line;
    prob.jacobian = fit::models::line_jacobian;
  }
  return fit::least_squares(prob);
}

}  // namespace sivcpt::phonon
