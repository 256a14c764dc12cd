#include "sivcpt/cpt_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "sivcpt/errors.hpp"
#include "sivcpt/units.hpp"

namespace sivcpt::cpt {

SolverMode parse_mode(const std::string& text) {
  if (text == "exact") return SolverMode::kExact;
  if (text == "adiabatic") return SolverMode::kAdiabatic;
  throw DomainError("unknown solver mode '" + text + "' (expected exact|adiabatic)");
}

std::string to_string(SolverMode mode) { return mode == SolverMode::kExact ? "exact" : "adiabatic"; }

Spectrum compute_cpt_spectrum(const lambda::LambdaParams& params, std::span<const double> delta_grid,
                              SolverMode mode) {
  if (delta_grid.empty()) throw DomainError("compute_cpt_spectrum: empty grid");
  Spectrum out;
  out.axis = AxisKind::kTwoPhotonDetuning;
  out.signal = SignalKind::kPopulation;
  out.x.assign(delta_grid.begin(), delta_grid.end());
  out.y.reserve(out.x.size());
  for (double delta : delta_grid) {
    const lambda::LambdaParams p = params.with_two_photon_delta(delta);
    const lambda::DensityMatrix rho = mode == SolverMode::kExact
                                          ? lambda::steady_state(p)
                                          : lambda::self_consistent_adiabatic_steady_state(p).state;
    out.y.push_back(rho.population(lambda::kExcited));
  }
  out.validate();
  return out;
}

Spectrum add_counting_noise(const Spectrum& spec, double counts_per_unit, std::uint64_t seed) {
  if (!(counts_per_unit > 0.0)) throw DomainError("add_counting_noise: counts_per_unit must be positive");
  std::mt19937_64 rng(seed);
  Spectrum out = spec;
  out.signal = SignalKind::kCounts;
  out.y_err.resize(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double mean = counts_per_unit * std::max(spec.y[i], 0.0);
    if (mean > 0.0) {
      std::poisson_distribution<long long> draw(mean);
      out.y[i] = static_cast<double>(draw(rng));
    } else {
      out.y[i] = 0.0;
    }
    out.y_err[i] = std::sqrt(mean);
  }
  return out;
}

namespace {

struct DipGuess {
  double baseline, depth, center, fwhm;
};

DipGuess guess_dip(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> smooth(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1, hi = std::min(n - 1, i + 1);
    double acc = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) acc += y[k];
    smooth[i] = acc / static_cast<double>(hi - lo + 1);
  }
  const std::size_t edge = std::max<std::size_t>(1, n / 10);
  double left = 0.0, right = 0.0;
  for (std::size_t i = 0; i < edge; ++i) {
    left += smooth[i];
    right += smooth[n - 1 - i];
  }
  DipGuess g{};
  g.baseline = std::max(left, right) / static_cast<double>(edge);
  const auto imin = static_cast<std::size_t>(std::min_element(smooth.begin(), smooth.end()) - smooth.begin());
  g.center = x[imin];
  g.depth = std::max(g.baseline - smooth[imin], 1e-12 * std::abs(g.baseline));
  const double half = g.baseline - 0.5 * g.depth;
  std::size_t l = imin, r = imin;
  while (l > 0 && smooth[l] < half) --l;
  while (r + 1 < n && smooth[r] < half) ++r;
  g.fwhm = x[r] - x[l];
  if (!(g.fwhm > 0.0)) g.fwhm = (x.back() - x.front()) / 10.0;
  return g;
}

}  // namespace

fit::FitResult fit_cpt_dip(const Spectrum& spec, const DipFitOptions& options) {
  spec.validate();
  if (spec.size() < 8) throw DomainError("fit_cpt_dip: need at least 8 points");

  std::vector<double> x_hz(spec.size());
  std::transform(spec.x.begin(), spec.x.end(), x_hz.begin(), units::rad_to_hz);
  const DipGuess g = guess_dip(x_hz, spec.y);
  if (x_hz.back() - x_hz.front() < 2.0 * g.fwhm)
    throw DomainError("fit_cpt_dip: grid must span at least twice the dip width");

  // Fit on offsets from the grid midpoint so the background slope does not
  // trade off against the baseline.
  const double ref = 0.5 * (x_hz.front() + x_hz.back());
  fit::FitProblem prob;
  prob.x = x_hz;
  for (double& v : prob.x) v -= ref;
  prob.y = spec.y;
  if (spec.has_errors()) {
    prob.y_err = spec.y_err;
    // Empty bins carry no variance estimate; weight them as one count.
    if (spec.signal == SignalKind::kCounts)
      for (double& e : prob.y_err) e = std::max(e, 1.0);
  }
  prob.names = {"baseline", "depth", "center_hz", "fwhm_hz"};
  prob.transforms = {fit::Transform::kNone, fit::Transform::kNone, fit::Transform::kNone, fit::Transform::kLog};
  if (options.slope) {
    prob.names.push_back("slope");
    prob.transforms.push_back(fit::Transform::kNone);
    prob.initial = fit::Vector(5);
    prob.initial << g.baseline, g.depth, g.center - ref, g.fwhm, 0.0;
    prob.model = fit::models::sloped_lorentzian_dip;
    prob.jacobian = fit::models::sloped_lorentzian_dip_jacobian;
  } else {
    prob.initial = fit::Vector(4);
    prob.initial << g.baseline, g.depth, g.center - ref, g.fwhm;
    prob.model = fit::models::lorentzian_dip;
    prob.jacobian = fit::models::lorentzian_dip_jacobian;
  }

  fit::FitResult res = fit::least_squares(prob);
  res.estimates[2] += ref;
  if (!res.converged) {
    std::ostringstream os;
    os << "fit_cpt_dip: no convergence after " << res.iterations << " iterations (residual norm "
       << res.residual_norm << ", fwhm estimate " << res.estimate("fwhm_hz") << " Hz)";
    throw FitError(os.str());
  }
  if (!(res.estimate("depth") > 2.0 * res.sigma("depth"))) {
    std::ostringstream os;
    os << "fit_cpt_dip: no dip detected (depth " << res.estimate("depth") << " +- " << res.sigma("depth") << ")";
    throw NoDipDetected(os.str());
  }
  return res;
}

lambda::LambdaParams params_at_power(const lambda::LambdaParams& base, double power, double sideband_ratio,
                                     double rabi_calibration) {
  if (!(power > 0.0)) throw DomainError("power sweep: powers must be positive");
  if (!(rabi_calibration > 0.0)) throw DomainError("power sweep: rabi_calibration must be positive");
  if (!(sideband_ratio > 0.0)) throw DomainError("power sweep: sideband_ratio must be positive");
  lambda::LambdaParams p = base;
  p.omega_minus = std::sqrt(rabi_calibration * power);
  p.omega_plus = sideband_ratio * p.omega_minus;
  return p;
}

std::vector<double> resonance_grid(const lambda::LambdaParams& params, int points, double span_halfwidths) {
  if (points < 2) throw DomainError("resonance_grid: need at least 2 points");
  const double hw = lambda::analytic_cpt_halfwidth(params);
  const double lo = params.omega_b - span_halfwidths * hw;
  const double hi = params.omega_b + span_halfwidths * hw;
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
  return grid;
}

namespace {

void check_power_grid(std::span<const double> power_grid, std::vector<std::string>& warnings) {
  std::set<double> distinct(power_grid.begin(), power_grid.end());
  if (distinct.size() < 2) throw DomainError("power sweep: need at least 2 distinct powers");
  for (double p : power_grid)
    if (!(p > 0.0)) throw DomainError("power sweep: powers must be positive");
  if (distinct.size() < 3)
    warnings.push_back("ill-conditioned: fewer than 3 distinct powers, intercept uncertainty is not constrained");
}

}  // namespace

std::vector<Spectrum> sweep_spectra(const lambda::LambdaParams& base, std::span<const double> power_grid,
                                    const SweepOptions& options) {
  std::vector<Spectrum> out;
  out.reserve(power_grid.size());
  for (double power : power_grid) {
    const auto p = params_at_power(base, power, options.sideband_ratio, options.rabi_calibration);
    const auto grid = resonance_grid(p, options.points_per_spectrum, options.span_halfwidths);
    out.push_back(compute_cpt_spectrum(p, grid, options.mode));
  }
  return out;
}

PowerSweepResult analyze_sweep(std::span<const double> power_grid, std::span<const Spectrum> clean_spectra,
                               const SweepOptions& options) {
  if (power_grid.size() != clean_spectra.size())
    throw DomainError("power sweep: one spectrum per power expected");
  PowerSweepResult out;
  check_power_grid(power_grid, out.warnings);
  const bool noisy = options.noise.counts_per_unit > 0.0;

  for (std::size_t i = 0; i < power_grid.size(); ++i) {
    const Spectrum spec = noisy ? add_counting_noise(clean_spectra[i], options.noise.counts_per_unit,
                                                     options.noise.seed + i)
                                : clean_spectra[i];
    const fit::FitResult dip = fit_cpt_dip(spec, options.dip);
    out.powers.push_back(power_grid[i]);
    out.fwhm_hz.push_back(dip.estimate("fwhm_hz"));
    out.fwhm_err_hz.push_back(dip.sigma("fwhm_hz") * options.noise.error_multiplier);
  }

  const std::vector<double> no_weights;
  out.line_fit = fit::fit_line(out.powers, out.fwhm_hz, noisy ? std::span<const double>(out.fwhm_err_hz)
                                                              : std::span<const double>(no_weights));
  out.intrinsic_fwhm_hz = out.line_fit.estimate("intercept");
  // Scatter beyond the per-point errors widens the reported intervals
  // (Birge ratio); it never narrows them.
  const double birge = noisy ? std::sqrt(std::max(1.0, out.line_fit.reduced_chi2)) : 1.0;
  out.intrinsic_fwhm_err_hz = birge * out.line_fit.sigma("intercept");
  out.slope_hz_per_power = out.line_fit.estimate("slope");
  out.slope_err_hz_per_power = birge * out.line_fit.sigma("slope");
  for (const auto& w : out.line_fit.warnings) out.warnings.push_back(w);
  return out;
}

PowerSweepResult power_sweep(const lambda::LambdaParams& base, std::span<const double> power_grid,
                             const SweepOptions& options) {
  std::vector<std::string> warnings;
  check_power_grid(power_grid, warnings);
  const auto spectra = sweep_spectra(base, power_grid, options);
  return analyze_sweep(power_grid, spectra, options);
}

}  // namespace sivcpt::cpt
