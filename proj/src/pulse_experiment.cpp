#include "sivcpt/pulse_experiment.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "sivcpt/errors.hpp"
#include "sivcpt/units.hpp"

namespace sivcpt::pulse {

lambda::LambdaParams default_drive() {
  lambda::LambdaParams p;
  p.omega_plus = units::mhz(100.0);
  p.omega_minus = 0.0;
  p.omega_b = units::ghz(3.0);
  p.two_photon_delta = p.omega_b;
  p.gamma_e = 1.0 / 1.7e-9;
  p.gamma_opt = units::mhz(100.0);
  p.gamma_spin = units::mhz(1.0);
  return p;
}

void PulseSequence::validate() const {
  if (!(pulse_duration > 0.0)) throw DomainError("pulse sequence: pulse_duration must be positive");
  if (!(wait_tau >= 0.0)) throw DomainError("pulse sequence: wait_tau must be >= 0");
  if (!(pump_branch > 0.0 && pump_branch < 1.0)) throw DomainError("pulse sequence: pump_branch must lie in (0, 1)");
  if (!(exchange_rate >= 0.0)) throw DomainError("pulse sequence: exchange_rate must be >= 0");
  if (!(temperature_k > 0.0)) throw DomainError("pulse sequence: temperature must be positive");
  if (!(sample_dt > 0.0) || sample_dt * 2.0 > pulse_duration)
    throw DomainError("pulse sequence: sample_dt must be positive and resolve the pulse");
  if (!(peak_window_fraction > 0.0 && peak_window_fraction <= 1.0))
    throw DomainError("pulse sequence: peak_window_fraction must lie in (0, 1]");
  if (drive.omega_minus != 0.0) throw DomainError("pulse sequence: the drive must have Omega- = 0");
  if (!(drive.omega_plus > 0.0)) throw DomainError("pulse sequence: Omega+ must be positive");
  if (!(drive.omega_b > 0.0)) throw DomainError("pulse sequence: omega_b must be positive");
  drive.validate();
}

std::pair<double, double> PulseSequence::exchange_rates() const {
  const double x = units::kHbar * drive.omega_b / (units::kBoltzmann * temperature_k);
  const double boltz = std::exp(-x);
  const double up = exchange_rate / (1.0 + boltz);
  return {up, exchange_rate - up};
}

std::pair<double, double> PulseSequence::thermal_populations() const {
  const double x = units::kHbar * drive.omega_b / (units::kBoltzmann * temperature_k);
  const double p_plus = 1.0 / (1.0 + std::exp(-x));
  return {p_plus, 1.0 - p_plus};
}

lambda::LambdaParams PulseSequence::pulse_params() const {
  lambda::LambdaParams p = drive;
  p.branch_plus = 1.0 - pump_branch;
  const auto [up, down] = exchange_rates();
  p.spin_flip_up = up;
  p.spin_flip_down = down;
  return p;
}

lambda::LambdaParams PulseSequence::dark_params() const {
  lambda::LambdaParams p = pulse_params();
  p.omega_plus = 0.0;
  p.omega_minus = 0.0;
  return p;
}

double exchange_rate_from_model(const phonon::ThermalModel& model, double temperature_k) {
  return phonon::combined_relaxation_rate(model, temperature_k);
}

void FluorescenceTrace::validate() const {
  if (times.size() != signal.size() || times.size() != window.size())
    throw DomainError("fluorescence trace: times, signal and window lengths differ");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw DomainError("fluorescence trace: times must be strictly ascending");
  if (counts)
    for (double s : signal)
      if (s < 0.0) throw DomainError("fluorescence trace: negative counts");
  for (const auto& w : pulses) {
    if (!(w.end > w.start)) throw DomainError("fluorescence trace: empty pulse window");
    if (!times.empty() && (w.start < times.front() - 1e-15 || w.start > times.back()))
      throw DomainError("fluorescence trace: pulse window outside the time span");
  }
}

namespace {

struct PulseRun {
  std::vector<double> signal;
  lambda::DensityMatrix end;
};

int samples_per_pulse(const PulseSequence& seq) {
  return std::max(2, static_cast<int>(std::lround(seq.pulse_duration / seq.sample_dt)));
}

PulseRun run_pulse(const lambda::DensityMatrix& start, const PulseSequence& seq) {
  const int n = samples_per_pulse(seq);
  lambda::EvolveOptions opt;
  for (int k = 1; k < n; ++k) opt.output_times.push_back(k * seq.sample_dt);
  opt.output_times.push_back(seq.pulse_duration);
  const lambda::LambdaParams p = seq.pulse_params();
  const lambda::Trajectory traj = lambda::evolve(start, p, seq.pulse_duration, opt);
  PulseRun run;
  run.signal.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    run.signal.push_back(p.gamma_e * traj.states[static_cast<std::size_t>(k)].population(lambda::kExcited));
  run.end = traj.states.back();
  return run;
}

lambda::DensityMatrix dark_interval(const lambda::DensityMatrix& start, const PulseSequence& seq) {
  if (seq.wait_tau == 0.0) return start;
  const lambda::Matrix9 gen = lambda::liouvillian(seq.dark_params()) * seq.wait_tau;
  const lambda::Matrix9 prop = gen.exp();
  return lambda::DensityMatrix::from_real_vector(prop * start.to_real_vector());
}

FluorescenceTrace assemble(const PulseSequence& seq, const PulseRun& first, const PulseRun& second) {
  FluorescenceTrace tr;
  tr.peak_window_fraction = seq.peak_window_fraction;
  const double t2 = seq.pulse_duration + seq.wait_tau;
  tr.pulses = {{0.0, seq.pulse_duration}, {t2, t2 + seq.pulse_duration}};
  const std::size_t n = first.signal.size();
  for (std::size_t k = 0; k < n; ++k) {
    tr.times.push_back(static_cast<double>(k) * seq.sample_dt);
    tr.signal.push_back(first.signal[k]);
    tr.window.push_back(1);
  }
  for (std::size_t k = 0; k < n; ++k) {
    tr.times.push_back(t2 + static_cast<double>(k) * seq.sample_dt);
    tr.signal.push_back(second.signal[k]);
    tr.window.push_back(2);
  }
  return tr;
}

double leading_peak(const FluorescenceTrace& trace, int pulse) {
  const PulseWindow& w = trace.pulses[static_cast<std::size_t>(pulse - 1)];
  const double stop = w.start + trace.peak_window_fraction * (w.end - w.start);
  double best = -1.0;
  bool any = false;
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    if (trace.window[i] != pulse || trace.times[i] > stop * (1.0 + 1e-12)) continue;
    best = any ? std::max(best, trace.signal[i]) : trace.signal[i];
    any = true;
  }
  if (!any) throw DomainError("extract_peak_ratio: empty peak window for pulse " + std::to_string(pulse));
  return best;
}

double late_level(const FluorescenceTrace& trace) {
  const PulseWindow& w = trace.pulses[0];
  const double from = w.end - 0.2 * (w.end - w.start);
  double acc = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < trace.times.size(); ++i)
    if (trace.window[i] == 1 && trace.times[i] >= from) {
      acc += trace.signal[i];
      ++n;
    }
  return n > 0 ? acc / n : 0.0;
}

}  // namespace

FluorescenceTrace add_trace_noise(const FluorescenceTrace& clean, double scale, std::uint64_t seed) {
  if (!(scale > 0.0)) throw DomainError("add_trace_noise: scale must be positive");
  std::mt19937_64 rng(seed);
  FluorescenceTrace out = clean;
  out.counts = true;
  for (double& s : out.signal) {
    const double mean = scale * std::max(s, 0.0);
    if (mean > 0.0) {
      std::poisson_distribution<long long> draw(mean);
      s = static_cast<double>(draw(rng));
    } else {
      s = 0.0;
    }
  }
  return out;
}

FluorescenceTrace simulate_readout(const PulseSequence& seq, const ReadoutNoise& noise, std::uint64_t seed) {
  seq.validate();
  const auto [p_plus, p_minus] = seq.thermal_populations();
  const PulseRun first = run_pulse(lambda::DensityMatrix::diagonal(p_plus, 0.0, p_minus), seq);
  const PulseRun second = run_pulse(dark_interval(first.end, seq), seq);
  FluorescenceTrace tr = assemble(seq, first, second);
  if (noise.counts_per_peak > 0.0) {
    const double peak = leading_peak(tr, 1);
    if (!(peak > 0.0)) throw NoTransientDetected("simulate_readout: pulse 1 shows no fluorescence");
    tr = add_trace_noise(tr, noise.counts_per_peak / peak, seed);
  }
  return tr;
}

PeakRatio extract_peak_ratio(const FluorescenceTrace& trace) {
  trace.validate();
  if (trace.pulses.size() != 2) throw DomainError("extract_peak_ratio: exactly two pulse windows required");
  if (!(trace.peak_window_fraction > 0.0 && trace.peak_window_fraction <= 1.0))
    throw DomainError("extract_peak_ratio: peak_window_fraction must lie in (0, 1]");
  PeakRatio out;
  out.peak1 = leading_peak(trace, 1);
  out.peak2 = leading_peak(trace, 2);
  const double late = late_level(trace);
  const double margin = trace.counts ? 3.0 * std::sqrt(std::max(out.peak1, 1.0)) : 1e-3 * std::abs(out.peak1);
  if (!(out.peak1 > 0.0) || out.peak1 - late <= margin)
    throw NoTransientDetected("extract_peak_ratio: no fluorescence transient in pulse 1");
  out.ratio = out.peak2 / out.peak1;
  if (trace.counts)
    out.sigma = out.ratio * std::sqrt(1.0 / std::max(out.peak1, 1.0) + 1.0 / std::max(out.peak2, 1.0));
  return out;
}

RecoveryTraces recovery_traces(const PulseSequence& seq, std::span<const double> tau_grid) {
  seq.validate();
  if (tau_grid.empty()) throw DomainError("recovery_traces: empty tau grid");
  RecoveryTraces out;
  const auto [p_plus, p_minus] = seq.thermal_populations();
  const PulseRun first = run_pulse(lambda::DensityMatrix::diagonal(p_plus, 0.0, p_minus), seq);
  for (double tau : tau_grid) {
    if (!(tau >= 0.0)) throw DomainError("recovery_traces: tau must be >= 0");
    PulseSequence s = seq;
    s.wait_tau = tau;
    const PulseRun second = run_pulse(dark_interval(first.end, s), s);
    out.tau.push_back(tau);
    out.traces.push_back(assemble(s, first, second));
  }
  out.pulse1_peak = leading_peak(out.traces.front(), 1);
  return out;
}

RecoveryCurve noisy_recovery_curve(const RecoveryTraces& clean, const ReadoutNoise& noise, std::uint64_t seed) {
  RecoveryCurve curve;
  const bool noisy = noise.counts_per_peak > 0.0;
  if (noisy && !(clean.pulse1_peak > 0.0))
    throw NoTransientDetected("recovery_curve: pulse 1 shows no fluorescence");
  for (std::size_t i = 0; i < clean.traces.size(); ++i) {
    const FluorescenceTrace tr =
        noisy ? add_trace_noise(clean.traces[i], noise.counts_per_peak / clean.pulse1_peak, seed + i)
              : clean.traces[i];
    const PeakRatio pr = extract_peak_ratio(tr);
    curve.tau.push_back(clean.tau[i]);
    curve.ratio.push_back(pr.ratio);
    curve.sigma.push_back(pr.sigma);
  }
  return curve;
}

RecoveryCurve recovery_curve(const PulseSequence& seq, std::span<const double> tau_grid, const ReadoutNoise& noise,
                             std::uint64_t seed) {
  return noisy_recovery_curve(recovery_traces(seq, tau_grid), noise, seed);
}

fit::FitResult fit_recovery(const RecoveryCurve& curve, const RecoveryFitOptions& options) {
  const std::size_t n = curve.tau.size();
  if (n < 4) throw DomainError("fit_recovery: need at least 4 tau values");
  if (curve.ratio.size() != n || curve.sigma.size() != n)
    throw DomainError("fit_recovery: tau, ratio and sigma lengths differ");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return curve.tau[a] < curve.tau[b]; });

  // Start values: the earliest ratio and the 1/e crossing of the recovery.
  const double r0 = std::clamp(curve.ratio[order.front()], 0.01, 0.99);
  const double target = 1.0 - (1.0 - r0) / std::exp(1.0);
  double t1 = 0.0;
  for (std::size_t k = 1; k < n && t1 == 0.0; ++k) {
    const std::size_t a = order[k - 1], b = order[k];
    if (curve.ratio[b] >= target && curve.ratio[a] < target) {
      const double f = (target - curve.ratio[a]) / (curve.ratio[b] - curve.ratio[a]);
      t1 = curve.tau[a] + f * (curve.tau[b] - curve.tau[a]);
    }
  }
  if (!(t1 > 0.0)) {
    const double lo = std::max(curve.tau[order.front()], curve.tau[order.back()] * 1e-3);
    t1 = std::sqrt(lo * curve.tau[order.back()]);
  }

  fit::FitProblem prob;
  prob.x = curve.tau;
  prob.y = curve.ratio;
  if (std::all_of(curve.sigma.begin(), curve.sigma.end(), [](double s) { return s > 0.0; })) prob.y_err = curve.sigma;
  if (options.free_asymptote) {
    prob.names = {"asymptote", "r0", "t1"};
    prob.transforms = {fit::Transform::kNone, fit::Transform::kNone, fit::Transform::kLog};
    prob.initial = fit::Vector(3);
    prob.initial << 1.0, r0, t1;
    prob.model = fit::models::free_recovery;
    prob.jacobian = fit::models::free_recovery_jacobian;
  } else {
    prob.names = {"r0", "t1"};
    prob.transforms = {fit::Transform::kNone, fit::Transform::kLog};
    prob.initial = fit::Vector(2);
    prob.initial << r0, t1;
    prob.model = fit::models::pinned_recovery;
    prob.jacobian = fit::models::pinned_recovery_jacobian;
  }

  fit::FitResult res = fit::least_squares(prob);
  if (!res.converged) {
    std::ostringstream os;
    os << "fit_recovery: no convergence after " << res.iterations << " iterations (residual norm "
       << res.residual_norm << ")";
    throw FitError(os.str());
  }
  const double t1_fit = res.estimate("t1");
  if (curve.tau[order.back()] < 0.2 * t1_fit)
    res.warnings.push_back("ill-conditioned: tau grid lies entirely below T1");
  if (curve.tau[order.front()] > 5.0 * t1_fit)
    res.warnings.push_back("ill-conditioned: tau grid lies entirely above T1");
  return res;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw DomainError("log_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> out(static_cast<std::size_t>(n));
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace sivcpt::pulse
