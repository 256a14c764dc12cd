#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sivcpt/fit_engine.hpp"
#include "sivcpt/lambda_dynamics.hpp"
#include "sivcpt/phonon_models.hpp"

// Two-pulse optical pumping / readout protocol for measuring the ground
// spin lifetime from the recovery of the second pulse's fluorescence peak.
namespace sivcpt::pulse {

// Single-beam drive on |+> <-> |e> (Omega- = 0), resonant, 100 MHz Rabi,
// 1.7 ns excited lifetime, 3 GHz spin splitting.
lambda::LambdaParams default_drive();

struct PulseSequence {
  double pulse_duration = 500e-9;     // s
  double wait_tau = 0.3e-6;           // dark interval, s
  lambda::LambdaParams drive = default_drive();
  double pump_branch = 0.1;           // fraction of Gamma decaying |e> -> |->
  double exchange_rate = 1.0 / 0.3e-6;  // total spin exchange rate 1/T1, 1/s
  double temperature_k = 4.0;         // sets the detailed-balance asymmetry
  double sample_dt = 0.5e-9;          // s
  double peak_window_fraction = 0.2;  // leading part of each pulse searched for the peak

  void validate() const;

  // Detailed balance at omega_B: (up, down) with up = |-> -> |+> and
  // up + down = exchange_rate, down / up = exp(-h nu_B / kB T).
  std::pair<double, double> exchange_rates() const;
  // Thermal (p+, p-) at omega_B and T.
  std::pair<double, double> thermal_populations() const;
  // Drive parameters with the pump branch and exchange rates applied.
  lambda::LambdaParams pulse_params() const;
  lambda::LambdaParams dark_params() const;
};

// 1/T1 from the combined phonon relaxation law.
double exchange_rate_from_model(const phonon::ThermalModel& model, double temperature_k);

struct PulseWindow {
  double start = 0.0;
  double end = 0.0;
};

struct FluorescenceTrace {
  std::vector<double> times;   // s, ascending
  std::vector<double> signal;  // Gamma rho_ee (1/s) or counts
  std::vector<int> window;     // pulse index (1, 2) of every sample
  std::vector<PulseWindow> pulses;
  bool counts = false;
  double peak_window_fraction = 0.2;

  void validate() const;
};

struct ReadoutNoise {
  double counts_per_peak = 0.0;  // mean counts of the pulse-1 peak sample; 0 = noiseless
};

FluorescenceTrace simulate_readout(const PulseSequence& seq, const ReadoutNoise& noise = {},
                                   std::uint64_t seed = 0);

// Poisson counts with mean `scale` * signal per sample.
FluorescenceTrace add_trace_noise(const FluorescenceTrace& clean, double scale, std::uint64_t seed);

struct PeakRatio {
  double ratio = 0.0;
  double sigma = 0.0;  // counting statistics; 0 for noiseless traces
  double peak1 = 0.0;
  double peak2 = 0.0;
};

// Maxima over the leading window of each pulse. Throws DomainError unless
// exactly two pulses with nonempty windows are annotated, and
// NoTransientDetected when pulse 1 shows no peak above its late-pulse level.
PeakRatio extract_peak_ratio(const FluorescenceTrace& trace);

struct RecoveryCurve {
  std::vector<double> tau;
  std::vector<double> ratio;
  std::vector<double> sigma;
};

// One simulated measurement per tau; point i draws noise from seed + i.
RecoveryCurve recovery_curve(const PulseSequence& seq, std::span<const double> tau_grid,
                             const ReadoutNoise& noise = {}, std::uint64_t seed = 0);

// Noiseless pulse-1 / pulse-2 traces for every tau, reusable across seeds.
struct RecoveryTraces {
  std::vector<double> tau;
  std::vector<FluorescenceTrace> traces;
  double pulse1_peak = 0.0;
};
RecoveryTraces recovery_traces(const PulseSequence& seq, std::span<const double> tau_grid);
RecoveryCurve noisy_recovery_curve(const RecoveryTraces& clean, const ReadoutNoise& noise, std::uint64_t seed);

struct RecoveryFitOptions {
  bool free_asymptote = false;
};

// R(tau) = 1 - (1 - R0) exp(-tau / T1) (names "r0", "t1"); with
// free_asymptote the 1 becomes a fitted "asymptote". Weighted by sigma when
// all sigmas are positive. Warns when the grid lies entirely far below or
// above the fitted T1.
fit::FitResult fit_recovery(const RecoveryCurve& curve, const RecoveryFitOptions& options = {});

// n log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace sivcpt::pulse
