#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sivcpt/cpt_analysis.hpp"
#include "sivcpt/lambda_dynamics.hpp"
#include "sivcpt/level_structure.hpp"
#include "sivcpt/phonon_models.hpp"
#include "sivcpt/pulse_experiment.hpp"

// Run configuration. Files use ordinary units (Hz for frequencies, 1/s for
// rates, tesla, kelvin, seconds); everything below is converted to the
// internal rad/s convention on load. Every key is optional and unknown keys
// are rejected.
namespace sivcpt::config {

struct LevelsConfig {
  levels::LevelParams params;
  double ple_linewidth = units::ghz(0.5);  // rad/s FWHM
  double ple_span = units::ghz(200.0);     // rad/s, grid is +-span
  int ple_points = 4001;
};

struct SpectrumConfig {
  cpt::SolverMode mode = cpt::SolverMode::kExact;
  double span_halfwidths = 10.0;
  int points = 161;
  double counts_per_unit = 0.0;
  bool fit = true;
  bool slope = false;
};

struct PowerSweepConfig {
  std::vector<double> powers{25.0, 29.0, 33.0, 37.0, 41.0, 45.0};
  cpt::SweepOptions options;
};

struct TempSweepConfig {
  enum class Mode { kDephasing, kT1 };
  Mode mode = Mode::kDephasing;
  std::vector<double> temperatures;  // K
  phonon::RelaxationModel relaxation_model = phonon::RelaxationModel::kTwo;
  struct Point {
    double temperature_k = 0.0, value = 0.0, error = 0.0;
  };
  std::vector<Point> data;  // FWHM in Hz (dephasing) or T1 in s (t1)
  bool pin_floor = false;
  double pinned_floor_hz = 0.5e6;
};

struct PulseConfig {
  pulse::PulseSequence sequence;
  std::vector<double> tau_grid;  // s
  double counts_per_peak = 1e4;
  bool free_asymptote = false;
  bool exchange_from_thermal = false;  // take 1/T1 from the thermal model at sequence.temperature_k
};

struct BoundConfig {
  double t1_s = 30e-6;
  double temperature_k = 1.0;
  double nu_hz = 3e9;
};

struct RunConfig {
  std::uint64_t seed = 1;
  LevelsConfig levels;
  lambda::LambdaParams lambda = default_lambda();
  SpectrumConfig spectrum;
  PowerSweepConfig power_sweep = default_power_sweep();
  phonon::ThermalModel thermal = default_thermal();
  TempSweepConfig temp_sweep = default_temp_sweep();
  PulseConfig pulse = default_pulse();
  BoundConfig bound;

  // CPT operating point: 100 MHz optical decoherence, 1.7 ns lifetime,
  // 3 GHz spin splitting, 0.5 MHz intrinsic FWHM, total drive 0.1 gamma.
  static lambda::LambdaParams default_lambda();
  // Six powers whose widths span 1.75 to 2.75 MHz, 1e4 counts per unit
  // population per spectrum bin.
  static PowerSweepConfig default_power_sweep();
  // 0.5 MHz floor, 2.35 MHz at 4 K; relaxation amplitudes each give T1 = 0.3 us at 4 K.
  static phonon::ThermalModel default_thermal();
  static TempSweepConfig default_temp_sweep();
  static PulseConfig default_pulse();
};

// Throws ConfigError naming the offending key or value.
RunConfig parse(const nlohmann::json& doc);
RunConfig load(const std::string& path);

}  // namespace sivcpt::config
