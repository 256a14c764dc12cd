#include "sivcpt/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sivcpt/errors.hpp"
#include "sivcpt/units.hpp"

namespace sivcpt::config {

using nlohmann::json;

lambda::LambdaParams RunConfig::default_lambda() {
  lambda::LambdaParams p;
  p.gamma_opt = units::mhz(100.0);
  p.gamma_e = 1.0 / 1.7e-9;
  p.gamma_spin = M_PI * 0.5e6;
  p.omega_b = units::ghz(3.0);
  p.two_photon_delta = p.omega_b;
  p.omega_plus = p.omega_minus = 0.1 * p.gamma_opt / std::sqrt(2.0);
  return p;
}

PowerSweepConfig RunConfig::default_power_sweep() {
  PowerSweepConfig c;
  const double gamma = default_lambda().gamma_opt;
  c.options.rabi_calibration = 5e-4 * gamma * gamma;
  c.options.sideband_ratio = 1.0;
  c.options.noise.counts_per_unit = 1e4;
  return c;
}

phonon::ThermalModel RunConfig::default_thermal() {
  phonon::ThermalModel m;
  m.bath_floor = 0.5e6;
  const double n4 = phonon::thermal_occupation(m.nu_so, 4.0);
  m.dephasing_amplitude = (2.35e6 - m.bath_floor) / n4;
  phonon::ThermalModel unit = m;
  unit.rate1 = unit.rate2 = 1.0;
  const double target = 1.0 / 0.3e-6;
  m.rate1 = target / phonon::single_phonon_rate(unit, 4.0);
  m.rate2 = target / phonon::two_phonon_rate(unit, 4.0);
  return m;
}

TempSweepConfig RunConfig::default_temp_sweep() {
  TempSweepConfig c;
  c.temperatures = pulse::log_grid(0.1, 5.0, 50);
  return c;
}

PulseConfig RunConfig::default_pulse() {
  PulseConfig c;
  c.tau_grid = pulse::log_grid(0.03e-6, 3e-6, 12);
  return c;
}

namespace {

// Strict view of one JSON object: every key read is recorded and finish()
// rejects the rest.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError("config: '" + display() + "' must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key);
  }

  const json& at(const std::string& key) const { return node_.at(key); }
  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number()) throw ConfigError("config: '" + key_path(key) + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError("config: '" + key_path(key) + "' must be finite");
    return d;
  }
  // Hz in the file, rad/s in memory.
  double angular(const std::string& key, double fallback_rad) {
    return units::hz_to_rad(number(key, units::rad_to_hz(fallback_rad)));
  }
  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_integer()) throw ConfigError("config: '" + key_path(key) + "' must be an integer");
    return v.get<int>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_boolean()) throw ConfigError("config: '" + key_path(key) + "' must be true or false");
    return v.get<bool>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_string()) throw ConfigError("config: '" + key_path(key) + "' must be a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_array()) throw ConfigError("config: '" + key_path(key) + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError("config: '" + key_path(key) + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  template <std::size_t N>
  std::array<double, N> fixed(const std::string& key, const std::array<double, N>& fallback, double scale) {
    std::vector<double> dflt;
    for (double d : fallback) dflt.push_back(d / scale);
    const auto v = numbers(key, dflt);
    if (v.size() != N)
      throw ConfigError("config: '" + key_path(key) + "' must have " + std::to_string(N) + " entries");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = v[i] * scale;
    return out;
  }

  void finish() const {
    for (const auto& item : node_.items())
      if (!seen_.count(item.key())) throw ConfigError("config: unknown key '" + key_path(item.key()) + "'");
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void parse_levels(Section& s, LevelsConfig& c) {
  auto& p = c.params;
  p.lambda_so_ground = s.angular("lambda_so_ground_hz", p.lambda_so_ground);
  p.lambda_so_excited = s.angular("lambda_so_excited_hz", p.lambda_so_excited);
  p.b_field = s.fixed<3>("b_field_t", p.b_field, 1.0);
  p.strain_ground = s.fixed<2>("strain_ground_hz", p.strain_ground, units::kTwoPi);
  p.strain_excited = s.fixed<2>("strain_excited_hz", p.strain_excited, units::kTwoPi);
  p.gyromagnetic_spin = s.angular("gyromagnetic_spin_hz_per_t", p.gyromagnetic_spin);
  p.gyromagnetic_orbital = s.angular("gyromagnetic_orbital_hz_per_t", p.gyromagnetic_orbital);
  p.orbital_quenching = s.number("orbital_quenching", p.orbital_quenching);
  c.ple_linewidth = s.angular("ple_linewidth_hz", c.ple_linewidth);
  c.ple_span = s.angular("ple_span_hz", c.ple_span);
  c.ple_points = s.integer("ple_points", c.ple_points);
  s.finish();
  p.validate();
  if (!(c.ple_linewidth > 0.0) || !(c.ple_span > 0.0) || c.ple_points < 2)
    throw ConfigError("config: levels PLE grid needs positive linewidth and span and at least 2 points");
}

void parse_lambda(Section& s, lambda::LambdaParams& p) {
  p.omega_plus = s.angular("omega_plus_hz", p.omega_plus);
  p.omega_minus = s.angular("omega_minus_hz", p.omega_minus);
  p.omega_b = s.angular("omega_b_hz", p.omega_b);
  p.two_photon_delta = s.angular("two_photon_delta_hz", p.omega_b);
  p.delta_plus = s.angular("delta_plus_hz", p.delta_plus);
  p.gamma_opt = s.number("gamma_opt_per_s", p.gamma_opt);
  p.gamma_spin = s.number("gamma_spin_per_s", p.gamma_spin);
  p.gamma_e = s.number("gamma_e_per_s", p.gamma_e);
  p.branch_plus = s.number("branch_plus", p.branch_plus);
  p.spin_flip_up = s.number("spin_flip_up_per_s", p.spin_flip_up);
  p.spin_flip_down = s.number("spin_flip_down_per_s", p.spin_flip_down);
  s.finish();
  p = p.with_two_photon_delta(p.two_photon_delta);
  p.validate();
}

void parse_spectrum(Section& s, SpectrumConfig& c) {
  c.mode = cpt::parse_mode(s.text("mode", cpt::to_string(c.mode)));
  c.span_halfwidths = s.number("span_halfwidths", c.span_halfwidths);
  c.points = s.integer("points", c.points);
  c.counts_per_unit = s.number("counts_per_unit", c.counts_per_unit);
  c.fit = s.boolean("fit", c.fit);
  c.slope = s.boolean("slope", c.slope);
  s.finish();
  if (!(c.span_halfwidths > 0.0) || c.points < 8 || c.counts_per_unit < 0.0)
    throw ConfigError("config: spectrum needs span_halfwidths > 0, points >= 8, counts_per_unit >= 0");
}

void parse_power_sweep(Section& s, PowerSweepConfig& c) {
  auto& o = c.options;
  c.powers = s.numbers("powers", c.powers);
  o.mode = cpt::parse_mode(s.text("mode", cpt::to_string(o.mode)));
  o.sideband_ratio = s.number("sideband_ratio", o.sideband_ratio);
  o.rabi_calibration = units::kTwoPi * units::kTwoPi *
                       s.number("rabi_calibration_hz2", o.rabi_calibration / (units::kTwoPi * units::kTwoPi));
  o.points_per_spectrum = s.integer("points", o.points_per_spectrum);
  o.span_halfwidths = s.number("span_halfwidths", o.span_halfwidths);
  o.noise.counts_per_unit = s.number("counts_per_unit", o.noise.counts_per_unit);
  o.noise.error_multiplier = s.number("error_multiplier", o.noise.error_multiplier);
  o.dip.slope = s.boolean("slope", o.dip.slope);
  s.finish();
  if (c.powers.empty()) throw ConfigError("config: power_sweep.powers must not be empty");
  if (!(o.rabi_calibration > 0.0) || !(o.sideband_ratio > 0.0))
    throw ConfigError("config: power_sweep needs positive rabi_calibration_hz2 and sideband_ratio");
  if (o.points_per_spectrum < 8 || !(o.span_halfwidths > 0.0) || o.noise.counts_per_unit < 0.0 ||
      !(o.noise.error_multiplier > 0.0))
    throw ConfigError("config: power_sweep grid or noise settings out of range");
}

void parse_thermal(Section& s, phonon::ThermalModel& m) {
  m.nu_so = s.number("nu_so_hz", m.nu_so);
  m.dephasing_amplitude = s.number("dephasing_amplitude_hz", m.dephasing_amplitude);
  m.bath_floor = s.number("bath_floor_hz", m.bath_floor);
  m.rate1 = s.number("rate1_per_s", m.rate1);
  m.rate2 = s.number("rate2_per_s", m.rate2);
  m.nu_direct = s.number("nu_direct_hz", m.nu_direct);
  s.finish();
  m.validate();
}

phonon::RelaxationModel parse_relaxation_model(const std::string& t) {
  if (t == "single") return phonon::RelaxationModel::kSingle;
  if (t == "two") return phonon::RelaxationModel::kTwo;
  if (t == "both") return phonon::RelaxationModel::kBoth;
  throw ConfigError("config: temp_sweep.relaxation_model must be single, two or both (got '" + t + "')");
}

void parse_temp_sweep(Section& s, TempSweepConfig& c) {
  const std::string mode = s.text("mode", c.mode == TempSweepConfig::Mode::kDephasing ? "dephasing" : "t1");
  if (mode == "dephasing")
    c.mode = TempSweepConfig::Mode::kDephasing;
  else if (mode == "t1")
    c.mode = TempSweepConfig::Mode::kT1;
  else
    throw ConfigError("config: temp_sweep.mode must be dephasing or t1 (got '" + mode + "')");
  c.temperatures = s.numbers("temperatures_k", c.temperatures);
  c.relaxation_model = parse_relaxation_model(s.text("relaxation_model", phonon::to_string(c.relaxation_model)));
  c.pin_floor = s.boolean("pin_floor", c.pin_floor);
  c.pinned_floor_hz = s.number("pinned_floor_hz", c.pinned_floor_hz);
  if (s.has("data")) {
    const json& arr = s.at("data");
    if (!arr.is_array()) throw ConfigError("config: 'temp_sweep.data' must be an array");
    c.data.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section row(arr[i], "temp_sweep.data[" + std::to_string(i) + "]");
      TempSweepConfig::Point pt;
      pt.temperature_k = row.number("temperature_k", 0.0);
      pt.value = row.number("value", 0.0);
      pt.error = row.number("error", 0.0);
      row.finish();
      if (!(pt.temperature_k > 0.0) || !(pt.error > 0.0))
        throw ConfigError("config: temp_sweep.data entries need temperature_k > 0 and error > 0");
      c.data.push_back(pt);
    }
  }
  s.finish();
  if (c.temperatures.empty()) throw ConfigError("config: temp_sweep.temperatures_k must not be empty");
  for (double t : c.temperatures)
    if (!(t > 0.0)) throw ConfigError("config: temp_sweep.temperatures_k must be positive");
}

void parse_pulse(Section& s, PulseConfig& c) {
  auto& q = c.sequence;
  q.pulse_duration = s.number("pulse_duration_s", q.pulse_duration);
  q.wait_tau = s.number("wait_tau_s", q.wait_tau);
  q.drive.omega_plus = s.angular("rabi_hz", q.drive.omega_plus);
  q.drive.omega_b = s.angular("omega_b_hz", q.drive.omega_b);
  q.drive.two_photon_delta = q.drive.omega_b;
  q.drive.gamma_opt = s.number("gamma_opt_per_s", q.drive.gamma_opt);
  q.drive.gamma_e = s.number("gamma_e_per_s", q.drive.gamma_e);
  q.drive.gamma_spin = s.number("gamma_spin_per_s", q.drive.gamma_spin);
  q.pump_branch = s.number("pump_branch", q.pump_branch);
  q.exchange_rate = s.number("exchange_rate_per_s", q.exchange_rate);
  q.temperature_k = s.number("temperature_k", q.temperature_k);
  q.sample_dt = s.number("sample_dt_s", q.sample_dt);
  q.peak_window_fraction = s.number("peak_window_fraction", q.peak_window_fraction);
  c.tau_grid = s.numbers("tau_s", c.tau_grid);
  c.counts_per_peak = s.number("counts_per_peak", c.counts_per_peak);
  c.free_asymptote = s.boolean("free_asymptote", c.free_asymptote);
  c.exchange_from_thermal = s.boolean("exchange_from_thermal", c.exchange_from_thermal);
  s.finish();
  if (c.tau_grid.empty()) throw ConfigError("config: pulse.tau_s must not be empty");
  for (double t : c.tau_grid)
    if (!(t >= 0.0)) throw ConfigError("config: pulse.tau_s values must be >= 0");
  if (c.counts_per_peak < 0.0) throw ConfigError("config: pulse.counts_per_peak must be >= 0");
}

void parse_bound(Section& s, BoundConfig& c) {
  c.t1_s = s.number("t1_s", c.t1_s);
  c.temperature_k = s.number("temperature_k", c.temperature_k);
  c.nu_hz = s.number("nu_hz", c.nu_hz);
  s.finish();
  if (!(c.t1_s > 0.0) || !(c.temperature_k > 0.0) || !(c.nu_hz > 0.0))
    throw ConfigError("config: bound needs positive t1_s, temperature_k and nu_hz");
}

}  // namespace

RunConfig parse(const json& doc) {
  RunConfig cfg;
  Section root(doc, "");
  try {
    if (root.has("seed")) {
      const json& v = root.at("seed");
      if (!v.is_number_unsigned()) throw ConfigError("config: 'seed' must be a nonnegative integer");
      cfg.seed = v.get<std::uint64_t>();
    }
    auto section = [&](const char* key, auto&& fn) {
      if (root.has(key)) {
        Section s(root.at(key), key);
        fn(s);
      }
    };
    section("levels", [&](Section& s) { parse_levels(s, cfg.levels); });
    section("lambda", [&](Section& s) { parse_lambda(s, cfg.lambda); });
    section("spectrum", [&](Section& s) { parse_spectrum(s, cfg.spectrum); });
    section("power_sweep", [&](Section& s) { parse_power_sweep(s, cfg.power_sweep); });
    section("thermal", [&](Section& s) { parse_thermal(s, cfg.thermal); });
    section("temp_sweep", [&](Section& s) { parse_temp_sweep(s, cfg.temp_sweep); });
    section("pulse", [&](Section& s) { parse_pulse(s, cfg.pulse); });
    section("bound", [&](Section& s) { parse_bound(s, cfg.bound); });
    root.finish();
    cfg.pulse.sequence.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return parse(doc);
}

}  // namespace sivcpt::config
