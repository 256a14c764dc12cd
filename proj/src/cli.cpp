#include "sivcpt/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "sivcpt/config.hpp"
#include "sivcpt/errors.hpp"
#include "sivcpt/io.hpp"
#include "sivcpt/units.hpp"

namespace sivcpt::cli {

using nlohmann::json;

namespace {

struct Context {
  config::RunConfig cfg;
  std::string hash;
  std::string format = "csv";
};

void emit(io::OutputSet& outs, const Context& ctx, const std::string& stem, const io::Table& table) {
  if (ctx.format == "json")
    outs.add_json(stem + ".json", io::to_json(table, ctx.hash));
  else
    outs.add(stem + ".csv", io::to_csv(table, ctx.hash));
}

json with_hash(json doc, const Context& ctx) {
  doc["config_hash"] = ctx.hash;
  return doc;
}

// ----------------------------------------------------------------- levels

struct LevelsOutcome {
  levels::TransitionTable table;
  double lower_ground_splitting_hz = 0.0;
};

LevelsOutcome cmd_levels(const Context& ctx, io::OutputSet& outs, const std::string& prefix = "") {
  const auto& lc = ctx.cfg.levels;
  const auto ground = levels::eigensystem(lc.params, levels::Manifold::kGround);
  const auto excited = levels::eigensystem(lc.params, levels::Manifold::kExcited);
  LevelsOutcome res;
  res.table = levels::transition_table(ground, excited);
  res.lower_ground_splitting_hz = units::rad_to_hz(ground.lower_splitting());

  io::Table tt{{"label", "lower", "upper", "frequency_hz", "strength", "spin_conserving"}, {}};
  for (const auto& t : res.table.rows)
    tt.add({t.label, static_cast<long long>(t.lower), static_cast<long long>(t.upper), units::rad_to_hz(t.frequency),
            t.strength, static_cast<long long>(t.spin_conserving)});
  emit(outs, ctx, prefix + "transitions", tt);

  std::vector<double> grid(static_cast<std::size_t>(lc.ple_points));
  for (int i = 0; i < lc.ple_points; ++i)
    grid[static_cast<std::size_t>(i)] = -lc.ple_span + 2.0 * lc.ple_span * i / (lc.ple_points - 1);
  const Spectrum ple = levels::ple_spectrum(res.table, lc.ple_linewidth, grid);
  io::Table pt{{"laser_detuning_hz", "intensity"}, {}};
  for (std::size_t i = 0; i < ple.size(); ++i) pt.add({units::rad_to_hz(ple.x[i]), ple.y[i]});
  emit(outs, ctx, prefix + "ple", pt);

  io::Table st{{"manifold", "index", "energy_hz", "sz"}, {}};
  for (const auto* sys : {&ground, &excited})
    for (int i = 0; i < 4; ++i)
      st.add({sys->manifold == levels::Manifold::kGround ? "ground" : "excited", static_cast<long long>(i),
              units::rad_to_hz(sys->energies[static_cast<std::size_t>(i)]), sys->sz[static_cast<std::size_t>(i)]});
  emit(outs, ctx, prefix + "levels", st);
  return res;
}

// --------------------------------------------------------------- spectrum

struct SpectrumOutcome {
  double fwhm_hz = NAN;
  double fwhm_err_hz = NAN;
  double analytic_fwhm_hz = NAN;
  double min_signal = NAN;
};

SpectrumOutcome cmd_spectrum(const Context& ctx, io::OutputSet& outs, const std::string& prefix = "") {
  const auto& sc = ctx.cfg.spectrum;
  const auto& p = ctx.cfg.lambda;
  const auto grid = cpt::resonance_grid(p, sc.points, sc.span_halfwidths);
  Spectrum spec = cpt::compute_cpt_spectrum(p, grid, sc.mode);
  SpectrumOutcome res;
  res.min_signal = *std::min_element(spec.y.begin(), spec.y.end());
  res.analytic_fwhm_hz = 2.0 * units::rad_to_hz(lambda::analytic_cpt_halfwidth(p));
  const bool noisy = sc.counts_per_unit > 0.0;
  if (noisy) spec = cpt::add_counting_noise(spec, sc.counts_per_unit, ctx.cfg.seed);

  io::Table t{{"two_photon_delta_hz", "offset_from_resonance_hz", noisy ? "counts" : "rho_ee"}, {}};
  if (noisy) t.columns.push_back("sigma");
  for (std::size_t i = 0; i < spec.size(); ++i) {
    std::vector<io::Cell> row{units::rad_to_hz(spec.x[i]), units::rad_to_hz(spec.x[i] - p.omega_b), spec.y[i]};
    if (noisy) row.push_back(spec.y_err[i]);
    t.add(std::move(row));
  }
  emit(outs, ctx, prefix + "spectrum", t);

  if (sc.fit) {
    cpt::DipFitOptions opt;
    opt.slope = sc.slope;
    const fit::FitResult f = cpt::fit_cpt_dip(spec, opt);
    res.fwhm_hz = f.estimate("fwhm_hz");
    res.fwhm_err_hz = f.sigma("fwhm_hz");
    const auto regime = lambda::check_regime(p);
    json doc = io::fit_to_json(f);
    doc["mode"] = cpt::to_string(sc.mode);
    doc["analytic_fwhm_hz"] = res.analytic_fwhm_hz;
    doc["regime"] = {{"large_optical_detuning", regime.large_optical_detuning},
                     {"fast_spin_decay", regime.fast_spin_decay}};
    outs.add_json(prefix + "dip_fit.json", with_hash(doc, ctx));
  }
  return res;
}

// ------------------------------------------------------------ power sweep

cpt::PowerSweepResult cmd_power_sweep(const Context& ctx, io::OutputSet& outs, const std::string& prefix = "",
                                      const std::vector<double>* powers_override = nullptr,
                                      bool noiseless = false) {
  const auto& pc = ctx.cfg.power_sweep;
  cpt::SweepOptions opt = pc.options;
  opt.noise.seed = ctx.cfg.seed;
  if (noiseless) opt.noise.counts_per_unit = 0.0;
  const std::vector<double>& powers = powers_override ? *powers_override : pc.powers;
  const auto res = cpt::power_sweep(ctx.cfg.lambda, powers, opt);

  const double gamma = ctx.cfg.lambda.gamma_opt;
  const double slope_expected = (1.0 + opt.sideband_ratio * opt.sideband_ratio) * opt.rabi_calibration /
                                (4.0 * M_PI * gamma);
  const double intercept_expected = ctx.cfg.lambda.gamma_spin / M_PI;

  io::Table t{{"power", "fwhm_hz", "fwhm_err_hz", "analytic_fwhm_hz"}, {}};
  for (std::size_t i = 0; i < res.powers.size(); ++i)
    t.add({res.powers[i], res.fwhm_hz[i], res.fwhm_err_hz[i], intercept_expected + slope_expected * res.powers[i]});
  emit(outs, ctx, prefix + "power_sweep", t);

  json doc;
  doc["mode"] = cpt::to_string(opt.mode);
  doc["noise_counts_per_unit"] = opt.noise.counts_per_unit;
  doc["intrinsic_fwhm_hz"] = res.intrinsic_fwhm_hz;
  doc["intrinsic_fwhm_err_hz"] = res.intrinsic_fwhm_err_hz;
  doc["slope_hz_per_power"] = res.slope_hz_per_power;
  doc["slope_err_hz_per_power"] = res.slope_err_hz_per_power;
  doc["expected_intrinsic_fwhm_hz"] = intercept_expected;
  doc["expected_slope_hz_per_power"] = slope_expected;
  doc["warnings"] = res.warnings;
  doc["line_fit"] = io::fit_to_json(res.line_fit);
  outs.add_json(prefix + "intrinsic_linewidth.json", with_hash(doc, ctx));
  return res;
}

// ------------------------------------------------------------- temp sweep

double relaxation_rate(const phonon::ThermalModel& m, phonon::RelaxationModel which, double t) {
  switch (which) {
    case phonon::RelaxationModel::kSingle: return phonon::single_phonon_rate(m, t);
    case phonon::RelaxationModel::kTwo: return phonon::two_phonon_rate(m, t);
    case phonon::RelaxationModel::kBoth: return phonon::combined_relaxation_rate(m, t);
  }
  return 0.0;
}

struct TempOutcome {
  double ratio_4k_1k = NAN;
  double fwhm_1k_hz = NAN;
  double fwhm_015k_hz = NAN;
};

TempOutcome cmd_temp_sweep(const Context& ctx, io::OutputSet& outs, config::TempSweepConfig::Mode mode,
                           const std::string& prefix = "",
                           std::optional<phonon::RelaxationModel> model_override = std::nullopt) {
  const auto& tc = ctx.cfg.temp_sweep;
  const auto& m = ctx.cfg.thermal;
  TempOutcome res;
  if (mode == config::TempSweepConfig::Mode::kDephasing) {
    io::Table t{{"temperature_k", "n_so", "fwhm_hz"}, {}};
    for (double temp : tc.temperatures)
      t.add({temp, phonon::thermal_occupation(m.nu_so, temp), phonon::dephasing_fwhm(m, temp)});
    emit(outs, ctx, prefix + "dephasing_curve", t);
    res.fwhm_1k_hz = phonon::dephasing_fwhm(m, 1.0);
    res.fwhm_015k_hz = phonon::dephasing_fwhm(m, 0.15);
    outs.add_json(prefix + "dephasing_summary.json",
                  with_hash({{"fwhm_1k_hz", res.fwhm_1k_hz},
                             {"fwhm_0.15k_hz", res.fwhm_015k_hz},
                             {"fwhm_4k_hz", phonon::dephasing_fwhm(m, 4.0)}},
                            ctx));
    if (!tc.data.empty()) {
      std::vector<phonon::DephasingPoint> pts;
      for (const auto& d : tc.data) pts.push_back({d.temperature_k, d.value, d.error});
      const auto f = phonon::fit_dephasing_model(pts, m.nu_so, tc.pin_floor, tc.pinned_floor_hz);
      json doc = io::fit_to_json(f);
      doc["pin_floor"] = tc.pin_floor;
      outs.add_json(prefix + "dephasing_fit.json", with_hash(doc, ctx));
    }
    return res;
  }

  const auto which = model_override.value_or(tc.relaxation_model);
  io::Table t{{"temperature_k", "n_so", "rate_per_s", "t1_s"}, {}};
  for (double temp : tc.temperatures) {
    const double rate = relaxation_rate(m, which, temp);
    t.add({temp, phonon::thermal_occupation(m.nu_so, temp), rate, rate > 0.0 ? 1.0 / rate : INFINITY});
  }
  emit(outs, ctx, prefix + "t1_curve_" + phonon::to_string(which), t);
  res.ratio_4k_1k = relaxation_rate(m, which, 4.0) / relaxation_rate(m, which, 1.0);
  outs.add_json(prefix + "t1_summary_" + phonon::to_string(which) + ".json",
                with_hash({{"model", phonon::to_string(which)},
                           {"rate_ratio_4k_1k", res.ratio_4k_1k},
                           {"rate_4k_per_s", relaxation_rate(m, which, 4.0)},
                           {"rate_1k_per_s", relaxation_rate(m, which, 1.0)}},
                          ctx));

  if (!tc.data.empty()) {
    std::vector<phonon::RelaxationPoint> pts;
    for (const auto& d : tc.data) pts.push_back({d.temperature_k, d.value, d.error});
    const auto f = phonon::fit_relaxation_model(pts, which, m.nu_so);
    json doc = io::fit_to_json(f);
    doc["model"] = phonon::to_string(which);
    json compare = json::object();
    for (auto alt : {phonon::RelaxationModel::kSingle, phonon::RelaxationModel::kTwo}) {
      try {
        compare[phonon::to_string(alt)] = phonon::fit_relaxation_model(pts, alt, m.nu_so).residual_norm;
      } catch (const NumericalError& e) {
        compare[phonon::to_string(alt)] = std::string("fit failed: ") + e.what();
      }
    }
    doc["residual_norm_by_model"] = compare;
    outs.add_json(prefix + "relaxation_fit.json", with_hash(doc, ctx));
  }
  return res;
}

// ----------------------------------------------------------------- t1 sim

struct T1Outcome {
  double t1_s = NAN;
  double t1_err_s = NAN;
  double truth_s = NAN;
};

T1Outcome cmd_t1_sim(const Context& ctx, io::OutputSet& outs, const std::string& prefix = "") {
  const auto& pc = ctx.cfg.pulse;
  pulse::PulseSequence seq = pc.sequence;
  if (pc.exchange_from_thermal) seq.exchange_rate = pulse::exchange_rate_from_model(ctx.cfg.thermal, seq.temperature_k);
  const pulse::ReadoutNoise noise{pc.counts_per_peak};
  const std::uint64_t root = ctx.cfg.seed;

  const auto trace = pulse::simulate_readout(seq, noise, root + pc.tau_grid.size());
  io::Table tt{{"t_s", trace.counts ? "counts" : "signal_per_s", "window"}, {}};
  for (std::size_t i = 0; i < trace.times.size(); ++i)
    tt.add({trace.times[i], trace.signal[i], static_cast<long long>(trace.window[i])});
  emit(outs, ctx, prefix + "trace", tt);

  const auto curve = pulse::recovery_curve(seq, pc.tau_grid, noise, root);
  io::Table rt{{"tau_s", "ratio", "sigma"}, {}};
  for (std::size_t i = 0; i < curve.tau.size(); ++i) rt.add({curve.tau[i], curve.ratio[i], curve.sigma[i]});
  emit(outs, ctx, prefix + "recovery", rt);

  pulse::RecoveryFitOptions fo;
  fo.free_asymptote = pc.free_asymptote;
  const auto f = pulse::fit_recovery(curve, fo);
  T1Outcome res;
  res.t1_s = f.estimate("t1");
  res.t1_err_s = f.sigma("t1");
  res.truth_s = seq.exchange_rate > 0.0 ? 1.0 / seq.exchange_rate : INFINITY;
  json doc = io::fit_to_json(f);
  doc["t1_s"] = res.t1_s;
  doc["t1_err_s"] = res.t1_err_s;
  doc["injected_t1_s"] = res.truth_s;
  doc["counts_per_peak"] = pc.counts_per_peak;
  outs.add_json(prefix + "t1_fit.json", with_hash(doc, ctx));
  return res;
}

// ------------------------------------------------------------------ bound

json bound_doc(double t1, double temp, double nu) {
  phonon::ThermalModel m;
  m.nu_direct = nu;
  return {{"t1_s", t1},
          {"temperature_k", temp},
          {"nu_hz", nu},
          {"multiplier", phonon::bound_multiplier(temp, nu)},
          {"bound_s", phonon::spontaneous_lifetime_bound(t1, temp, m)}};
}

// ------------------------------------------------------- reproduce-paper

void cmd_reproduce(const Context& ctx, io::OutputSet& outs) {
  io::Table summary{{"quantity", "value", "uncertainty", "unit", "expected"}, {}};

  const auto lv = cmd_levels(ctx, outs, "levels/");
  summary.add({"lower_ground_splitting", lv.lower_ground_splitting_hz / 1e9, 0.0, "GHz", 3.0});

  const auto sp = cmd_spectrum(ctx, outs, "spectrum/");
  summary.add({"cpt_fwhm", sp.fwhm_hz / 1e6, sp.fwhm_err_hz / 1e6, "MHz", sp.analytic_fwhm_hz / 1e6});

  const auto noisy = cmd_power_sweep(ctx, outs, "power_sweep/");
  summary.add({"intrinsic_fwhm_noisy", noisy.intrinsic_fwhm_hz / 1e6, noisy.intrinsic_fwhm_err_hz / 1e6, "MHz",
               ctx.cfg.lambda.gamma_spin / M_PI / 1e6});
  const std::vector<double> low_powers{2.5, 5.0, 7.5, 10.0, 12.5, 15.0};
  const auto clean = cmd_power_sweep(ctx, outs, "power_sweep_noiseless/", &low_powers, true);
  summary.add({"intrinsic_fwhm_noiseless", clean.intrinsic_fwhm_hz / 1e6, clean.intrinsic_fwhm_err_hz / 1e6, "MHz",
               ctx.cfg.lambda.gamma_spin / M_PI / 1e6});

  const auto deph = cmd_temp_sweep(ctx, outs, config::TempSweepConfig::Mode::kDephasing, "temp_sweep/");
  summary.add({"dephasing_fwhm_1k", deph.fwhm_1k_hz / 1e6, 0.0, "MHz", 0.652});
  summary.add({"dephasing_fwhm_0.15k", deph.fwhm_015k_hz / 1e6, 0.0, "MHz", 0.5});
  const auto single = cmd_temp_sweep(ctx, outs, config::TempSweepConfig::Mode::kT1, "temp_sweep/",
                                     phonon::RelaxationModel::kSingle);
  const auto two = cmd_temp_sweep(ctx, outs, config::TempSweepConfig::Mode::kT1, "temp_sweep/",
                                  phonon::RelaxationModel::kTwo);
  summary.add({"single_phonon_rate_ratio_4k_1k", single.ratio_4k_1k, 0.0, "", 24.6});
  summary.add({"two_phonon_rate_ratio_4k_1k", two.ratio_4k_1k, 0.0, "", 88.6});

  const auto t1 = cmd_t1_sim(ctx, outs, "t1_sim/");
  summary.add({"t1_recovery", t1.t1_s * 1e6, t1.t1_err_s * 1e6, "us", t1.truth_s * 1e6});

  const auto& b = ctx.cfg.bound;
  const json bd = bound_doc(b.t1_s, b.temperature_k, b.nu_hz);
  outs.add_json("bound.json", with_hash(bd, ctx));
  summary.add({"bound_multiplier", bd["multiplier"].get<double>(), 0.0, "", 13.9});
  summary.add({"spontaneous_lifetime_bound", bd["bound_s"].get<double>() * 1e3, 0.0, "ms", 0.42});

  emit(outs, ctx, "summary", summary);
}

void report(std::ostream& err, const char* kind, const std::string& message, int code) {
  err << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"CPT spectroscopy and spin-relaxation simulator"};
  app.require_subcommand(1);

  struct Common {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::string mode;
    std::string format = "csv";
  } common;
  double t1 = 0.0, temp = 0.0, nu = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON run configuration");
    sub->add_option("--out", common.out_dir, "output directory");
    sub->add_option("--seed", common.seed, "root random seed");
    sub->add_option("--mode", common.mode, "exact|adiabatic (spectra) or dephasing|t1 (temp-sweep)");
    sub->add_option("--format", common.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  };
  std::vector<std::pair<std::string, std::string>> commands{
      {"levels", "transition table and PLE spectrum"},
      {"spectrum", "CPT spectrum and dip fit"},
      {"power-sweep", "CPT linewidth versus optical power"},
      {"temp-sweep", "dephasing or T1 temperature laws and fits"},
      {"t1-sim", "pulsed T1 measurement simulation"},
      {"bound", "bound on the spontaneous emission lifetime"},
      {"reproduce-paper", "all pipelines at the default operating point"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help));
  auto* bound = app.get_subcommand("bound");
  auto* t1_opt = bound->add_option("--t1", t1, "observed T1 (s)");
  auto* temp_opt = bound->add_option("--temp", temp, "temperature (K)");
  auto* nu_opt = bound->add_option("--nu", nu, "transition frequency (Hz)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    report(err, "usage", e.what(), kConfigError);
    return kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    Context ctx;
    json doc = json::object();
    if (!common.config_path.empty()) {
      std::ifstream in(common.config_path);
      if (!in) throw ConfigError("config: cannot open '" + common.config_path + "'");
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError("config: '" + common.config_path + "' is not valid JSON: " + e.what());
      }
    }
    ctx.cfg = config::parse(doc);
    if (common.seed) ctx.cfg.seed = *common.seed;
    ctx.format = common.format;

    auto temp_mode = ctx.cfg.temp_sweep.mode;
    if (!common.mode.empty()) {
      if (command == "spectrum" || command == "power-sweep" || command == "reproduce-paper") {
        try {
          const auto m = cpt::parse_mode(common.mode);
          ctx.cfg.spectrum.mode = m;
          ctx.cfg.power_sweep.options.mode = m;
        } catch (const DomainError& e) {
          throw ConfigError(e.what());
        }
      } else if (command == "temp-sweep") {
        if (common.mode == "dephasing")
          temp_mode = config::TempSweepConfig::Mode::kDephasing;
        else if (common.mode == "t1")
          temp_mode = config::TempSweepConfig::Mode::kT1;
        else
          throw ConfigError("--mode for temp-sweep must be dephasing or t1");
      } else {
        throw ConfigError("--mode is not used by '" + command + "'");
      }
    }

    auto& b = ctx.cfg.bound;
    if (*t1_opt) b.t1_s = t1;
    if (*temp_opt) b.temperature_k = temp;
    if (*nu_opt) b.nu_hz = nu;
    if (command == "bound" && (!(b.t1_s > 0.0) || !(b.temperature_k > 0.0) || !(b.nu_hz > 0.0)))
      throw ConfigError("bound: --t1, --temp and --nu must be positive");

    std::string key = doc.dump();
    key += "|command=" + command + "|seed=" + std::to_string(ctx.cfg.seed) + "|mode=" + common.mode +
           "|format=" + ctx.format;
    if (command == "bound")
      key += "|t1=" + io::format_number(b.t1_s) + "|temp=" + io::format_number(b.temperature_k) +
             "|nu=" + io::format_number(b.nu_hz);
    ctx.hash = io::hex64(io::fnv1a64(key));

    io::OutputSet outs;
    if (command == "levels") {
      cmd_levels(ctx, outs);
    } else if (command == "spectrum") {
      cmd_spectrum(ctx, outs);
    } else if (command == "power-sweep") {
      cmd_power_sweep(ctx, outs);
    } else if (command == "temp-sweep") {
      cmd_temp_sweep(ctx, outs, temp_mode);
    } else if (command == "t1-sim") {
      cmd_t1_sim(ctx, outs);
    } else if (command == "bound") {
      const json bd = with_hash(bound_doc(b.t1_s, b.temperature_k, b.nu_hz), ctx);
      out << bd.dump(2) << '\n';
      outs.add_json("bound.json", bd);
    } else if (command == "reproduce-paper") {
      cmd_reproduce(ctx, outs);
    }
    outs.write_all(common.out_dir);
    return kOk;
  } catch (const ConfigError& e) {
    report(err, "config", e.what(), kConfigError);
    return kConfigError;
  } catch (const DomainError& e) {
    report(err, "domain", e.what(), kConfigError);
    return kConfigError;
  } catch (const NumericalError& e) {
    report(err, "numerical", e.what(), kNumericalError);
    return kNumericalError;
  } catch (const std::exception& e) {
    report(err, "io", e.what(), kIoError);
    return kIoError;
  }
}

}  // namespace sivcpt::cli
