// Acceptance checks. One PASS/FAIL line per criterion; tolerances are fixed here.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "oracles.hpp"
#include "sivcpt/config.hpp"
#include "sivcpt/cpt_analysis.hpp"
#include "sivcpt/lambda_dynamics.hpp"
#include "sivcpt/level_structure.hpp"
#include "sivcpt/phonon_models.hpp"
#include "sivcpt/pulse_experiment.hpp"
#include "sivcpt/units.hpp"

using namespace sivcpt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

lambda::LambdaParams cpt_point() { return config::RunConfig::default_lambda(); }

Outcome dark_state() {
  lambda::LambdaParams p = cpt_point();
  p.gamma_spin = 0.0;
  p.spin_flip_up = p.spin_flip_down = 0.0;
  p.omega_plus = p.omega_minus = 0.1 * p.gamma_opt / std::sqrt(2.0);
  p = p.with_two_photon_delta(p.omega_b);
  const auto ss = lambda::steady_state(p);
  const double ree = ss.population(lambda::kExcited);
  const double coh_err = std::abs(ss(lambda::kMinus, lambda::kPlus) - lambda::cd(-0.5, 0.0));
  return {ree < 1e-10 && coh_err <= 1e-9, "rho_ee=" + fmt(ree) + " |rho_-+ + 0.5|=" + fmt(coh_err)};
}

Outcome adiabatic_equivalence() {
  double worst = 0.0;
  for (double gs : {1e-4, 1e-3})
    for (double om : {0.05, 0.1, 0.3}) {
      lambda::LambdaParams p = cpt_point();
      p.gamma_spin = gs * p.gamma_opt;
      p.omega_plus = p.omega_minus = om * p.gamma_opt / std::sqrt(2.0);
      p = p.with_two_photon_delta(p.omega_b);
      const auto grid = cpt::resonance_grid(p, 81, 10.0);
      const auto ex = cpt::compute_cpt_spectrum(p, grid, cpt::SolverMode::kExact);
      const auto ad = cpt::compute_cpt_spectrum(p, grid, cpt::SolverMode::kAdiabatic);
      const double contrast =
          *std::max_element(ex.y.begin(), ex.y.end()) - *std::min_element(ex.y.begin(), ex.y.end());
      for (std::size_t i = 0; i < ex.y.size(); ++i) worst = std::max(worst, std::abs(ex.y[i] - ad.y[i]) / contrast);
    }
  return {worst < 0.02, "worst |exact - adiabatic| / contrast=" + fmt(worst)};
}

Outcome power_broadening() {
  const lambda::LambdaParams p = cpt_point();
  cpt::SweepOptions opt = config::RunConfig::default_power_sweep().options;
  opt.noise.counts_per_unit = 0.0;
  const std::vector<double> powers{2.5, 5.0, 7.5, 10.0, 12.5, 15.0};
  const auto res = cpt::power_sweep(p, powers, opt);
  double mean = 0.0, dev = 0.0;
  for (double f : res.fwhm_hz) mean += f / static_cast<double>(res.fwhm_hz.size());
  for (std::size_t i = 0; i < powers.size(); ++i)
    dev = std::max(dev, std::abs(res.fwhm_hz[i] - (res.intrinsic_fwhm_hz + res.slope_hz_per_power * powers[i])));
  const double truth = p.gamma_spin / std::numbers::pi;
  const double slope_truth =
      (1.0 + opt.sideband_ratio * opt.sideband_ratio) * opt.rabi_calibration / (4.0 * p.gamma_opt) / std::numbers::pi;
  const double ierr = std::abs(res.intrinsic_fwhm_hz / truth - 1.0);
  const double serr = std::abs(res.slope_hz_per_power / slope_truth - 1.0);
  return {dev < 0.01 * mean && ierr < 0.02 && serr < 0.02,
          "max dev/mean=" + fmt(dev / mean) + " intercept=" + fmt(res.intrinsic_fwhm_hz) + " Hz (rel " + fmt(ierr) +
              ") slope rel err=" + fmt(serr)};
}

Outcome intrinsic_round_trip() {
  const config::RunConfig cfg;
  const auto& sweep = cfg.power_sweep;
  const auto clean = cpt::sweep_spectra(cfg.lambda, sweep.powers, sweep.options);
  const double truth = cfg.lambda.gamma_spin / std::numbers::pi;
  int in1 = 0, in3 = 0, failed = 0;
  double sigma_sum = 0.0;
  constexpr int kRepeats = 200;
  for (int s = 0; s < kRepeats; ++s) {
    cpt::SweepOptions opt = sweep.options;
    opt.noise.seed = cfg.seed + 1000ull * static_cast<std::uint64_t>(s);
    try {
      const auto r = cpt::analyze_sweep(sweep.powers, clean, opt);
      const double z = std::abs(r.intrinsic_fwhm_hz - truth) / r.intrinsic_fwhm_err_hz;
      in1 += z <= 1.0;
      in3 += z <= 3.0;
      sigma_sum += r.intrinsic_fwhm_err_hz;
    } catch (const std::exception&) {
      ++failed;
    }
  }
  const double f1 = in1 / static_cast<double>(kRepeats), f3 = in3 / static_cast<double>(kRepeats);
  const double mean_sigma = sigma_sum / std::max(1, kRepeats - failed);
  return {f1 >= 0.68 && f3 >= 0.99,
          "within 1 sigma " + std::to_string(in1) + "/200, 3 sigma " + std::to_string(in3) + "/200, failures " +
              std::to_string(failed) + ", mean sigma=" + fmt(mean_sigma) + " Hz"};
}

Outcome bose_numbers() {
  const double n3 = phonon::thermal_occupation(3e9, 1.0);
  const double n50 = phonon::thermal_occupation(50e9, 4.0);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double t = 0.05 * std::pow(300.0 / 0.05, i / 49.0);
    const double n = phonon::thermal_occupation(50e9, t), nh = phonon::thermal_occupation(25e9, t);
    const double a = nh * nh * (1.0 + n), b = n * (1.0 + nh) * (1.0 + nh);
    worst = std::max(worst, std::abs(a - b) / a);
  }
  return {std::abs(n3 - 6.458) <= 0.001 && std::abs(n50 - 1.2166) <= 0.0005 && worst < 1e-12,
          "n(3GHz,1K)=" + fmt(n3) + " n(50GHz,4K)=" + fmt(n50) + " identity worst=" + fmt(worst)};
}

Outcome relaxation_ratios() {
  phonon::ThermalModel m;
  m.rate1 = 1.0;
  const double r1 = phonon::single_phonon_rate(m, 4.0) / phonon::single_phonon_rate(m, 1.0);
  m.rate2 = 1.0;
  const double r2 = phonon::two_phonon_rate(m, 4.0) / phonon::two_phonon_rate(m, 1.0);
  return {std::abs(r1 - 24.6) <= 0.2 && std::abs(r2 - 88.6) <= 0.5, "single=" + fmt(r1) + " two=" + fmt(r2)};
}

Outcome dephasing_plateau() {
  const phonon::ThermalModel m = config::RunConfig::default_thermal();
  const double a = m.dephasing_amplitude, f1 = phonon::dephasing_fwhm(m, 1.0), f015 = phonon::dephasing_fwhm(m, 0.15);
  const bool ok = std::abs(a - 1.521e6) <= 0.0005e6 && std::abs(f1 - 0.652e6) <= 0.0005e6 &&
                  std::abs(f015 - 0.500e6) <= 0.0005e6 && f1 - f015 < 0.16e6;
  return {ok, "A=" + fmt(a) + " Hz, 1 K=" + fmt(f1) + " Hz, 0.15 K=" + fmt(f015) + " Hz"};
}

Outcome t1_round_trip() {
  const config::RunConfig cfg;
  pulse::PulseSequence seq = cfg.pulse.sequence;
  seq.exchange_rate = 1.0 / 0.3e-6;
  const auto clean = pulse::recovery_traces(seq, cfg.pulse.tau_grid);
  const double t1 = pulse::fit_recovery(pulse::noisy_recovery_curve(clean, {}, 0)).estimate("t1");
  const double rel = std::abs(t1 / 0.3e-6 - 1.0);
  int ok = 0;
  for (int s = 0; s < 100; ++s) {
    try {
      const auto curve = pulse::noisy_recovery_curve(clean, {cfg.pulse.counts_per_peak},
                                                     cfg.seed + 100ull * static_cast<std::uint64_t>(s));
      if (std::abs(pulse::fit_recovery(curve).estimate("t1") / 0.3e-6 - 1.0) <= 0.10) ++ok;
    } catch (const std::exception&) {
    }
  }
  return {rel <= 0.01 && ok == 100,
          "noiseless T1=" + fmt(t1) + " s (rel " + fmt(rel) + "), noisy within 10%: " + std::to_string(ok) + "/100"};
}

Outcome evolution_correctness() {
  lambda::LambdaParams p = cpt_point();
  p.delta_plus = units::mhz(15.0);
  p.omega_plus = units::mhz(40.0);
  p.omega_minus = units::mhz(25.0);
  p.spin_flip_up = 1e6;
  p.spin_flip_down = 0.8e6;
  p.branch_plus = 0.4;
  p = p.with_two_photon_delta(p.omega_b - units::mhz(3.0));
  std::mt19937_64 rng(2024);
  const lambda::Matrix9 l = lambda::liouvillian(p);
  double oracle_err = 0.0;
  for (int k = 0; k < 5; ++k) {
    const lambda::DensityMatrix rho0(oracle::random_density(rng));
    const double t = 100e-9 * (k + 1);
    const auto traj = lambda::evolve(rho0, p, t, 1e-11, 1e-13);
    const auto ref = lambda::DensityMatrix::from_real_vector((l * t).exp() * rho0.to_real_vector());
    oracle_err = std::max(oracle_err, (traj.states.back().matrix() - ref.matrix()).cwiseAbs().maxCoeff());
  }
  double trace_err = 0.0, herm_err = 0.0, min_ev = 1.0;
  for (int k = 0; k < 100; ++k) {
    const auto traj = lambda::evolve(lambda::DensityMatrix(oracle::random_density(rng)), p, 50e-9);
    for (const auto& s : traj.states) {
      trace_err = std::max(trace_err, std::abs(s.trace() - 1.0));
      herm_err = std::max(herm_err, s.hermiticity_error());
      min_ev = std::min(min_ev, s.min_eigenvalue());
    }
  }
  return {oracle_err < 1e-8 && trace_err < 1e-9 && herm_err == 0.0 && min_ev > -1e-9,
          "oracle err=" + fmt(oracle_err) + " trace err=" + fmt(trace_err) + " hermiticity err=" + fmt(herm_err) +
              " min eigenvalue=" + fmt(min_ev)};
}

Outcome model_discrimination() {
  const phonon::ThermalModel m = config::RunConfig::default_thermal();
  phonon::ThermalModel two = m;
  two.rate1 = 0.0;
  std::vector<phonon::RelaxationPoint> data;
  for (int i = 0; i < 10; ++i) {
    const double t = 1.0 + 0.4 * i;
    const double t1 = phonon::spin_lifetime(two, t);
    data.push_back({t, t1, 0.05 * t1});
  }
  const double r_single = phonon::fit_relaxation_model(data, phonon::RelaxationModel::kSingle).residual_norm;
  const double r_two = phonon::fit_relaxation_model(data, phonon::RelaxationModel::kTwo).residual_norm;
  const double ratio = r_single / std::max(r_two, 1e-300);
  return {ratio >= 10.0, "residual norms single=" + fmt(r_single) + " two=" + fmt(r_two)};
}

Outcome level_anchors() {
  const auto zero = levels::LevelParams::zero_field();
  const auto g = levels::eigensystem(zero, levels::Manifold::kGround);
  const auto e = levels::eigensystem(zero, levels::Manifold::kExcited);
  const double dg = g.energies[2] - g.energies[0] - zero.lambda_so_ground;
  const double de = e.energies[2] - e.energies[0] - zero.lambda_so_excited;
  double flip = 0.0;
  for (const auto& t : levels::transition_table(g, e).rows)
    if (!t.spin_conserving) flip = std::max(flip, t.strength);
  const levels::LevelParams cal;
  const double split = units::rad_to_hz(levels::eigensystem(cal, levels::Manifold::kGround).lower_splitting());
  // Exact up to the last bit of the eigen-solver's arithmetic.
  const bool exact = std::abs(dg) <= 1e-12 * zero.lambda_so_ground && std::abs(de) <= 1e-12 * zero.lambda_so_excited;
  return {exact && flip == 0.0 && std::abs(split / 3e9 - 1.0) <= 0.05,
          "doublet errors " + fmt(dg) + ", " + fmt(de) + " rad/s; max spin-flip strength=" + fmt(flip) +
              "; lower ground splitting=" + fmt(split) + " Hz"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file()) out[fs::relative(entry.path(), root).string()] = slurp(entry.path());
  return out;
}

Outcome determinism() {
#ifdef SIVCPT_CLI_PATH
  const fs::path base = fs::temp_directory_path() / "sivcpt_acceptance_determinism";
  fs::remove_all(base);
  const std::string bin = SIVCPT_CLI_PATH;
  for (const char* run : {"a", "b"}) {
    const std::string cmd = bin + " reproduce-paper --seed 1 --out " + (base / run).string() + " > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "reproduce-paper failed"};
  }
  const auto a = tree(base / "a"), b = tree(base / "b");
  const bool same = !a.empty() && a == b;
  fs::remove_all(base);
  return {same, std::to_string(a.size()) + " files, " + (same ? "byte-identical" : "differ")};
#else
  return {false, "CLI path not configured"};
#endif
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*check)();
  };
  const Criterion criteria[] = {
      {"1 dark-state exactness", dark_state},
      {"2 adiabatic equivalence", adiabatic_equivalence},
      {"3 power-broadening law", power_broadening},
      {"4 intrinsic-linewidth round trip", intrinsic_round_trip},
      {"5 Bose numbers", bose_numbers},
      {"6 relaxation ratios", relaxation_ratios},
      {"7 dephasing plateau", dephasing_plateau},
      {"8 T1 pipeline round trip", t1_round_trip},
      {"9 evolution correctness", evolution_correctness},
      {"10 model discrimination", model_discrimination},
      {"11 level-structure anchors", level_anchors},
      {"12 determinism", determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.name << "  [" << o.detail << "] (" << fmt(secs) << " s)\n";
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
