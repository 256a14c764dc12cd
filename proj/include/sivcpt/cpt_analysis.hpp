#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sivcpt/fit_engine.hpp"
#include "sivcpt/lambda_dynamics.hpp"
#include "sivcpt/spectrum.hpp"

namespace sivcpt::cpt {

enum class SolverMode { kExact, kAdiabatic };

SolverMode parse_mode(const std::string& text);
std::string to_string(SolverMode mode);

// rho_ee at every two-photon detuning delta of the grid (rad/s, ascending),
// scanning one field: delta_plus is held and delta_minus follows the
// rotating-frame geometry.
Spectrum compute_cpt_spectrum(const lambda::LambdaParams& params, std::span<const double> delta_grid,
                              SolverMode mode);

// Poisson counts with mean counts_per_unit * y; y_err = sqrt(mean).
// Deterministic for a given seed.
Spectrum add_counting_noise(const Spectrum& spec, double counts_per_unit, std::uint64_t seed);

struct DipFitOptions {
  bool slope = false;  // add a linear background term about the grid midpoint
};

// Inverted Lorentzian on a constant baseline. The returned parameters are
// "baseline", "depth", "center_hz", "fwhm_hz" (plus "slope" per Hz when
// requested); x is converted from rad/s to Hz. Throws NoDipDetected when the
// depth is within 2 sigma of zero and FitError when the fit does not converge.
fit::FitResult fit_cpt_dip(const Spectrum& spec, const DipFitOptions& options = {});

struct NoiseConfig {
  double counts_per_unit = 0.0;  // 0 disables noise
  std::uint64_t seed = 0;        // point i uses seed + i
  double error_multiplier = 1.0; // systematic inflation of the per-point FWHM errors
};

struct SweepOptions {
  SolverMode mode = SolverMode::kExact;
  int points_per_spectrum = 161;
  double span_halfwidths = 10.0;  // grid half-span in analytic half-widths
  double sideband_ratio = 1.0;    // Omega+ / Omega-
  double rabi_calibration = 0.0;  // k: Omega-^2 = k P (rad^2/s^2 per power unit)
  NoiseConfig noise;
  DipFitOptions dip;
};

struct PowerSweepResult {
  std::vector<double> powers;
  std::vector<double> fwhm_hz;
  std::vector<double> fwhm_err_hz;
  double intrinsic_fwhm_hz = 0.0;
  double intrinsic_fwhm_err_hz = 0.0;
  double slope_hz_per_power = 0.0;
  double slope_err_hz_per_power = 0.0;
  fit::FitResult line_fit;
  std::vector<std::string> warnings;
};

// Rabi frequencies for power P: Omega-^2 = k P, Omega+ = ratio Omega-.
lambda::LambdaParams params_at_power(const lambda::LambdaParams& base, double power, double sideband_ratio,
                                     double rabi_calibration);

// Detuning grid centred on two-photon resonance spanning +-span analytic half-widths.
std::vector<double> resonance_grid(const lambda::LambdaParams& params, int points, double span_halfwidths);

// FWHM(P) = L0 + s P fitted to per-power dip widths; L0 is reported as the
// intrinsic linewidth, unclamped. With noise the line is weighted by the dip
// errors and the reported sigmas are multiplied by sqrt(reduced chi^2) when
// that exceeds 1; without noise the fit is unweighted.
PowerSweepResult power_sweep(const lambda::LambdaParams& base, std::span<const double> power_grid,
                             const SweepOptions& options);

// Noiseless spectra for every power, reusable across noise realizations.
std::vector<Spectrum> sweep_spectra(const lambda::LambdaParams& base, std::span<const double> power_grid,
                                    const SweepOptions& options);
PowerSweepResult analyze_sweep(std::span<const double> power_grid, std::span<const Spectrum> clean_spectra,
                               const SweepOptions& options);

}  // namespace sivcpt::cpt
