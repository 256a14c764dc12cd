#pragma once

#include <span>
#include <string>
#include <vector>

#include "sivcpt/fit_engine.hpp"

// Temperature laws for phonon-limited spin dephasing and relaxation.
// Frequencies here are ordinary frequencies in Hz (phonon frequencies are
// quoted that way), temperatures in kelvin, rates in 1/s.
namespace sivcpt::phonon {

// Bose-Einstein occupation 1 / (exp(h nu / kB T) - 1). DomainError for
// nu <= 0 or T <= 0 (the T -> 0+ limit is 0).
double thermal_occupation(double nu_hz, double temperature_k);

struct ThermalModel {
  double nu_so = 50e9;               // ground orbital splitting, Hz
  double dephasing_amplitude = 0.0;  // Hz of FWHM per unit occupation
  double bath_floor = 0.0;           // Hz of FWHM, temperature independent
  double rate1 = 0.0;                // single-phonon amplitude, 1/s
  double rate2 = 0.0;                // two-phonon amplitude, 1/s
  double nu_direct = 3e9;            // direct ground-spin transition, Hz

  void validate() const;
};

// bath_floor + A n(nu_so, T), FWHM in Hz.
double dephasing_fwhm(const ThermalModel& model, double temperature_k);

// rate1 n (1 + n) with n = n(nu_so, T).
double single_phonon_rate(const ThermalModel& model, double temperature_k);

enum class TwoPhononForm { kAbsorption, kEmission };

// rate2 n_half^2 (1 + n) (absorption) or rate2 n (1 + n_half)^2 (emission),
// with n_half the occupation at nu_so / 2. The two forms are equal.
double two_phonon_rate(const ThermalModel& model, double temperature_k,
                       TwoPhononForm form = TwoPhononForm::kAbsorption);

double combined_relaxation_rate(const ThermalModel& model, double temperature_k);

// 1 / combined rate; InfiniteLifetime when the rate is zero.
double spin_lifetime(const ThermalModel& model, double temperature_k);

// Upper bound t1 (1 + 2 n(nu_direct, T)) on how short the spontaneous
// emission lifetime of the direct transition can be, given an observed T1.
double spontaneous_lifetime_bound(double t1_observed_s, double temperature_k, const ThermalModel& model);
double bound_multiplier(double temperature_k, double nu_direct_hz);

struct RelaxationPoint {
  double temperature_k = 0.0;
  double t1_s = 0.0;
  double t1_err_s = 0.0;
};

enum class RelaxationModel { kSingle, kTwo, kBoth };

std::string to_string(RelaxationModel which);

// Weighted least squares on log(1/T1) with sigma = t1_err / t1, amplitudes
// fitted in log space (names "rate1", "rate2").
fit::FitResult fit_relaxation_model(std::span<const RelaxationPoint> data, RelaxationModel which,
                                    double nu_so_hz = 50e9);

struct DephasingPoint {
  double temperature_k = 0.0;
  double fwhm_hz = 0.0;
  double fwhm_err_hz = 0.0;
};

// bath_floor + A n(nu_so, T) fitted to intrinsic linewidths (names
// "bath_floor", "dephasing_amplitude"); with pin_floor the floor is held at
// `pinned_floor_hz` and only the amplitude is fitted.
fit::FitResult fit_dephasing_model(std::span<const DephasingPoint> data, double nu_so_hz = 50e9,
                                   bool pin_floor = false, double pinned_floor_hz = 0.0);

}  // namespace sivcpt::phonon
