#pragma once

#include <numbers>

// Boundary conversions. Inside the library every rate and frequency is an
// angular frequency in rad/s; Hz appears only at I/O.
namespace sivcpt::units {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Exact SI values (2019 redefinition).
inline constexpr double kPlanck = 6.62607015e-34;     // J s
inline constexpr double kBoltzmann = 1.380649e-23;    // J / K
inline constexpr double kHbar = kPlanck / kTwoPi;

constexpr double hz_to_rad(double hz) { return kTwoPi * hz; }
constexpr double rad_to_hz(double rad_per_s) { return rad_per_s / kTwoPi; }

constexpr double ghz(double v) { return hz_to_rad(v * 1e9); }
constexpr double mhz(double v) { return hz_to_rad(v * 1e6); }

}  // namespace sivcpt::units
