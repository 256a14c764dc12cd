#pragma once

#include <vector>

namespace sivcpt {

enum class AxisKind { kTwoPhotonDetuning, kLaserDetuning };
enum class SignalKind { kPopulation, kCounts, kArbitrary };

// Sampled frequency-domain signal. x is in rad/s.
struct Spectrum {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> y_err;  // empty, or one 1-sigma value per point
  AxisKind axis = AxisKind::kTwoPhotonDetuning;
  SignalKind signal = SignalKind::kPopulation;

  std::size_t size() const { return x.size(); }
  bool has_errors() const { return !y_err.empty(); }

  // x strictly ascending, equal lengths, counts nonnegative.
  void validate() const;
};

}  // namespace sivcpt
