#include "sivcpt/spectrum.hpp"

#include "sivcpt/errors.hpp"

namespace sivcpt {

void Spectrum::validate() const {
  if (y.size() != x.size()) throw DomainError("spectrum: x and y lengths differ");
  if (!y_err.empty() && y_err.size() != x.size())
    throw DomainError("spectrum: y_err length differs from x");
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw DomainError("spectrum: x must be strictly ascending");
  }
  if (signal == SignalKind::kCounts) {
    for (double v : y) {
      if (v < 0.0) throw DomainError("spectrum: negative counts");
    }
  }
}

}  // namespace sivcpt
