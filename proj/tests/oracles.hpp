#pragma once

// Independent reference computations used by the tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Cyclic Jacobi rotations on a real symmetric matrix; returns sorted eigenvalues.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

// Eigenvalues of a complex Hermitian matrix through its real 2n x 2n
// embedding [[Re, -Im], [Im, Re]]; every eigenvalue appears twice there.
template <class M>
std::vector<double> hermitian_eigenvalues(const M& h) {
  const auto n = static_cast<std::size_t>(h.rows());
  std::vector<std::vector<double>> a(2 * n, std::vector<double>(2 * n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto z = h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      a[i][j] = z.real();
      a[i + n][j + n] = z.real();
      a[i][j + n] = -z.imag();
      a[i + n][j] = z.imag();
    }
  const auto doubled = jacobi_eigenvalues(a);
  std::vector<double> out;
  for (std::size_t i = 0; i < doubled.size(); i += 2) out.push_back(0.5 * (doubled[i] + doubled[i + 1]));
  return out;
}

// Random density matrix: G G^dagger / tr with complex Gaussian G.
inline Eigen::Matrix3cd random_density(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Matrix3cd m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = {g(rng), g(rng)};
  Eigen::Matrix3cd rho = m * m.adjoint();
  return rho / rho.trace().real();
}

}  // namespace oracle
