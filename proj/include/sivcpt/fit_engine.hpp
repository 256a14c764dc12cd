#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sivcpt::fit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Predicted y at every x for a parameter vector.
using ModelFn = std::function<Vector(const Vector& params, std::span<const double> x)>;
// d prediction / d param, one row per x.
using JacobianFn = std::function<Matrix(const Vector& params, std::span<const double> x)>;

// Positive-only parameters are optimized in log space.
enum class Transform { kNone, kLog };

struct FitProblem {
  ModelFn model;
  JacobianFn jacobian;  // optional; central differences when empty
  std::vector<std::string> names;
  Vector initial;
  std::vector<Transform> transforms;  // empty = all kNone
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> y_err;  // empty = unit weights, covariance scaled by reduced chi^2
  int max_iterations = 500;
  double tolerance = 1e-12;  // on relative decrease of the accepted cost

  void validate() const;
};

struct FitResult {
  std::vector<std::string> names;
  Vector estimates;
  Vector sigmas;
  Matrix covariance;
  double residual_norm = 0.0;  // sqrt of weighted sum of squared residuals
  double chi2 = 0.0;
  double reduced_chi2 = 0.0;
  std::size_t n_points = 0;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> warnings;

  std::size_t index(const std::string& name) const;
  double estimate(const std::string& name) const { return estimates[index(name)]; }
  double sigma(const std::string& name) const { return sigmas[index(name)]; }
  double correlation(std::size_t i, std::size_t j) const;
};

// Levenberg-Marquardt: the problem is column-scaled at the initial point,
// damping starts at 1e-3 times the largest diagonal entry of the scaled
// normal matrix, is tripled on a rejected step and halved on an accepted one.
// Throws FitError on non-finite model output or a singular normal matrix.
FitResult least_squares(const FitProblem& problem);

// Central differences with per-parameter step max(rel_step |p|, abs_floor).
Matrix numeric_jacobian(const ModelFn& model, const Vector& params, std::span<const double> x,
                        double rel_step = 1e-6, double abs_floor = 1e-12);

// Models with registered analytic Jacobians.
namespace models {

// y = a + b x; params (intercept, slope).
Vector line(const Vector& p, std::span<const double> x);
Matrix line_jacobian(const Vector& p, std::span<const double> x);

// y = B - D (w/2)^2 / ((x - x0)^2 + (w/2)^2); params (baseline, depth, center, fwhm).
Vector lorentzian_dip(const Vector& p, std::span<const double> x);
Matrix lorentzian_dip_jacobian(const Vector& p, std::span<const double> x);

// As lorentzian_dip plus a linear background term s x; params (..., slope).
Vector sloped_lorentzian_dip(const Vector& p, std::span<const double> x);
Matrix sloped_lorentzian_dip_jacobian(const Vector& p, std::span<const double> x);

// R = 1 - (1 - R0) exp(-t / T1); params (r0, t1).
Vector pinned_recovery(const Vector& p, std::span<const double> x);
Matrix pinned_recovery_jacobian(const Vector& p, std::span<const double> x);

// R = A - (A - R0) exp(-t / T1); params (asymptote, r0, t1).
Vector free_recovery(const Vector& p, std::span<const double> x);
Matrix free_recovery_jacobian(const Vector& p, std::span<const double> x);

}  // namespace models

// Weighted straight-line fit (unit weights when y_err is empty).
FitResult fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> y_err);

}  // namespace sivcpt::fit
