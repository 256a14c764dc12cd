#include "sivcpt/fit_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sivcpt/errors.hpp"

namespace sivcpt::fit {

namespace {

std::string format_point(const Vector& p) {
  std::ostringstream os;
  os.precision(10);
  os << "(";
  for (Eigen::Index i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ")";
  return os.str();
}

bool uses_log(const FitProblem& prob, Eigen::Index i) {
  return !prob.transforms.empty() && prob.transforms[static_cast<std::size_t>(i)] == Transform::kLog;
}

Vector to_params(const FitProblem& prob, const Vector& theta) {
  Vector p = theta;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (uses_log(prob, i)) p[i] = std::exp(theta[i]);
  return p;
}

// d param / d theta.
Vector param_derivative(const FitProblem& prob, const Vector& p) {
  Vector d = Vector::Ones(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (uses_log(prob, i)) d[i] = p[i];
  return d;
}

struct Evaluation {
  Vector residual;  // weighted, (y - f) / sigma
  double cost = 0.0;
};

}  // namespace

void FitProblem::validate() const {
  if (!model) throw DomainError("fit problem: no model");
  if (x.size() != y.size()) throw DomainError("fit problem: x and y lengths differ");
  if (!y_err.empty() && y_err.size() != y.size()) throw DomainError("fit problem: y_err length differs");
  for (double e : y_err)
    if (!(e > 0.0)) throw DomainError("fit problem: y_err must be positive");
  if (static_cast<Eigen::Index>(y.size()) < initial.size())
    throw DomainError("fit problem: fewer points than parameters");
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != initial.size())
    throw DomainError("fit problem: names length differs from parameter count");
  if (!transforms.empty() && static_cast<Eigen::Index>(transforms.size()) != initial.size())
    throw DomainError("fit problem: transforms length differs from parameter count");
  for (Eigen::Index i = 0; i < initial.size(); ++i)
    if (uses_log(*this, i) && !(initial[i] > 0.0))
      throw DomainError("fit problem: log-transformed parameter needs a positive initial value");
}

std::size_t FitResult::index(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DomainError("fit result: unknown parameter " + name);
  return static_cast<std::size_t>(it - names.begin());
}

double FitResult::correlation(std::size_t i, std::size_t j) const {
  const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
  return covariance(a, b) / std::sqrt(covariance(a, a) * covariance(b, b));
}

Matrix numeric_jacobian(const ModelFn& model, const Vector& params, std::span<const double> x,
                        double rel_step, double abs_floor) {
  Matrix jac(static_cast<Eigen::Index>(x.size()), params.size());
  for (Eigen::Index j = 0; j < params.size(); ++j) {
    const double h = std::max(rel_step * std::abs(params[j]), abs_floor);
    Vector up = params, down = params;
    up[j] += h;
    down[j] -= h;
    const Vector fu = model(up, x);
    const Vector fd = model(down, x);
    if (!fu.allFinite() || !fd.allFinite())
      throw FitError("numeric_jacobian: non-finite model output near " + format_point(params));
    jac.col(j) = (fu - fd) / (2.0 * h);
  }
  return jac;
}

FitResult least_squares(const FitProblem& prob) {
  prob.validate();
  const auto n = static_cast<Eigen::Index>(prob.y.size());
  const Eigen::Index m = prob.initial.size();
  const std::span<const double> xs(prob.x);

  Vector inv_sigma = Vector::Ones(n);
  for (Eigen::Index i = 0; i < n && !prob.y_err.empty(); ++i) inv_sigma[i] = 1.0 / prob.y_err[static_cast<std::size_t>(i)];
  const Vector y = Eigen::Map<const Vector>(prob.y.data(), n);

  auto evaluate = [&](const Vector& theta) {
    const Vector p = to_params(prob, theta);
    const Vector f = prob.model(p, xs);
    if (f.size() != n || !f.allFinite())
      throw FitError("least_squares: non-finite model output at parameters " + format_point(p));
    Evaluation e;
    e.residual = (y - f).cwiseProduct(inv_sigma);
    e.cost = e.residual.squaredNorm();
    return e;
  };
  // Jacobian of the weighted prediction with respect to theta.
  auto jacobian = [&](const Vector& theta) {
    const Vector p = to_params(prob, theta);
    Matrix j = prob.jacobian ? prob.jacobian(p, xs) : numeric_jacobian(prob.model, p, xs);
    if (!j.allFinite()) throw FitError("least_squares: non-finite Jacobian at " + format_point(p));
    j = inv_sigma.asDiagonal() * j;
    return Matrix(j * param_derivative(prob, p).asDiagonal());
  };

  Vector theta = prob.initial;
  for (Eigen::Index i = 0; i < m; ++i)
    if (uses_log(prob, i)) theta[i] = std::log(prob.initial[i]);

  Evaluation current = evaluate(theta);
  Matrix jac = jacobian(theta);

  // Fixed column scaling from the starting point.
  Vector scale = jac.colwise().norm().transpose();
  const double max_scale = scale.maxCoeff();
  for (Eigen::Index i = 0; i < m; ++i)
    if (!(scale[i] > 0.0)) scale[i] = max_scale > 0.0 ? max_scale : 1.0;

  auto scaled_normal = [&](const Matrix& j) {
    const Matrix js = j * scale.cwiseInverse().asDiagonal();
    return std::pair<Matrix, Vector>(js.transpose() * js, js.transpose() * current.residual);
  };

  auto [normal, gradient] = scaled_normal(jac);
  double lambda = 1e-3 * normal.diagonal().maxCoeff();
  if (!(lambda > 0.0)) lambda = 1e-3;

  FitResult result;
  int iterations = 0;
  int rejections = 0;
  bool converged = current.cost == 0.0;
  while (!converged && iterations < prob.max_iterations) {
    ++iterations;
    Matrix damped = normal;
    damped.diagonal().array() += lambda;
    const Vector step_scaled = damped.ldlt().solve(gradient);
    const Vector step = step_scaled.cwiseQuotient(scale);
    const Vector trial_theta = theta + step;
    Evaluation trial;
    bool finite = true;
    try {
      trial = evaluate(trial_theta);
    } catch (const FitError&) {
      finite = false;  // treat an overflowing trial like a rejected step
    }
    if (finite && trial.cost <= current.cost) {
      const double decrease = current.cost > 0.0 ? (current.cost - trial.cost) / current.cost : 0.0;
      theta = trial_theta;
      current = trial;
      jac = jacobian(theta);
      std::tie(normal, gradient) = scaled_normal(jac);
      lambda /= 2.0;
      rejections = 0;
      if (decrease < prob.tolerance || current.cost == 0.0) converged = true;
    } else {
      lambda *= 3.0;
      // No decrease is achievable any more: the relative decrease is zero.
      if (++rejections >= 40) converged = true;
    }
  }

  const Vector p = to_params(prob, theta);
  // Unit-diagonal scaling so the singularity test sees correlations, not units.
  const Matrix normal_theta = jac.transpose() * jac;
  const Vector diag = normal_theta.diagonal();
  if (!(diag.minCoeff() > 0.0)) {
    throw FitError("least_squares: singular normal matrix at " + format_point(p) +
                   "; some parameter is unconstrained by the data, consider rescaling or fixing it");
  }
  const Vector inv_sqrt = diag.cwiseSqrt().cwiseInverse();
  const Matrix corr = inv_sqrt.asDiagonal() * normal_theta * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(corr);
  const double max_ev = eig.eigenvalues().maxCoeff();
  const double min_ev = eig.eigenvalues().minCoeff();
  if (!(max_ev > 0.0) || min_ev <= 1e-14 * max_ev) {
    throw FitError("least_squares: singular normal matrix at " + format_point(p) +
                   "; some parameter is unconstrained by the data, consider rescaling or fixing it");
  }
  const Matrix corr_inv = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                          eig.eigenvectors().transpose();
  Matrix cov_theta = inv_sqrt.asDiagonal() * corr_inv * inv_sqrt.asDiagonal();
  const Vector dp = param_derivative(prob, p);
  Matrix cov = dp.asDiagonal() * cov_theta * dp.asDiagonal();

  const auto dof = static_cast<double>(n - m);
  result.chi2 = current.cost;
  result.reduced_chi2 = dof > 0 ? current.cost / dof : 0.0;
  if (prob.y_err.empty()) {
    if (dof > 0)
      cov *= result.reduced_chi2;
    else
      result.warnings.push_back("no degrees of freedom; covariance not scaled by reduced chi-square");
  }
  cov = 0.5 * (cov + cov.transpose());

  result.names = prob.names;
  if (result.names.empty())
    for (Eigen::Index i = 0; i < m; ++i) result.names.push_back("p" + std::to_string(i));
  result.estimates = p;
  result.covariance = cov;
  result.sigmas = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  result.residual_norm = std::sqrt(current.cost);
  result.n_points = static_cast<std::size_t>(n);
  result.converged = converged;
  result.iterations = iterations;
  if (!converged) result.warnings.push_back("iteration limit reached before convergence");
  return result;
}

// ------------------------------------------------------------------ models

namespace models {

Vector line(const Vector& p, std::span<const double> x) {
  Vector out(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) out[static_cast<Eigen::Index>(i)] = p[0] + p[1] * x[i];
  return out;
}

Matrix line_jacobian(const Vector&, std::span<const double> x) {
  Matrix j(static_cast<Eigen::Index>(x.size()), 2);
  for (std::size_t i = 0; i < x.size(); ++i) {
    j(static_cast<Eigen::Index>(i), 0) = 1.0;
    j(static_cast<Eigen::Index>(i), 1) = x[i];
  }
  return j;
}

Vector lorentzian_dip(const Vector& p, std::span<const double> x) {
  const double h2 = 0.25 * p[3] * p[3];
  Vector out(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - p[2];
    out[static_cast<Eigen::Index>(i)] = p[0] - p[1] * h2 / (d * d + h2);
  }
  return out;
}

Matrix lorentzian_dip_jacobian(const Vector& p, std::span<const double> x) {
  const double h = 0.5 * p[3];
  const double h2 = h * h;
  Matrix j(static_cast<Eigen::Index>(x.size()), 4);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double d = x[i] - p[2];
    const double q = d * d + h2;
    j(r, 0) = 1.0;
    j(r, 1) = -h2 / q;
    j(r, 2) = -p[1] * h2 * 2.0 * d / (q * q);
    j(r, 3) = -p[1] * h * d * d / (q * q);
  }
  return j;
}

Vector sloped_lorentzian_dip(const Vector& p, std::span<const double> x) {
  Vector out = lorentzian_dip(p.head(4), x);
  for (std::size_t i = 0; i < x.size(); ++i) out[static_cast<Eigen::Index>(i)] += p[4] * x[i];
  return out;
}

Matrix sloped_lorentzian_dip_jacobian(const Vector& p, std::span<const double> x) {
  Matrix j(static_cast<Eigen::Index>(x.size()), 5);
  j.leftCols(4) = lorentzian_dip_jacobian(p.head(4), x);
  for (std::size_t i = 0; i < x.size(); ++i) j(static_cast<Eigen::Index>(i), 4) = x[i];
  return j;
}

Vector pinned_recovery(const Vector& p, std::span<const double> x) {
  Vector q(3);
  q << 1.0, p[0], p[1];
  return free_recovery(q, x);
}

Matrix pinned_recovery_jacobian(const Vector& p, std::span<const double> x) {
  Vector q(3);
  q << 1.0, p[0], p[1];
  return free_recovery_jacobian(q, x).rightCols(2);
}

Vector free_recovery(const Vector& p, std::span<const double> x) {
  Vector out(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = p[0] - (p[0] - p[1]) * std::exp(-x[i] / p[2]);
  return out;
}

Matrix free_recovery_jacobian(const Vector& p, std::span<const double> x) {
  Matrix j(static_cast<Eigen::Index>(x.size()), 3);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double e = std::exp(-x[i] / p[2]);
    j(r, 0) = 1.0 - e;
    j(r, 1) = e;
    j(r, 2) = -(p[0] - p[1]) * e * x[i] / (p[2] * p[2]);
  }
  return j;
}

}  // namespace models

FitResult fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> y_err) {
  FitProblem prob;
  prob.model = models::line;
  prob.jacobian = models::line_jacobian;
  prob.names = {"intercept", "slope"};
  prob.x.assign(x.begin(), x.end());
  prob.y.assign(y.begin(), y.end());
  prob.y_err.assign(y_err.begin(), y_err.end());
  // Unweighted least-squares start; one Gauss-Newton step is then exact.
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  prob.initial = Vector(2);
  if (det != 0.0)
    prob.initial << (sy * sxx - sx * sxy) / det, (n * sxy - sx * sy) / det;
  else
    prob.initial << (n > 0 ? sy / n : 0.0), 0.0;
  return least_squares(prob);
}

}  // namespace sivcpt::fit
