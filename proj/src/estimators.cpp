#include "chainrisk/estimators.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "chainrisk/errors.hpp"
#include "chainrisk/rng.hpp"

namespace chainrisk {

namespace {

constexpr double kPivotThreshold = 1e-12;

struct CenteredGram {
  Eigen::MatrixXd cov;     // (1/n) sum (x - xbar)(x - xbar)'
  Eigen::VectorXd cov_xy;  // (1/n) sum (x - xbar) y
  Eigen::VectorXd x_bar;
  double y_bar = 0.0;
  double var_y = 0.0;      // (1/n) sum (y - ybar)^2
};

CenteredGram centered_gram(const Dataset& data) {
  if (data.n() < 1) throw InputError("estimator needs n >= 1");
  if (!data.x.allFinite() || !data.y.allFinite())
    throw InputError("dataset has non-finite rows");
  CenteredGram g;
  const double n = static_cast<double>(data.n());
  g.x_bar = data.x.colwise().mean();
  g.y_bar = data.y.mean();
  const Eigen::MatrixXd xc = data.x.rowwise() - g.x_bar.transpose();
  const Eigen::VectorXd yc = data.y.array() - g.y_bar;
  g.cov = xc.transpose() * xc / n;
  g.cov_xy = xc.transpose() * yc / n;
  g.var_y = yc.squaredNorm() / n;
  return g;
}

Eigen::VectorXd ridge_slope(const CenteredGram& g, double lambda) {
  if (lambda == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.cov);
    const double max_ev = es.eigenvalues().maxCoeff();
    if (es.eigenvalues().minCoeff() <= kPivotThreshold * std::max(1.0, max_ev))
      throw RankDeficiencyError(
          "centered Gram matrix is singular at lambda = 0");
    return es.eigenvectors() *
           (es.eigenvectors().transpose() * g.cov_xy).cwiseQuotient(
               es.eigenvalues());
  }
  Eigen::MatrixXd m = g.cov;
  m.diagonal().array() += lambda;
  return m.ldlt().solve(g.cov_xy);
}

// lambda -> 0+ limit of the ridge path: the minimum-norm least-squares slope.
Eigen::VectorXd min_norm_slope(const CenteredGram& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.cov);
  const double thresh =
      kPivotThreshold * std::max(1.0, es.eigenvalues().maxCoeff());
  Eigen::VectorXd proj = es.eigenvectors().transpose() * g.cov_xy;
  for (int i = 0; i < proj.size(); ++i)
    proj[i] = es.eigenvalues()[i] > thresh ? proj[i] / es.eigenvalues()[i] : 0.0;
  return es.eigenvectors() * proj;
}

// Shrinkage consequence of the ridge-path norm lemma, asserted on every fit.
void check_ridge_norm(const Eigen::VectorXd& slope, const CenteredGram& g,
                      double lambda) {
  if (lambda <= 0.0) return;
  const double cap = std::sqrt(g.var_y / (4.0 * lambda));
  if (slope.norm() > cap * (1.0 + 1e-9) + 1e-12)
    throw NumericError("ridge slope norm exceeds the shrinkage cap");
}

}  // namespace

AffineFunction ridge_fit(const Dataset& data, double lambda) {
  if (lambda < 0.0) throw InputError("ridge requires lambda >= 0");
  const CenteredGram g = centered_gram(data);
  const Eigen::VectorXd slope = ridge_slope(g, lambda);
  check_ridge_norm(slope, g, lambda);
  return AffineFunction{slope, g.y_bar - slope.dot(g.x_bar)};
}

ConstrainedFit constrained_lse(const Dataset& data, double slope_bound,
                               double tol) {
  if (slope_bound <= 0.0) throw InputError("constrained_lse requires L > 0");
  if (!(tol > 0.0)) throw InputError("constrained_lse requires tol > 0");
  const CenteredGram g = centered_gram(data);

  auto finish = [&](const Eigen::VectorXd& slope, double lambda, int iters) {
    ConstrainedFit fit;
    fit.fn = AffineFunction{slope, g.y_bar - slope.dot(g.x_bar)};
    fit.lambda = lambda;
    fit.alpha_bound =
        lambda * std::max(0.0, slope_bound * slope_bound - slope.squaredNorm());
    fit.iterations = iters;
    return fit;
  };

  // Interior case: the unconstrained minimizer is feasible. For a singular
  // Gram the lambda -> 0 path limit (minimum-norm solution) plays that role.
  try {
    const Eigen::VectorXd slope = ridge_slope(g, 0.0);
    if (slope.norm() <= slope_bound) return finish(slope, 0.0, 0);
  } catch (const RankDeficiencyError&) {
    const Eigen::VectorXd limit = min_norm_slope(g);
    if (limit.norm() <= slope_bound) return finish(limit, 0.0, 0);
  }

  // |slope(lambda)| <= sqrt(var_y / (4 lambda)), so this lambda already
  // brings the norm inside the ball; the limit norm exceeds the ball, so a
  // bracket below exists at positive lambda.
  double hi = std::max(g.var_y / (4.0 * slope_bound * slope_bound), 1e-12);
  int iters = 0;
  while (ridge_slope(g, hi).norm() > slope_bound && iters++ < 200) hi *= 2.0;

  double lo = hi;
  const double lambda_floor = hi * 1e-14;
  while (ridge_slope(g, lo).norm() <= slope_bound) {
    lo *= 0.5;
    ++iters;
    if (lo < lambda_floor)
      throw NumericError("constrained_lse could not bracket the KKT lambda");
  }

  Eigen::VectorXd best = ridge_slope(g, hi);
  double best_lambda = hi;
  for (; iters < 500; ++iters) {
    const double mid = 0.5 * (lo + hi);
    const Eigen::VectorXd slope = ridge_slope(g, mid);
    const double norm = slope.norm();
    if (norm <= slope_bound) {
      hi = mid;
      best = slope;
      best_lambda = mid;
    } else {
      lo = mid;
    }
    if (std::abs(norm - slope_bound) <= tol && norm <= slope_bound) {
      check_ridge_norm(slope, g, mid);
      return finish(slope, mid, iters + 1);
    }
  }
  if (std::abs(best.norm() - slope_bound) <= 10.0 * tol)
    return finish(best, best_lambda, 500);
  throw NumericError("constrained_lse bisection did not converge: |slope| = " +
                     std::to_string(best.norm()) + " at lambda = " +
                     std::to_string(best_lambda));
}

double empirical_risk(const AffineFunction& f, const Dataset& data,
                      const LossSpec& loss) {
  double acc = 0.0;
  for (int i = 0; i < data.n(); ++i)
    acc += loss_value(loss, data.y[i], f(data.x.row(i)));
  return acc / static_cast<double>(data.n());
}

ExcessRiskEstimate measure_excess_risk(const AffineFunction& f,
                                       const ProblemSpec& spec,
                                       const LossSpec& loss,
                                       const AffineFunction& reference,
                                       const ExcessRiskMethod& method) {
  if (std::holds_alternative<AnalyticMethod>(method)) {
    if (loss.kind != LossKind::squared)
      throw InputError(
          "analytic excess risk supports the squared loss only; use the "
          "Monte-Carlo method");
    return {analytic_excess_risk(spec, f, reference), 0.0};
  }
  const auto& mc = std::get<McMethod>(method);
  if (mc.n_eval < 2) throw InputError("mc excess risk needs n_eval >= 2");
  const Dataset fresh = sample(spec, mc.n_eval, mc.seed);
  double mean = 0.0, m2 = 0.0;
  for (int i = 0; i < fresh.n(); ++i) {
    const double diff = loss_value(loss, fresh.y[i], f(fresh.x.row(i))) -
                        loss_value(loss, fresh.y[i], reference(fresh.x.row(i)));
    const double delta = diff - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (diff - mean);
  }
  const double n = static_cast<double>(fresh.n());
  return {mean, std::sqrt(m2 / (n - 1.0) / n)};
}

LseNormCheck lsenorm_check(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                           double r) {
  if (r <= 0.0) throw InputError("lsenorm_check requires r > 0");
  if (a.rows() != b.size()) throw InputError("dimension mismatch");
  Eigen::MatrixXd m = a.transpose() * a;
  m.diagonal().array() += r;
  LseNormCheck out;
  out.lhs = m.ldlt().solve(a.transpose() * b).norm();
  out.rhs = b.norm() / (2.0 * std::sqrt(r));
  out.holds = out.lhs <= out.rhs + 1e-12;
  return out;
}

}  // namespace chainrisk
