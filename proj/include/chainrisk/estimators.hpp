#pragma once

#include <cstdint>
#include <variant>

#include <Eigen/Core>

#include "chainrisk/affine.hpp"
#include "chainrisk/problems.hpp"

namespace chainrisk {

/// Ridge regression on centered data:
///   slope = (lambda I + (1/n) sum (x_i - xbar)(x_i - xbar)')^{-1}
///           ((1/n) sum (x_i - xbar) y_i),  bias = ybar - slope . xbar.
/// lambda = 0 with a singular centered Gram matrix raises RankDeficiencyError.
AffineFunction ridge_fit(const Dataset& data, double lambda);

/// Norm-constrained least squares solved on the ridge path: if the
/// unpenalized solution is feasible it is returned; otherwise lambda is
/// bisected until |slope| = L (KKT stationarity). `alpha_bound` certifies the
/// duality gap of the returned point as an approximate empirical minimizer.
struct ConstrainedFit {
  AffineFunction fn;
  double lambda = 0.0;
  double alpha_bound = 0.0;
  int iterations = 0;
};

ConstrainedFit constrained_lse(const Dataset& data, double slope_bound,
                               double tol = 1e-8);

/// (1/n) sum loss(y_i, f(x_i)). Cross-entropy predictions are clipped to
/// [lambda_clip, 1 - lambda_clip].
double empirical_risk(const AffineFunction& f, const Dataset& data,
                      const LossSpec& loss);

struct AnalyticMethod {};
struct McMethod {
  int n_eval = 1000000;
  std::uint64_t seed = 0;
};
using ExcessRiskMethod = std::variant<AnalyticMethod, McMethod>;

struct ExcessRiskEstimate {
  double value = 0.0;
  double std_error = 0.0;  // 0 for the analytic oracle
};

/// Population excess risk of f against `reference`: exact closed form for the
/// squared loss, otherwise Monte Carlo on a fresh sample with its standard error.
ExcessRiskEstimate measure_excess_risk(const AffineFunction& f,
                                       const ProblemSpec& spec,
                                       const LossSpec& loss,
                                       const AffineFunction& reference,
                                       const ExcessRiskMethod& method);

/// Both sides of |(r I + A'A)^{-1} A' b| <= |b| / (2 sqrt(r)).
struct LseNormCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

LseNormCheck lsenorm_check(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                           double r);

}  // namespace chainrisk
