#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "chainrisk/affine.hpp"

#include <json.hpp>

namespace chainrisk {

// ---------------------------------------------------------------------------
// Designs
// ---------------------------------------------------------------------------

/// X ~ N(mean, cov).
struct GaussianDesign {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// The skewed three-coordinate design X = [W, Z, 1] with W ~ N(0,1) and
/// Z = -p with probability 1-p, Z = 1-p with probability p. Its kurtosis
/// about the origin along the second coordinate blows up as p -> 0.
struct SkewedBernoulliDesign {
  double p = 0.1;
};

using Design = std::variant<GaussianDesign, SkewedBernoulliDesign>;

// ---------------------------------------------------------------------------
// Problem specification
// ---------------------------------------------------------------------------

/// Generative regression distribution: Y = target_slope . X + target_bias + noise.
/// b_x / b_y are declared psi_2 bounds of X - E[X] and Y - E[Y]; kappa is the
/// smallest eigenvalue of Cov(X) divided by b_x^2.
struct ProblemSpec {
  int dim = 0;
  Design design;
  Eigen::VectorXd target_slope;
  double target_bias = 0.0;
  double noise_sd = 0.0;
  double b_x = 0.0;
  double b_y = 0.0;
  double kappa = 0.0;
  std::string id;

  Eigen::VectorXd mean_x() const;
  Eigen::MatrixXd cov_x() const;
  double mean_y() const;

  /// Throws ConfigError on violated invariants (non-PSD covariance,
  /// kappa * b_x^2 above the smallest covariance eigenvalue, bad design).
  void validate() const;
};

/// Gaussian-design spec with certified psi_2 declarations:
/// b_x = sqrt(8/3 tr(cov)), b_y from the exact Gaussian closed form of Y.
ProblemSpec make_gaussian_spec(const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& cov,
                               const Eigen::VectorXd& target_slope,
                               double target_bias, double noise_sd,
                               const std::string& id = "gaussian");

/// Skewed-Bernoulli spec; psi_2 declarations are independent of p.
ProblemSpec make_mbg_spec(double p, const Eigen::VectorXd& target_slope,
                          double target_bias, double noise_sd,
                          const std::string& id = "mbg");

// psi_2 building blocks used by the certified declarations.
double psi2_gaussian_scalar(double sigma);      // sigma * sqrt(8/3)
double psi2_gaussian_vector_bound(const Eigen::MatrixXd& cov);  // sqrt(8/3 tr)
double psi2_bounded(double magnitude);          // magnitude / sqrt(ln 2)

// ---------------------------------------------------------------------------
// Datasets and losses
// ---------------------------------------------------------------------------

struct Dataset {
  Eigen::MatrixXd x;  // n x d
  Eigen::VectorXd y;  // n
  std::uint64_t seed = 0;
  std::string problem_id;

  int n() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
};

enum class LossKind { squared, absolute, cross_entropy };

struct LossSpec {
  LossKind kind = LossKind::squared;
  double lambda_clip = 0.0;  // cross-entropy only, in (0, 1/2)

  /// Lipschitz constant in the second argument, where defined.
  std::optional<double> lipschitz_r() const;
  /// Strong-convexity modulus in the second argument, where defined.
  std::optional<double> strong_convexity_kappa() const;

  static LossSpec squared() { return {LossKind::squared, 0.0}; }
  static LossSpec absolute() { return {LossKind::absolute, 0.0}; }
  static LossSpec cross_entropy(double lambda_clip);
};

double loss_value(const LossSpec& loss, double y, double prediction);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Draws n i.i.d. pairs. Deterministic given (spec, n, seed) and independent
/// of everything else; the per-call stream is derived from `seed` alone.
Dataset sample(const ProblemSpec& spec, int n, std::uint64_t seed);

/// Exact squared-loss risk difference under the generative model:
///   risk(f) - risk(ref), each equal to
///   (a - a*)' Cov (a - a*) + (a . EX + b - EY)^2 + noise^2.
double analytic_excess_risk(const ProblemSpec& spec, const AffineFunction& f,
                            const AffineFunction& reference);

/// E[W^4] / E[W^2]^2 from scalar samples. Throws NumericError when the
/// empirical second moment vanishes.
double kurtosis_about_origin(std::span<const double> samples);

/// Closed-form kurtosis about the origin of W = f(X) under the spec's design.
double kurtosis_about_origin(const ProblemSpec& spec, const AffineFunction& f);

/// Target function (a*, bias*) as an AffineFunction.
AffineFunction target_function(const ProblemSpec& spec);

// ---------------------------------------------------------------------------
// JSON (schema keys: dim, design.kind, design.params, target_slope,
// target_bias, noise_sd, b_x, b_y, kappa)
// ---------------------------------------------------------------------------

nlohmann::json to_json(const ProblemSpec& spec);
ProblemSpec problem_from_json(const nlohmann::json& j);

}  // namespace chainrisk
