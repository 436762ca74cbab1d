#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "chainrisk/covering.hpp"
#include "chainrisk/report.hpp"

namespace chainrisk {

/// Inputs for the chaining-type process bounds. The S = +infinity case uses
/// the "infinity * 0 = 0" convention and requires delta = eps.
struct ProcessBoundInput {
  int q = 2;                 // psi-increment exponent, {1, 2}
  double s = 0.0;            // increment coefficient, may be +infinity
  double t = 0.0;            // Lipschitz envelope bound
  double theta = 0.0;        // moment parameter
  double gamma = 0.1;
  EntropyFunction entropy;
  double eps = 0.0;
  double delta = 0.0;
  double beta = 0.0;         // radius for the plain chaining bound

  void validate(bool needs_beta) const;
};

/// Max of m variables with psi_q norms <= sigma exceeds
/// sigma (ln(2m/gamma))^{1/q} with probability at most gamma.
double finite_max_bound_subgaussian(double sigma, long m, double gamma, int q);

/// Max of m variables with E[exp(W/theta)] <= 1 exceeds theta ln(m/gamma)
/// with probability at most gamma.
double finite_max_bound_moment(double theta, long m, double gamma);

/// Plain chaining tail bound over a class of radius beta:
///   4 S int_delta^{beta/2} (H(z) + ln(4 beta / (z gamma)))^{1/q} dz + 4 delta T.
double chaining_tail_bound(const ProcessBoundInput& input);

/// Chaining with a moment-condition first step:
///   theta (H(eps) + ln(2/gamma))
///   + 8 S int_delta^eps (2H(z) + ln(16 eps/(z gamma)))^{1/q} dz + 8 delta T.
BoundReport sup_process_bound(const ProcessBoundInput& input);

// ---------------------------------------------------------------------------
// Monte-Carlo validators: empirical violation frequencies for the bounds above.
// ---------------------------------------------------------------------------

enum class FiniteMaxFamily {
  gaussian_q2,   // N(0,1) draws, psi_2 norm sqrt(8/3)
  laplace_q1,    // Laplace(1) draws, psi_1 norm 2
  moment_theta1  // two-point family with E[e^W] = 1, theta = 1
};

/// Violation frequency of the matching finite-class bound over `reps`
/// repetitions of max over m fresh draws, at confidence gamma.
double finite_max_violation_frequency(FiniteMaxFamily family, long m,
                                      double gamma, long reps,
                                      std::uint64_t seed);

/// Config for the sup-process validator: centered quadratic process
/// L(a) = r a'Cov(X)a - (1/n) sum (a'(X_i - EX))^2 over the slope ball
/// {|a| <= L}, Gaussian design. The class is discretized by a net at
/// resolution eps/4 (a lower bound on the true supremum).
struct SupProcessMcConfig {
  Eigen::MatrixXd cov;   // design covariance (d x d)
  double slope_bound = 1.0;
  int n = 500;
  double r = 0.5;
  double gamma = 0.1;
  double eps = 0.5;
  double delta = 0.05;
  long reps = 2000;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct SupProcessMcResult {
  double violation_frequency = 0.0;
  double bound = 0.0;
  long net_size = 0;
};

SupProcessMcResult validate_sup_bound_mc(const SupProcessMcConfig& config);

}  // namespace chainrisk
