#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace chainrisk {

enum class OrliczMethod { analytic, empirical_bisection };

/// psi_q-Orlicz norm estimate: the smallest B with E[exp((|W|/B)^q) - 1] <= 1.
struct OrliczEstimate {
  double q = 2.0;
  double value = 0.0;
  OrliczMethod method = OrliczMethod::empirical_bisection;
  long n_samples = 0;
};

/// Empirical psi_q norm of scalar samples by bisection on the defining
/// expectation, evaluated in log-sum-exp form. tol applies to
/// |E_n psi_q(w/B) - 1|. All-zero samples give value 0.
OrliczEstimate orlicz_norm_empirical(std::span<const double> samples, double q,
                                     double tol = 1e-6);

/// Vector-sample overload; rows of `samples` are the draws.
OrliczEstimate orlicz_norm_empirical(const Eigen::MatrixXd& samples, double q,
                                     double tol = 1e-6);

/// P{|W| >= t} <= min(1, 2 exp(-(t/norm)^q)). norm = 0 with t > 0 gives 0.
double tail_bound(double norm, double q, double t);

/// E|W|^s <= 2 (s/(e q))^{s/q} norm^s.
double moment_bound(double norm, double q, double s);

/// psi_q bound for a sum of independent centered variables in R^d:
/// 4 d^{1/q} (sum of squared norms)^{1/2}, q in {1,2}. Empty list gives 0.
double sum_independent_norm_bound(std::span<const double> norms, int q, int d);

/// Bernstein log-MGF bound s^2 v^2 / (2 (1 - |s| c)) for |s| < 1/c.
double bernstein_mgf_bound(double s, double v, double c);

/// Truncation constants for products of sub-Weibull variables:
/// c^{min(p,q)} = 2 ln(64 K0), and the pair ((2 c R)^2, c^2 B R) so that
/// E|WZ|^k <= (k!/2) E[W^2] (2cR)^2 (c^2 B R)^{k-2}.
struct ProductMomentConstants {
  double c = 0.0;
  double v_factor = 0.0;  // (2 c R)^2
  double scale = 0.0;     // c^2 B R
};

ProductMomentConstants product_moment_constants(double b, double r, double p,
                                                double q, double kurtosis);

}  // namespace chainrisk
