#pragma once

#include <map>
#include <string>
#include <variant>

#include "chainrisk/covering.hpp"
#include "chainrisk/problems.hpp"
#include "chainrisk/report.hpp"

namespace chainrisk {

/// Tracks confidence-budget allocations against a total gamma and throws
/// ConfigError on over-allocation.
class GammaBudget {
 public:
  explicit GammaBudget(double total);
  void allocate(const std::string& name, double amount);
  double remaining() const { return total_ - used_; }
  const std::map<std::string, double>& allocations() const { return parts_; }

 private:
  double total_;
  double used_ = 0.0;
  std::map<std::string, double> parts_;
};

/// Constants instantiating the main excess-risk bound's conditions:
/// gamma budget, approximation bound (b_apx), Lipschitz envelope (t),
/// psi-increment coefficient (s, q; s may be +infinity with delta = eps),
/// moment parameters (r, theta), excess-risk floor radius r0, entropy, radii.
struct ConditionConstants {
  double gamma = 0.1;
  double b_apx = 0.0;
  double t = 0.0;
  double s = 0.0;
  int q = 2;
  double r = 1.0;
  double theta = 0.0;
  double r0 = 0.0;
  EntropyFunction entropy;
  double eps = 0.0;
  double delta = 0.0;

  void validate() const;
};

/// Main composition: with probability 1 - gamma,
///   excess risk <= (1/r) ( theta (H(eps) + ln(4/gamma)) / n
///                          + (32 S / sqrt(n)) int_delta^eps
///                              (2H(z) + ln(32 eps/(z gamma)))^{1/q} dz
///                          + 8 delta T + B ) + r0 / n.
BoundReport erm_bound(const ConditionConstants& c, long n);

/// theta for bounded increments |Z_f| <= b_range: n b^2 / (2 (1-r) r0).
double moment_param_bounded(double b_range, double r, double r0, long n);

/// Balancing radius r0 = scale * b_range sqrt(n H) equalizing theta H / n
/// with r0 / n at r = 1/2.
double balanced_r0(double b_range, long n, double entropy_at_eps,
                   double scale = 1.0);

struct MomentParamGeneral {
  double theta = 0.0;
  double k_n = 0.0;
};

/// Truncation-route moment parameter:
///   K_n = 4 ln(4 min(kurt_sup^{1/4}, n b r_psi / r0)),
///   theta = 4 t K_n^{2/min(p,q)} max(4 r_psi^2 c_bern / ((t-1)(1-r)), b r_psi).
/// p = q = infinity drops the K_n factor entirely.
MomentParamGeneral moment_param_general(double b, double r_psi, double c_bern,
                                        double r, double t, double p, double q,
                                        double kurt_sup, long n, double r0);

struct LipschitzBernstein {
  double b = 0.0;  // psi bound of W_f
  long n = 1;
  double r0 = 1.0;
};
struct StronglyConvexBernstein {};
using BernsteinMode = std::variant<LipschitzBernstein, StronglyConvexBernstein>;

/// Bernstein-condition constant: 2 n b^2 / r0 in the Lipschitz mode,
/// 4 / (strong-convexity modulus) in the strongly convex mode.
double bernstein_constant(const LossSpec& loss, const BernsteinMode& mode);

/// High-probability to expectation conversion: b + m! c / n.
double expected_bound(double b, double c, int m, long n);

/// Data-independent slope refinement when the design covariance has the
/// eigenvalue floor kappa * b_x^2:
///   min(L^2, (1/kappa)(b_y^2/b_x^2 + d L^2/n) rlog)^{1/2},
///   rlog = 10 (11 ln(23/kappa) ln(3n/min(d,n)) + 6) ln(6/gamma);
/// kappa = 0 returns L.
double r_lip(double l, double gamma, int d, long n, double kappa, double b_x,
             double b_y);

/// (ln(e n/min(d,n)) + ln ln(e/gamma)) ln(e n/min(d,n)) ln(1/gamma).
double c_gamma(long n, int d, double gamma);

/// Fully explicit linear least-squares bound: composes erm_bound with the
/// proof-level constants (refined slope bound, bias window t_n, psi_2 scales
/// R and R-tilde, r = 1/2, r0 = min(d,n) R-tilde R, theta at t = 9,
/// T = 128 t_n^2, parametric entropy, S = infinity with
/// delta = eps = min(d,n)/n). No unnamed big-O constants remain.
BoundReport linear_erm_bound_explicit(const ProblemSpec& spec, double l,
                                      double gamma, long n, double b_apx);

/// Slope-constrained composition: b_apx = b_y^2 ln(16/gamma) / n.
BoundReport constrained_bound(const ProblemSpec& spec, double l, double gamma,
                              long n);

/// Ridge composition: L_lambda = max(l_star^2, b_y^2 ln(4/gamma)/(4 lambda))^{1/2},
/// penalty term lambda l_star^2 carried as the approximation term.
BoundReport penalized_bound(const ProblemSpec& spec, double lambda,
                            double l_star, double gamma, long n);

}  // namespace chainrisk
