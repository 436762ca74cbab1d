#include "chainrisk/bounds.hpp"

#include <cmath>
#include <limits>

#include "chainrisk/errors.hpp"

namespace chainrisk {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double factorial(int m) {
  double f = 1.0;
  for (int i = 2; i <= m; ++i) f *= i;
  return f;
}
}  // namespace

GammaBudget::GammaBudget(double total) : total_(total) {
  if (!(total > 0.0 && total < 1.0))
    throw ConfigError("gamma budget total must be in (0,1)");
}

void GammaBudget::allocate(const std::string& name, double amount) {
  if (amount <= 0.0) throw ConfigError("gamma allocation must be positive");
  if (used_ + amount > total_ * (1.0 + 1e-12))
    throw ConfigError("gamma budget over-allocated at '" + name + "'");
  used_ += amount;
  parts_[name] += amount;
}

void ConditionConstants::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InputError("gamma must be in (0,1)");
  if (!(r > 0.0 && r <= 1.0)) throw InputError("r must be in (0,1]");
  if (!(theta > 0.0)) throw InputError("theta must be positive");
  if (b_apx < 0.0 || t < 0.0 || s < 0.0 || r0 < 0.0)
    throw InputError("negative constant");
  if (q != 1 && q != 2) throw InputError("q must be in {1,2}");
  if (!(0.0 <= delta && delta <= eps)) throw InputError("need 0 <= delta <= eps");
  if (std::isinf(s) && delta != eps)
    throw InputError("S = infinity requires delta = eps");
}

BoundReport erm_bound(const ConditionConstants& c, long n) {
  c.validate();
  if (n < 1) throw InputError("erm_bound requires n >= 1");

  BoundReport rep;
  rep.r = c.r;
  const double h_eps = c.entropy(c.eps);
  rep.moment_term =
      std::isinf(h_eps)
          ? kInf
          : c.theta * (h_eps + std::log(4.0 / c.gamma)) / static_cast<double>(n);
  if (c.delta == c.eps) {
    rep.integral_term = 0.0;  // infinity * 0 = 0 convention for S
  } else {
    const double integral =
        entropy_integral(c.entropy, c.delta, c.eps, c.q, c.gamma, 32.0);
    rep.integral_term = std::isinf(integral)
                            ? kInf
                            : 32.0 * c.s / std::sqrt(static_cast<double>(n)) *
                                  integral;
  }
  rep.delta_t_term = 8.0 * c.delta * c.t;
  rep.approx_term = c.b_apx;
  rep.floor_term = c.r0 / static_cast<double>(n);
  rep.total = (rep.moment_term + rep.integral_term + rep.delta_t_term +
               rep.approx_term) /
                  c.r +
              rep.floor_term;
  rep.inputs = {{"n", static_cast<double>(n)},
                {"gamma", c.gamma},
                {"theta", c.theta},
                {"s", c.s},
                {"q", static_cast<double>(c.q)},
                {"t", c.t},
                {"r", c.r},
                {"r0", c.r0},
                {"eps", c.eps},
                {"delta", c.delta},
                {"b_apx", c.b_apx}};
  return rep;
}

double moment_param_bounded(double b_range, double r, double r0, long n) {
  if (n < 1) throw InputError("requires n >= 1");
  if (b_range < 0.0) throw InputError("b_range must be nonnegative");
  if (!(r > 0.0 && r < 1.0) || !(r0 > 0.0))
    throw InputError("theta diverges: requires r in (0,1) and r0 > 0");
  return static_cast<double>(n) * b_range * b_range / (2.0 * (1.0 - r) * r0);
}

double balanced_r0(double b_range, long n, double entropy_at_eps, double scale) {
  if (n < 1 || b_range < 0.0 || entropy_at_eps < 0.0 || scale <= 0.0)
    throw InputError("bad balancing inputs");
  return scale * b_range * std::sqrt(static_cast<double>(n) * entropy_at_eps);
}

MomentParamGeneral moment_param_general(double b, double r_psi, double c_bern,
                                        double r, double t, double p, double q,
                                        double kurt_sup, long n, double r0) {
  if (!(r > 0.0 && r < 1.0)) throw InputError("r must be in (0,1)");
  if (!(t > 1.0)) throw InputError("t must exceed 1");
  if (p < 1.0 || q < 1.0 || 1.0 / p + 1.0 / q > 1.0 + 1e-12)
    throw InputError("requires p, q >= 1 with 1/p + 1/q <= 1");
  if (!(kurt_sup >= 1.0)) throw InputError("kurtosis supremum is >= 1");
  if (!(r0 > 0.0) || n < 1 || b < 0.0 || r_psi < 0.0 || c_bern < 0.0)
    throw InputError("degenerate parameters");

  const double branch =
      std::min(std::pow(kurt_sup, 0.25),
               static_cast<double>(n) * b * r_psi / r0);
  if (!(branch * 4.0 > 1.0))
    throw InputError("degenerate parameters: r0 exceeds 4 n B R");
  MomentParamGeneral out;
  out.k_n = 4.0 * std::log(4.0 * branch);
  const double min_pq = std::min(p, q);
  const double kn_factor =
      std::isinf(min_pq) ? 1.0 : std::pow(out.k_n, 2.0 / min_pq);
  out.theta = 4.0 * t * kn_factor *
              std::max(4.0 * r_psi * r_psi * c_bern / ((t - 1.0) * (1.0 - r)),
                       b * r_psi);
  return out;
}

double bernstein_constant(const LossSpec& loss, const BernsteinMode& mode) {
  if (const auto* lip = std::get_if<LipschitzBernstein>(&mode)) {
    if (!(lip->b > 0.0) || lip->n < 1 || !(lip->r0 > 0.0))
      throw InputError("lipschitz mode needs b > 0, n >= 1, r0 > 0");
    return 2.0 * static_cast<double>(lip->n) * lip->b * lip->b / lip->r0;
  }
  const auto kappa = loss.strong_convexity_kappa();
  if (!kappa)
    throw InputError("loss has no strong-convexity modulus; use lipschitz mode");
  return 4.0 / *kappa;
}

double expected_bound(double b, double c, int m, long n) {
  if (m < 1 || n < 1) throw InputError("expected_bound needs m, n >= 1");
  return b + factorial(m) * c / static_cast<double>(n);
}

double r_lip(double l, double gamma, int d, long n, double kappa, double b_x,
             double b_y) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InputError("gamma must be in (0,1)");
  if (d < 1 || n < 1 || l < 0.0) throw InputError("bad r_lip inputs");
  if (kappa <= 0.0) return l;
  if (!(b_x > 0.0)) throw InputError("kappa > 0 requires b_x > 0");
  const double dn = static_cast<double>(std::min<long>(d, n));
  const double rlog = 10.0 *
                      (11.0 * std::log(23.0 / kappa) *
                           std::log(3.0 * static_cast<double>(n) / dn) +
                       6.0) *
                      std::log(6.0 / gamma);
  const double branch = (1.0 / kappa) *
                        (b_y * b_y / (b_x * b_x) +
                         static_cast<double>(d) * l * l / static_cast<double>(n)) *
                        rlog;
  return std::sqrt(std::min(l * l, branch));
}

double c_gamma(long n, int d, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InputError("gamma must be in (0,1)");
  if (d < 1 || n < 1) throw InputError("bad c_gamma inputs");
  const double e = std::exp(1.0);
  const double log_nd =
      std::log(e * static_cast<double>(n) / static_cast<double>(std::min<long>(d, n)));
  return (log_nd + std::log(std::log(e / gamma))) * log_nd * std::log(1.0 / gamma);
}

BoundReport linear_erm_bound_explicit(const ProblemSpec& spec, double l,
                                      double gamma, long n, double b_apx) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InputError("gamma must be in (0,1)");
  if (n < 1 || !(l > 0.0) || b_apx < 0.0)
    throw InputError("bad linear bound inputs");

  // gamma/2 slope event + gamma/4 slope refinement + gamma/4 main bound;
  // the main bound splits its own quarter into per-condition gamma/16 budgets.
  GammaBudget budget(gamma);
  budget.allocate("slope-event", gamma / 2.0);
  budget.allocate("slope-refinement", gamma / 4.0);
  budget.allocate("main-bound", gamma / 4.0);

  const double l_hat =
      r_lip(l, gamma / 4.0, spec.dim, n, spec.kappa, spec.b_x, spec.b_y);
  const double t0 = 2.0 * std::max(l_hat * spec.b_x, spec.b_y);
  const double log32 = std::log(32.0 / gamma);
  const double t_n = t0 * std::sqrt(log32);
  const double r_psi = 2.0 * (l_hat * spec.b_x + spec.b_y);   // psi_2 of Z/W
  const double r_tilde = 4.0 * std::max(l_hat * spec.b_x, t_n);  // psi_2 of W
  const double dn = static_cast<double>(std::min<long>(spec.dim, n));
  const double r0 = dn * r_tilde * r_psi;

  const auto mp = moment_param_general(r_tilde, r_psi, /*c_bern=*/2.0,
                                       /*r=*/0.5, /*t=*/9.0, 2.0, 2.0, kInf, n,
                                       r0);

  ConditionConstants c;
  c.gamma = gamma / 4.0;
  c.b_apx = b_apx;
  c.t = 128.0 * t_n * t_n;
  c.s = kInf;
  c.q = 2;
  c.r = 0.5;
  c.theta = mp.theta;
  c.r0 = r0;
  c.eps = dn / static_cast<double>(n);
  c.delta = c.eps;
  // H(z) = (d+1)(ln(3/z) + ln ln(32/gamma)): a (d+1)-dimensional parameter
  // ball of radius ln(32/gamma) in the scaled slope/bias metric.
  c.entropy = EntropyFunction::ball(spec.dim + 1, log32);

  BoundReport rep = erm_bound(c, n);
  rep.inputs["l"] = l;
  rep.inputs["l_hat"] = l_hat;
  rep.inputs["t_n"] = t_n;
  rep.inputs["r_psi"] = r_psi;
  rep.inputs["r_tilde"] = r_tilde;
  rep.inputs["k_n"] = mp.k_n;
  rep.inputs["gamma"] = gamma;
  rep.inputs["dim"] = spec.dim;
  return rep;
}

BoundReport constrained_bound(const ProblemSpec& spec, double l, double gamma,
                              long n) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InputError("gamma must be in (0,1)");
  if (n < 1) throw InputError("n must be >= 1");
  const double b_apx =
      spec.b_y * spec.b_y * std::log(16.0 / gamma) / static_cast<double>(n);
  BoundReport rep = linear_erm_bound_explicit(spec, l, gamma, n, b_apx);
  rep.inputs["bound_kind"] = 1.0;
  return rep;
}

BoundReport penalized_bound(const ProblemSpec& spec, double lambda,
                            double l_star, double gamma, long n) {
  if (!(lambda > 0.0)) throw InputError("penalized bound requires lambda > 0");
  if (l_star < 0.0) throw InputError("l_star must be nonnegative");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InputError("gamma must be in (0,1)");
  const double l_lambda =
      std::sqrt(std::max(l_star * l_star,
                         spec.b_y * spec.b_y * std::log(4.0 / gamma) /
                             (4.0 * lambda)));
  const double penalty = lambda * l_star * l_star;
  BoundReport rep = linear_erm_bound_explicit(spec, l_lambda, gamma, n, penalty);
  rep.inputs["lambda"] = lambda;
  rep.inputs["l_star"] = l_star;
  rep.inputs["penalty_term"] = penalty;
  rep.inputs["bound_kind"] = 2.0;
  return rep;
}

}  // namespace chainrisk
