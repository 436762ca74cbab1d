#include "chainrisk/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "chainrisk/errors.hpp"
#include "chainrisk/problems.hpp"
#include "chainrisk/rng.hpp"

namespace chainrisk {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void ProcessBoundInput::validate(bool needs_beta) const {
  if (q != 1 && q != 2) throw InputError("q must be in {1,2}");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InputError("gamma must be in (0,1)");
  if (!(0.0 <= delta && delta <= eps)) throw InputError("need 0 <= delta <= eps");
  if (s < 0.0 || t < 0.0 || theta < 0.0) throw InputError("negative coefficient");
  if (needs_beta) {
    if (!(beta >= 0.0 && delta <= beta / 2.0))
      throw InputError("chaining bound needs 0 <= delta <= beta/2");
    if (std::isinf(s) && delta != beta / 2.0)
      throw InputError("S = infinity requires delta = beta/2");
  } else if (std::isinf(s) && delta != eps) {
    throw InputError("S = infinity requires delta = eps");
  }
}

double finite_max_bound_subgaussian(double sigma, long m, double gamma, int q) {
  if (m < 1) throw InputError("finite max bound needs m >= 1");
  if (q != 1 && q != 2) throw InputError("q must be in {1,2}");
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
  if (sigma < 0.0) throw InputError("sigma must be nonnegative");
  const double log_term = std::max(0.0, std::log(2.0 * m / gamma));
  return sigma * std::pow(log_term, 1.0 / q);
}

double finite_max_bound_moment(double theta, long m, double gamma) {
  if (m < 1) throw InputError("finite max bound needs m >= 1");
  if (!(theta > 0.0)) throw InputError("theta must be positive");
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
  return theta * std::log(static_cast<double>(m) / gamma);
}

double chaining_tail_bound(const ProcessBoundInput& input) {
  input.validate(true);
  const double tail = 4.0 * input.delta * input.t;
  if (input.delta == input.beta / 2.0) return tail;
  const double integral =
      entropy_integral(input.entropy, input.delta, input.beta / 2.0, input.q,
                       input.gamma, 4.0, 1.0, input.beta);
  if (std::isinf(integral)) return kInf;
  return 4.0 * input.s * integral + tail;
}

BoundReport sup_process_bound(const ProcessBoundInput& input) {
  input.validate(false);
  BoundReport report;
  const double h_eps = input.entropy(input.eps);
  report.moment_term =
      std::isinf(h_eps)
          ? kInf
          : input.theta * (h_eps + std::log(2.0 / input.gamma));
  if (input.delta == input.eps) {
    report.integral_term = 0.0;  // infinity * 0 = 0 convention
  } else {
    const double integral = entropy_integral(
        input.entropy, input.delta, input.eps, input.q, input.gamma, 16.0);
    report.integral_term = std::isinf(integral) ? kInf : 8.0 * input.s * integral;
  }
  report.delta_t_term = 8.0 * input.delta * input.t;
  report.total = report.moment_term + report.integral_term + report.delta_t_term;
  report.inputs = {{"q", static_cast<double>(input.q)}, {"s", input.s},
                   {"t", input.t},       {"theta", input.theta},
                   {"gamma", input.gamma}, {"eps", input.eps},
                   {"delta", input.delta}};
  return report;
}

double finite_max_violation_frequency(FiniteMaxFamily family, long m,
                                      double gamma, long reps,
                                      std::uint64_t seed) {
  if (m < 1 || reps < 1) throw InputError("need m >= 1, reps >= 1");
  double bound = 0.0;
  // Sharp-probability two-point variable: W = ln(1/p) with probability p,
  // else effectively -infinity; E[e^W] = 1, so theta = 1 applies.
  const double p_hit = 0.9 * gamma / static_cast<double>(m);
  switch (family) {
    case FiniteMaxFamily::gaussian_q2:
      bound = finite_max_bound_subgaussian(std::sqrt(8.0 / 3.0), m, gamma, 2);
      break;
    case FiniteMaxFamily::laplace_q1:
      bound = finite_max_bound_subgaussian(2.0, m, gamma, 1);
      break;
    case FiniteMaxFamily::moment_theta1:
      bound = finite_max_bound_moment(1.0, m, gamma);
      break;
  }
  long violations = 0;
  for (long rep = 0; rep < reps; ++rep) {
    Rng rng(derive_stream(seed, static_cast<std::uint64_t>(rep)));
    double max_w = -kInf;
    for (long i = 0; i < m; ++i) {
      double w = 0.0;
      switch (family) {
        case FiniteMaxFamily::gaussian_q2: w = rng.gaussian(); break;
        case FiniteMaxFamily::laplace_q1: w = rng.laplace(); break;
        case FiniteMaxFamily::moment_theta1:
          w = rng.uniform() < p_hit ? -std::log(p_hit) : -kInf;
          break;
      }
      max_w = std::max(max_w, w);
    }
    if (max_w > bound) ++violations;
  }
  return static_cast<double>(violations) / static_cast<double>(reps);
}

SupProcessMcResult validate_sup_bound_mc(const SupProcessMcConfig& config) {
  const int d = static_cast<int>(config.cov.rows());
  if (d < 1 || d > 3) throw InputError("sup-process validator supports d <= 3");
  if (config.n < 1 || config.reps < 1) throw InputError("need n, reps >= 1");
  if (!(config.r >= 0.0 && config.r <= 1.0)) throw InputError("r must be in [0,1]");

  const double big_l = config.slope_bound;
  const double b_x = psi2_gaussian_vector_bound(config.cov);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(config.cov);
  const double kappa = es.eigenvalues().minCoeff() / (b_x * b_x);
  if (kappa <= 0.0) throw InputError("validator needs a nonsingular design");
  const double lb2 = big_l * big_l * b_x * b_x;

  // Process constants certified by the truncation route for the quadratic
  // process over the slope ball, metric rho(a,a') = |a - a'| / L:
  //   theta = 72 (L B_X)^2 ln(23/kappa)    (moment condition at r = 1/2)
  //   per-sample centered increments have psi_1 norm <= c1 * 2 L^2 B_X^2 rho,
  //   so the averaged process has S = 4 c1 2 L^2 B_X^2 / sqrt(n), q = 1,
  //   c1 = 1 + 2/(e ln 2) covering the centering shift.
  //   Envelope: Gamma = 2 L^2 (E|Xc|^2 + avg |Xc_i|^2), sqrt(Gamma) psi_2-norm
  //   <= 2 L B_X, so P{Gamma > T} <= gamma/2 at T = 4 L^2 B_X^2 ln(4/gamma).
  const double theta = 72.0 * lb2 * std::log(23.0 / kappa);
  const double c1 = 1.0 + 2.0 / (std::exp(1.0) * std::log(2.0));
  const double s_coeff =
      4.0 * c1 * 2.0 * big_l * big_l * b_x * b_x / std::sqrt(config.n);
  const double t_env = 4.0 * lb2 * std::log(4.0 / config.gamma);

  ProcessBoundInput input;
  input.q = 1;
  input.s = s_coeff;
  input.t = t_env;
  input.theta = theta / config.n;
  input.gamma = config.gamma;
  input.entropy = EntropyFunction::ball(d, 1.0);
  input.eps = config.eps;
  input.delta = config.delta;
  const double bound = sup_process_bound(input).total;

  // Net at rho-resolution eps/4 (Euclidean L eps/4): grid of spacing
  // h = L eps / (2 sqrt(d)) intersected with the ball.
  const double h = big_l * config.eps / (2.0 * std::sqrt(static_cast<double>(d)));
  std::vector<Eigen::VectorXd> net;
  const int steps = static_cast<int>(std::ceil(big_l / h));
  Eigen::VectorXi idx = Eigen::VectorXi::Constant(d, -steps);
  while (true) {
    Eigen::VectorXd a(d);
    for (int j = 0; j < d; ++j) a[j] = idx[j] * h;
    if (a.norm() <= big_l) net.push_back(a);
    int j = 0;
    while (j < d && ++idx[j] > steps) idx[j++] = -steps;
    if (j == d) break;
  }

  const Eigen::MatrixXd transform = [&] {
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return Eigen::MatrixXd(es.eigenvectors() * ev.asDiagonal() *
                           es.eigenvectors().transpose());
  }();

  std::vector<char> violated(config.reps, 0);
  auto worker = [&](long start, long stride) {
    Eigen::VectorXd g(d);
    for (long rep = start; rep < config.reps; rep += stride) {
      Rng rng(derive_stream(config.seed, static_cast<std::uint64_t>(rep)));
      Eigen::MatrixXd emp = Eigen::MatrixXd::Zero(d, d);
      for (int i = 0; i < config.n; ++i) {
        for (int j = 0; j < d; ++j) g[j] = rng.gaussian();
        const Eigen::VectorXd xc = transform * g;
        emp.noalias() += xc * xc.transpose();
      }
      emp /= static_cast<double>(config.n);
      const Eigen::MatrixXd m = config.r * config.cov - emp;
      double sup = -kInf;
      for (const auto& a : net) sup = std::max(sup, a.dot(m * a));
      violated[rep] = sup > bound ? 1 : 0;
    }
  };
  const int workers = std::max(1, config.workers);
  if (workers == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker, w, workers);
    for (auto& t : pool) t.join();
  }

  SupProcessMcResult result;
  result.bound = bound;
  result.net_size = static_cast<long>(net.size());
  long count = 0;
  for (char v : violated) count += v;
  result.violation_frequency =
      static_cast<double>(count) / static_cast<double>(config.reps);
  return result;
}

}  // namespace chainrisk
