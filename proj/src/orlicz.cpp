#include "chainrisk/orlicz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chainrisk/errors.hpp"

namespace chainrisk {

namespace {

// ln( (1/n) sum exp((m_i/B)^q) ), computed as log-sum-exp so that tiny
// bracket values of B do not overflow.
double log_mean_exp(std::span<const double> magnitudes, double q, double b) {
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(magnitudes.size());
  for (double m : magnitudes) {
    const double t = std::pow(m / b, q);
    terms.push_back(t);
    max_term = std::max(max_term, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc) - std::log(static_cast<double>(magnitudes.size()));
}

}  // namespace

OrliczEstimate orlicz_norm_empirical(std::span<const double> samples, double q,
                                     double tol) {
  if (samples.empty()) throw InputError("orlicz norm requires samples");
  if (q < 1.0) throw InputError("orlicz norm requires q >= 1");
  if (!(tol > 0.0 && tol <= 0.1)) throw InputError("tol must be in (0, 0.1]");

  double max_mag = 0.0;
  std::vector<double> mags;
  mags.reserve(samples.size());
  for (double w : samples) {
    if (!std::isfinite(w)) throw InputError("non-finite sample");
    const double m = std::abs(w);
    mags.push_back(m);
    max_mag = std::max(max_mag, m);
  }
  const long n = static_cast<long>(mags.size());
  OrliczEstimate est{q, 0.0, OrliczMethod::empirical_bisection, n};
  if (max_mag == 0.0) return est;

  const double ln2 = std::log(2.0);
  // At hi every term is <= 2, so the mean is <= 2; at lo the max term alone
  // exceeds 2n, so the mean exceeds 2. The objective is strictly decreasing
  // in B, hence these bracket the root.
  double hi = max_mag / std::pow(ln2, 1.0 / q);
  double lo = max_mag / std::pow(std::log(1.0 + 2.0 * n), 1.0 / q);
  int guard = 0;
  while (log_mean_exp(mags, q, hi) > ln2 && guard++ < 200) hi *= 2.0;
  guard = 0;
  while (log_mean_exp(mags, q, lo) <= ln2 && guard++ < 200) lo /= 2.0;

  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double mean = std::exp(log_mean_exp(mags, q, mid));
    if (std::abs(mean - 2.0) <= tol) {
      est.value = mid;
      return est;
    }
    (mean > 2.0 ? lo : hi) = mid;
  }
  throw NumericError("orlicz bisection did not converge");
}

OrliczEstimate orlicz_norm_empirical(const Eigen::MatrixXd& samples, double q,
                                     double tol) {
  std::vector<double> norms(samples.rows());
  for (int i = 0; i < samples.rows(); ++i) norms[i] = samples.row(i).norm();
  return orlicz_norm_empirical(norms, q, tol);
}

double tail_bound(double norm, double q, double t) {
  if (norm < 0.0 || t < 0.0) throw InputError("tail_bound needs norm, t >= 0");
  if (norm == 0.0) return t > 0.0 ? 0.0 : 1.0;
  return std::min(1.0, 2.0 * std::exp(-std::pow(t / norm, q)));
}

double moment_bound(double norm, double q, double s) {
  if (s <= 0.0) throw InputError("moment_bound requires s > 0");
  if (norm < 0.0) throw InputError("moment_bound requires norm >= 0");
  if (norm == 0.0) return 0.0;
  const double e = std::exp(1.0);
  return 2.0 * std::pow(s / (e * q), s / q) * std::pow(norm, s);
}

double sum_independent_norm_bound(std::span<const double> norms, int q, int d) {
  if (q != 1 && q != 2) throw InputError("sum bound requires q in {1,2}");
  if (d < 1) throw InputError("sum bound requires d >= 1");
  if (norms.empty()) return 0.0;
  double sq = 0.0;
  for (double s : norms) {
    if (!std::isfinite(s)) throw InputError("non-finite norm");
    sq += s * s;
  }
  return 4.0 * std::pow(static_cast<double>(d), 1.0 / q) * std::sqrt(sq);
}

double bernstein_mgf_bound(double s, double v, double c) {
  if (c < 0.0) throw InputError("bernstein bound requires c >= 0");
  if (c > 0.0 && std::abs(s) >= 1.0 / c)
    throw std::domain_error("bernstein bound requires |s| < 1/c");
  return s * s * v * v / (2.0 * (1.0 - std::abs(s) * c));
}

ProductMomentConstants product_moment_constants(double b, double r, double p,
                                                double q, double kurtosis) {
  if (kurtosis < 1.0) throw InputError("kurtosis about the origin is >= 1");
  if (p < 1.0 || q < 1.0 || 1.0 / p + 1.0 / q > 1.0 + 1e-12)
    throw InputError("requires p, q >= 1 with 1/p + 1/q <= 1");
  const double m = std::min(p, q);
  const double c = std::pow(2.0 * std::log(64.0 * kurtosis), 1.0 / m);
  ProductMomentConstants out;
  out.c = c;
  out.v_factor = 4.0 * c * c * r * r;  // (2cR)^2
  out.scale = c * c * b * r;
  return out;
}

}  // namespace chainrisk
