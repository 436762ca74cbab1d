#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace chainrisk {

/// Metric entropy H(z) = ln N(z, F): nonnegative, nonincreasing, zero beyond
/// the diameter. Kinds: ball (d ln(3R/z)), tabulated grid, or custom callable.
class EntropyFunction {
 public:
  EntropyFunction() : EntropyFunction(zero()) {}

  double operator()(double z) const { return eval_(z); }

  static EntropyFunction zero();
  /// Euclidean-type ball of radius R in d dimensions: H(z) = d ln(3R/z)
  /// for z <= 3R, else 0.
  static EntropyFunction ball(int d, double radius);
  /// Piecewise-linear interpolation of (z, H) pairs; flat extension below the
  /// first grid point, last value beyond the grid.
  static EntropyFunction tabulated(std::vector<std::pair<double, double>> grid);
  static EntropyFunction custom(std::function<double(double)> h);

  /// Loads a tabulated entropy from CSV with columns z,H (header optional).
  static EntropyFunction from_csv(const std::string& path);

  /// Checks H >= 0 and nonincreasing on a geometric grid of (lo, hi].
  bool is_monotone_on(double lo, double hi, int points = 64) const;

 private:
  explicit EntropyFunction(std::function<double(double)> eval)
      : eval_(std::move(eval)) {}
  std::function<double(double)> eval_;
};

/// d ln(3R/eps) for 0 < eps <= 3R; 0 beyond 3R (one point covers).
double entropy_ball(double eps, double radius, int d);

/// Greedy internal eps-cover of a finite point set (rows of `points`):
/// returns indices of chosen centers; every point lies within eps of one.
std::vector<int> greedy_cover(
    const Eigen::MatrixXd& points, double eps,
    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>&
        metric = {});

/// Truncated entropy integral
///   int_delta^eps (h_mult H(z) + ln(kappa_log * log_radius / (z gamma)))^{1/q} dz
/// with log_radius defaulting to eps. kappa_log/h_mult instances:
/// 32/2 (main risk bound), 16/2 (first-chain-step suprema), 4/1 with
/// log_radius = beta (plain chaining). Adaptive Gauss-Kronrod with a
/// z = e^{-u} substitution taming the logarithmic singularity at delta = 0.
/// Returns +infinity if H is infinite anywhere on (delta, eps].
double entropy_integral(const EntropyFunction& h, double delta, double eps,
                        int q, double gamma, double kappa_log,
                        double h_mult = 2.0, double log_radius = -1.0);

}  // namespace chainrisk
