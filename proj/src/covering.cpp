#include "chainrisk/covering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "chainrisk/errors.hpp"

namespace chainrisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Gauss-Kronrod 7-15 nodes/weights on [-1, 1] (positive half; symmetric).
constexpr double kKronrodNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
constexpr double kKronrodWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
constexpr double kGaussWeights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

struct GkResult {
  double value = 0.0;
  double error = 0.0;
};

GkResult gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double kronrod = 0.0, gauss = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double node = kKronrodNodes[i] * h;
    const double f1 = f(c - node);
    const double f2 = f(c + node);
    const double pair = (i == 7) ? f1 : f1 + f2;
    kronrod += kKronrodWeights[i] * pair;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * pair;
  }
  GkResult r;
  r.value = kronrod * h;
  r.error = std::abs(kronrod - gauss) * h;
  return r;
}

double adaptive_gk(const std::function<double(double)>& f, double a, double b,
                   double rel_tol, double abs_tol, int depth = 0) {
  const GkResult r = gk15(f, a, b);
  if (!std::isfinite(r.value)) return r.value;
  if (depth >= 50 ||
      r.error <= std::max(abs_tol, rel_tol * std::abs(r.value))) {
    return r.value;
  }
  const double mid = 0.5 * (a + b);
  return adaptive_gk(f, a, mid, rel_tol, abs_tol * 0.5, depth + 1) +
         adaptive_gk(f, mid, b, rel_tol, abs_tol * 0.5, depth + 1);
}

}  // namespace

EntropyFunction EntropyFunction::zero() {
  return EntropyFunction([](double) { return 0.0; });
}

EntropyFunction EntropyFunction::ball(int d, double radius) {
  if (d < 1 || radius <= 0.0) throw InputError("ball entropy needs d >= 1, R > 0");
  return EntropyFunction(
      [d, radius](double z) { return entropy_ball(z, radius, d); });
}

EntropyFunction EntropyFunction::tabulated(
    std::vector<std::pair<double, double>> grid) {
  if (grid.empty()) throw InputError("tabulated entropy needs grid points");
  std::sort(grid.begin(), grid.end());
  for (size_t i = 0; i < grid.size(); ++i) {
    if (grid[i].second < 0.0) throw InputError("entropy values must be >= 0");
    if (i > 0 && grid[i].second > grid[i - 1].second + 1e-12)
      throw InputError("entropy must be nonincreasing in z");
  }
  return EntropyFunction([grid = std::move(grid)](double z) {
    if (z <= grid.front().first) return grid.front().second;
    if (z >= grid.back().first) return grid.back().second;
    auto hi = std::upper_bound(grid.begin(), grid.end(),
                               std::make_pair(z, kInf));
    auto lo = hi - 1;
    const double t = (z - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
  });
}

EntropyFunction EntropyFunction::custom(std::function<double(double)> h) {
  return EntropyFunction(std::move(h));
}

EntropyFunction EntropyFunction::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open entropy CSV: " + path);
  std::vector<std::pair<double, double>> grid;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double z, h;
    if (row >> z >> h) grid.emplace_back(z, h);
  }
  if (grid.empty()) throw ConfigError("entropy CSV has no numeric rows: " + path);
  return tabulated(std::move(grid));
}

bool EntropyFunction::is_monotone_on(double lo, double hi, int points) const {
  double prev = kInf;
  for (int i = 0; i < points; ++i) {
    const double z = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
    const double h = eval_(z);
    if (h < 0.0 || h > prev + 1e-9) return false;
    prev = h;
  }
  return true;
}

double entropy_ball(double eps, double radius, int d) {
  if (eps <= 0.0) throw InputError("entropy_ball requires eps > 0");
  if (radius < 0.0 || d < 1) throw InputError("entropy_ball needs R >= 0, d >= 1");
  if (eps >= 3.0 * radius) return 0.0;
  return d * std::log(3.0 * radius / eps);
}

std::vector<int> greedy_cover(
    const Eigen::MatrixXd& points, double eps,
    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>&
        metric) {
  if (points.rows() == 0) throw InputError("greedy_cover needs points");
  auto dist = metric ? metric
                     : [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
                         return (a - b).norm();
                       };
  std::vector<int> centers;
  for (int i = 0; i < points.rows(); ++i) {
    bool covered = false;
    const Eigen::VectorXd p = points.row(i);
    for (int c : centers) {
      if (dist(p, points.row(c)) <= eps) {
        covered = true;
        break;
      }
    }
    if (!covered) centers.push_back(i);
  }
  return centers;
}

double entropy_integral(const EntropyFunction& h, double delta, double eps,
                        int q, double gamma, double kappa_log, double h_mult,
                        double log_radius) {
  if (q != 1 && q != 2) throw InputError("entropy_integral requires q in {1,2}");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InputError("gamma must be in (0,1)");
  if (!(0.0 <= delta && delta <= eps)) throw InputError("need 0 <= delta <= eps");
  if (kappa_log <= 0.0 || h_mult < 0.0) throw InputError("bad integrand constants");
  if (delta == eps) return 0.0;
  if (log_radius < 0.0) log_radius = eps;

  const double log_num = std::log(kappa_log * log_radius / gamma);
  auto integrand = [&](double z) {
    const double hz = h(z);
    if (!std::isfinite(hz)) return kInf;
    const double arg = h_mult * hz + log_num - std::log(z);
    return q == 1 ? arg : std::sqrt(arg);
  };

  // Infinite-entropy detection on a geometric probe of (delta, eps].
  for (int i = 0; i < 32; ++i) {
    const double z = eps * std::pow(std::max(delta, eps * 1e-12) / eps,
                                    static_cast<double>(i) / 31.0);
    if (!std::isfinite(h(z))) return kInf;
  }

  const double rel_tol = 1e-10;
  double total = 0.0;

  // Near zero substitute z = z0 e^{-u}: the log singularity becomes an
  // exponentially damped smooth integrand.
  const double z0 = std::min(eps, std::max(delta, eps * 1e-3));
  if (delta < z0) {
    const double u_hi =
        delta > 0.0 ? std::log(z0 / delta) : std::log(1e30);  // e^{-69} z0 tail
    auto sub = [&](double u) {
      const double z = z0 * std::exp(-u);
      return integrand(z) * z;
    };
    total += adaptive_gk(sub, 0.0, u_hi, rel_tol, 1e-300);
  }
  if (z0 < eps) {
    total += adaptive_gk(integrand, z0, eps, rel_tol, 1e-300);
  }
  return total;
}

}  // namespace chainrisk
