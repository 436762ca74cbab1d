#include "chainrisk/problems.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "chainrisk/errors.hpp"
#include "chainrisk/rng.hpp"

namespace chainrisk {

namespace {

constexpr double kLn2 = 0.6931471805599453;

const GaussianDesign* as_gaussian(const Design& d) {
  return std::get_if<GaussianDesign>(&d);
}
const SkewedBernoulliDesign* as_mbg(const Design& d) {
  return std::get_if<SkewedBernoulliDesign>(&d);
}

// Symmetric PSD square root with a relative eigenvalue floor at zero.
// Throws ConfigError if the matrix is materially non-PSD.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols()) throw ConfigError("covariance must be square");
  if (!cov.isApprox(cov.transpose(), 1e-10))
    throw ConfigError("covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const double max_ev = es.eigenvalues().maxCoeff();
  const double floor = -1e-10 * std::max(1.0, max_ev);
  Eigen::VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < floor) throw ConfigError("covariance is not positive semidefinite");
    ev[i] = std::sqrt(std::max(ev[i], 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double min_eigenvalue(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  return es.eigenvalues().minCoeff();
}

// Moments of a Gaussian N(mu, sigma^2) about the origin.
double gauss_m2(double mu, double var) { return mu * mu + var; }
double gauss_m4(double mu, double var) {
  return mu * mu * mu * mu + 6.0 * mu * mu * var + 3.0 * var * var;
}

}  // namespace

double psi2_gaussian_scalar(double sigma) {
  return std::abs(sigma) * std::sqrt(8.0 / 3.0);
}

double psi2_gaussian_vector_bound(const Eigen::MatrixXd& cov) {
  return std::sqrt(8.0 / 3.0 * cov.trace());
}

double psi2_bounded(double magnitude) {
  return std::abs(magnitude) / std::sqrt(kLn2);
}

Eigen::VectorXd ProblemSpec::mean_x() const {
  if (const auto* g = as_gaussian(design)) return g->mean;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(3);
  m[2] = 1.0;  // E[W] = 0, E[Z] = 0, third coordinate constant
  return m;
}

Eigen::MatrixXd ProblemSpec::cov_x() const {
  if (const auto* g = as_gaussian(design)) return g->cov;
  const double p = as_mbg(design)->p;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
  cov(0, 0) = 1.0;
  cov(1, 1) = p * (1.0 - p);
  return cov;
}

double ProblemSpec::mean_y() const {
  return target_slope.dot(mean_x()) + target_bias;
}

void ProblemSpec::validate() const {
  if (dim <= 0) throw ConfigError("dim must be positive");
  if (target_slope.size() != dim)
    throw ConfigError("target_slope length must equal dim");
  if (noise_sd < 0.0) throw ConfigError("noise_sd must be nonnegative");
  if (b_x < 0.0 || b_y < 0.0) throw ConfigError("b_x, b_y must be nonnegative");
  if (const auto* g = as_gaussian(design)) {
    if (g->mean.size() != dim || g->cov.rows() != dim)
      throw ConfigError("design dimensions must equal dim");
    psd_sqrt(g->cov);  // PSD check
  } else {
    const double p = as_mbg(design)->p;
    if (dim != 3) throw ConfigError("skewed_bernoulli design requires dim = 3");
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("skewed_bernoulli needs p in (0,1)");
  }
  const double min_ev = min_eigenvalue(cov_x());
  if (kappa * b_x * b_x > min_ev + 1e-9 * std::max(1.0, min_ev))
    throw ConfigError("kappa * b_x^2 exceeds the smallest covariance eigenvalue");
}

ProblemSpec make_gaussian_spec(const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& cov,
                               const Eigen::VectorXd& target_slope,
                               double target_bias, double noise_sd,
                               const std::string& id) {
  ProblemSpec spec;
  spec.dim = static_cast<int>(mean.size());
  spec.design = GaussianDesign{mean, cov};
  spec.target_slope = target_slope;
  spec.target_bias = target_bias;
  spec.noise_sd = noise_sd;
  spec.b_x = psi2_gaussian_vector_bound(cov);
  // Y - EY ~ N(0, a*' cov a* + noise^2) exactly, so the scalar closed form applies.
  const double var_y = target_slope.dot(cov * target_slope) + noise_sd * noise_sd;
  spec.b_y = psi2_gaussian_scalar(std::sqrt(var_y));
  const double bx2 = spec.b_x * spec.b_x;
  spec.kappa = bx2 > 0.0 ? min_eigenvalue(cov) / bx2 : 0.0;
  spec.id = id;
  spec.validate();
  return spec;
}

ProblemSpec make_mbg_spec(double p, const Eigen::VectorXd& target_slope,
                          double target_bias, double noise_sd,
                          const std::string& id) {
  ProblemSpec spec;
  spec.dim = 3;
  spec.design = SkewedBernoulliDesign{p};
  spec.target_slope = target_slope;
  spec.target_bias = target_bias;
  spec.noise_sd = noise_sd;
  // X - EX = [G, Z, 0] with |Z| <= 1; certified bound independent of p.
  spec.b_x = psi2_gaussian_scalar(1.0) + psi2_bounded(1.0);
  const double gauss_part = std::hypot(target_slope[0], noise_sd);
  spec.b_y = psi2_gaussian_scalar(gauss_part) +
             (target_slope[1] != 0.0 ? psi2_bounded(target_slope[1]) : 0.0);
  spec.kappa = 0.0;  // constant third coordinate: smallest eigenvalue is 0
  spec.id = id;
  spec.validate();
  return spec;
}

std::optional<double> LossSpec::lipschitz_r() const {
  switch (kind) {
    case LossKind::absolute: return 1.0;
    case LossKind::cross_entropy: return 1.0 / lambda_clip;
    case LossKind::squared: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<double> LossSpec::strong_convexity_kappa() const {
  switch (kind) {
    case LossKind::squared: return 2.0;
    case LossKind::cross_entropy: {
      const double u = 1.0 - lambda_clip;
      return 1.0 / (u * u);
    }
    case LossKind::absolute: return std::nullopt;
  }
  return std::nullopt;
}

LossSpec LossSpec::cross_entropy(double lambda_clip) {
  if (!(lambda_clip > 0.0 && lambda_clip < 0.5))
    throw InputError("cross_entropy requires lambda_clip in (0, 1/2)");
  return {LossKind::cross_entropy, lambda_clip};
}

double loss_value(const LossSpec& loss, double y, double prediction) {
  switch (loss.kind) {
    case LossKind::squared: {
      const double r = y - prediction;
      return r * r;
    }
    case LossKind::absolute:
      return std::abs(y - prediction);
    case LossKind::cross_entropy: {
      const double lo = loss.lambda_clip;
      const double hat = std::clamp(prediction, lo, 1.0 - lo);
      return y * std::log(y / hat) + (1.0 - y) * std::log((1.0 - y) / (1.0 - hat));
    }
  }
  return 0.0;
}

Dataset sample(const ProblemSpec& spec, int n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw InputError("sample requires n >= 1");

  Dataset data;
  data.x.resize(n, spec.dim);
  data.y.resize(n);
  data.seed = seed;
  data.problem_id = spec.id;

  Rng rng(derive_stream(seed, 0));
  if (const auto* g = as_gaussian(spec.design)) {
    const Eigen::MatrixXd transform = psd_sqrt(g->cov);
    Eigen::VectorXd z(spec.dim);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < spec.dim; ++j) z[j] = rng.gaussian();
      data.x.row(i) = (g->mean + transform * z).transpose();
      data.y[i] = spec.target_slope.dot(data.x.row(i)) + spec.target_bias +
                  spec.noise_sd * rng.gaussian();
    }
  } else {
    const double p = as_mbg(spec.design)->p;
    for (int i = 0; i < n; ++i) {
      data.x(i, 0) = rng.gaussian();
      data.x(i, 1) = rng.uniform() < p ? 1.0 - p : -p;
      data.x(i, 2) = 1.0;
      data.y[i] = spec.target_slope.dot(data.x.row(i)) + spec.target_bias +
                  spec.noise_sd * rng.gaussian();
    }
  }
  return data;
}

double analytic_excess_risk(const ProblemSpec& spec, const AffineFunction& f,
                            const AffineFunction& reference) {
  const Eigen::MatrixXd cov = spec.cov_x();
  const Eigen::VectorXd mean = spec.mean_x();
  const double ey = spec.mean_y();
  auto risk_part = [&](const AffineFunction& g) {
    const Eigen::VectorXd diff = g.slope - spec.target_slope;
    const double mean_err = g.slope.dot(mean) + g.bias - ey;
    return diff.dot(cov * diff) + mean_err * mean_err;
  };
  return risk_part(f) - risk_part(reference);
}

double kurtosis_about_origin(std::span<const double> samples) {
  if (samples.empty()) throw InputError("kurtosis requires samples");
  double m2 = 0.0, m4 = 0.0;
  for (double w : samples) {
    if (!std::isfinite(w)) throw InputError("non-finite sample");
    const double w2 = w * w;
    m2 += w2;
    m4 += w2 * w2;
  }
  m2 /= static_cast<double>(samples.size());
  m4 /= static_cast<double>(samples.size());
  if (m2 <= 0.0) throw NumericError("degenerate second moment in kurtosis");
  return m4 / (m2 * m2);
}

double kurtosis_about_origin(const ProblemSpec& spec, const AffineFunction& f) {
  if (const auto* g = as_gaussian(spec.design)) {
    const double mu = f.slope.dot(g->mean) + f.bias;
    const double var = f.slope.dot(g->cov * f.slope);
    const double m2 = gauss_m2(mu, var);
    if (m2 <= 0.0) throw NumericError("degenerate second moment in kurtosis");
    return gauss_m4(mu, var) / (m2 * m2);
  }
  // Mixture over the two Z values; W | Z ~ N(a1 Z-part shifted, a0^2).
  const double p = as_mbg(spec.design)->p;
  const double var = f.slope[0] * f.slope[0];
  double m2 = 0.0, m4 = 0.0;
  const double zs[2] = {-p, 1.0 - p};
  const double ws[2] = {1.0 - p, p};
  for (int k = 0; k < 2; ++k) {
    const double mu = f.slope[1] * zs[k] + f.slope[2] + f.bias;
    m2 += ws[k] * gauss_m2(mu, var);
    m4 += ws[k] * gauss_m4(mu, var);
  }
  if (m2 <= 0.0) throw NumericError("degenerate second moment in kurtosis");
  return m4 / (m2 * m2);
}

AffineFunction target_function(const ProblemSpec& spec) {
  return AffineFunction{spec.target_slope, spec.target_bias};
}

nlohmann::json to_json(const ProblemSpec& spec) {
  nlohmann::json design;
  if (const auto* g = as_gaussian(spec.design)) {
    design["kind"] = "gaussian";
    design["params"]["mean"] = std::vector<double>(g->mean.begin(), g->mean.end());
    std::vector<std::vector<double>> cov(g->cov.rows());
    for (int i = 0; i < g->cov.rows(); ++i)
      cov[i] = std::vector<double>(g->cov.row(i).begin(), g->cov.row(i).end());
    design["params"]["cov"] = cov;
  } else {
    design["kind"] = "skewed_bernoulli";
    design["params"]["p"] = as_mbg(spec.design)->p;
  }
  return nlohmann::json{
      {"dim", spec.dim},
      {"design", design},
      {"target_slope",
       std::vector<double>(spec.target_slope.begin(), spec.target_slope.end())},
      {"target_bias", spec.target_bias},
      {"noise_sd", spec.noise_sd},
      {"b_x", spec.b_x},
      {"b_y", spec.b_y},
      {"kappa", spec.kappa},
      {"id", spec.id}};
}

ProblemSpec problem_from_json(const nlohmann::json& j) {
  ProblemSpec spec;
  try {
    spec.dim = j.at("dim").get<int>();
    const auto& design = j.at("design");
    const std::string kind = design.at("kind").get<std::string>();
    if (kind == "gaussian") {
      const auto mean = design.at("params").at("mean").get<std::vector<double>>();
      const auto cov =
          design.at("params").at("cov").get<std::vector<std::vector<double>>>();
      GaussianDesign g;
      g.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
      g.cov.resize(cov.size(), cov.size());
      for (size_t i = 0; i < cov.size(); ++i) {
        if (cov[i].size() != cov.size())
          throw ConfigError("covariance rows must be square");
        for (size_t k = 0; k < cov[i].size(); ++k) g.cov(i, k) = cov[i][k];
      }
      spec.design = g;
    } else if (kind == "skewed_bernoulli") {
      spec.design = SkewedBernoulliDesign{design.at("params").at("p").get<double>()};
    } else {
      throw ConfigError("unknown design kind: " + kind);
    }
    const auto slope = j.at("target_slope").get<std::vector<double>>();
    spec.target_slope = Eigen::Map<const Eigen::VectorXd>(slope.data(), slope.size());
    spec.target_bias = j.at("target_bias").get<double>();
    spec.noise_sd = j.at("noise_sd").get<double>();
    spec.b_x = j.at("b_x").get<double>();
    spec.b_y = j.at("b_y").get<double>();
    spec.kappa = j.at("kappa").get<double>();
    spec.id = j.value("id", "problem");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed problem spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

}  // namespace chainrisk
