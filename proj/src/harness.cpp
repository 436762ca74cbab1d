#include "chainrisk/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "chainrisk/bounds.hpp"
#include "chainrisk/errors.hpp"
#include "chainrisk/estimators.hpp"
#include "chainrisk/rng.hpp"
#include "chainrisk/version.hpp"

namespace chainrisk {

namespace {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 8u));
}

void parallel_for(long count, int workers, const std::function<void(long)>& body) {
  if (workers <= 1 || count < 2) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (long i = w; i < count; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::optional<double> evaluate_bound(const ExperimentConfig& config, long n) {
  switch (config.bound) {
    case BoundKind::none:
      return std::nullopt;
    case BoundKind::constrained: {
      const auto* est = std::get_if<ConstrainedEstimator>(&config.estimator);
      if (!est)
        throw ConfigError("constrained bound requires a constrained estimator");
      return constrained_bound(config.problem, est->slope_bound, config.gamma, n)
          .total;
    }
    case BoundKind::penalized: {
      const auto* est = std::get_if<RidgeEstimator>(&config.estimator);
      if (!est) throw ConfigError("penalized bound requires a ridge estimator");
      const double lambda = ridge_lambda_for(*est, config.problem.dim, n);
      return penalized_bound(config.problem, lambda,
                             config.problem.target_slope.norm(), config.gamma, n)
          .total;
    }
  }
  return std::nullopt;
}

}  // namespace

double ridge_lambda_for(const RidgeEstimator& est, int d, long n) {
  const double dn = static_cast<double>(d) / static_cast<double>(n);
  switch (est.rule) {
    case RidgeEstimator::Rule::fixed: return est.lambda;
    case RidgeEstimator::Rule::sqrt_d_over_n: return std::sqrt(dn);
    case RidgeEstimator::Rule::d_over_n: return dn;
  }
  return est.lambda;
}

void ExperimentConfig::validate() const {
  problem.validate();
  if (n_grid.empty()) throw ConfigError("n_grid must be nonempty");
  for (size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1) throw ConfigError("n_grid entries must be >= 1");
    if (i > 0 && n_grid[i] <= n_grid[i - 1])
      throw ConfigError("n_grid must be strictly increasing");
  }
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (bound != BoundKind::none && trials < 30)
    throw ConfigError("quantile checks require trials >= 30");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in (0,1)");
  if (const auto* est = std::get_if<ConstrainedEstimator>(&estimator)) {
    if (!(est->slope_bound > 0.0)) throw ConfigError("slope bound must be > 0");
  } else if (const auto* ridge = std::get_if<RidgeEstimator>(&estimator)) {
    if (ridge->rule == RidgeEstimator::Rule::fixed && ridge->lambda < 0.0)
      throw ConfigError("fixed lambda must be >= 0");
  }
}

AffineFunction population_reference(const ProblemSpec& spec,
                                    const EstimatorSpec& estimator) {
  const AffineFunction target = target_function(spec);
  const auto* constrained = std::get_if<ConstrainedEstimator>(&estimator);
  if (!constrained || target.slope.norm() <= constrained->slope_bound)
    return target;

  // Norm-constrained population minimizer: a(lambda) = (Cov + lambda I)^{-1}
  // Cov a*, bisected to |a| = L; bias is the population-optimal one.
  const double big_l = constrained->slope_bound;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spec.cov_x());
  const Eigen::VectorXd proj = es.eigenvectors().transpose() * spec.target_slope;
  auto slope_at = [&](double lambda) {
    Eigen::VectorXd scaled(proj.size());
    for (int i = 0; i < proj.size(); ++i) {
      const double ev = std::max(es.eigenvalues()[i], 0.0);
      scaled[i] = ev > 0.0 ? proj[i] * ev / (ev + lambda) : 0.0;
    }
    return Eigen::VectorXd(es.eigenvectors() * scaled);
  };
  double lo = 0.0, hi = 1.0;
  while (slope_at(hi).norm() > big_l) hi *= 2.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (slope_at(mid).norm() > big_l ? lo : hi) = mid;
  }
  const Eigen::VectorXd slope = slope_at(hi);
  const double bias = spec.mean_y() - slope.dot(spec.mean_x());
  return AffineFunction{slope, bias};
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  result.config = config;
  result.trials.resize(config.n_grid.size() * config.trials);

  const AffineFunction reference =
      population_reference(config.problem, config.estimator);
  const bool analytic_ok = config.loss.kind == LossKind::squared;
  const int workers = resolve_workers(config.workers);

  for (size_t gi = 0; gi < config.n_grid.size(); ++gi) {
    const long n = config.n_grid[gi];
    const std::uint64_t grid_stream = derive_stream(config.master_seed, gi);
    parallel_for(config.trials, workers, [&](long t) {
      TrialRecord& rec = result.trials[gi * config.trials + t];
      rec.n = n;
      rec.trial = static_cast<int>(t);
      rec.seed = derive_stream(grid_stream, static_cast<std::uint64_t>(t));
      try {
        const Dataset data = sample(config.problem, static_cast<int>(n), rec.seed);
        AffineFunction fit;
        if (const auto* c = std::get_if<ConstrainedEstimator>(&config.estimator)) {
          const ConstrainedFit cf = constrained_lse(data, c->slope_bound);
          fit = cf.fn;
          rec.alpha = cf.alpha_bound;
        } else {
          const auto& ridge = std::get<RidgeEstimator>(config.estimator);
          fit = ridge_fit(data, ridge_lambda_for(ridge, config.problem.dim, n));
          rec.alpha = 0.0;
        }
        rec.slope_norm = fit.slope.norm();
        const ExcessRiskMethod method =
            analytic_ok ? ExcessRiskMethod{AnalyticMethod{}}
                        : ExcessRiskMethod{McMethod{1000000,
                                                    derive_stream(rec.seed, 0xE5A1)}};
        rec.excess_risk =
            measure_excess_risk(fit, config.problem, config.loss, reference,
                                method)
                .value;
      } catch (const std::exception&) {
        rec.failed = true;
        rec.excess_risk = std::numeric_limits<double>::quiet_NaN();
      }
    });
  }

  long failed_total = 0;
  for (size_t gi = 0; gi < config.n_grid.size(); ++gi) {
    const long n = config.n_grid[gi];
    std::vector<double> values;
    values.reserve(config.trials);
    int failed = 0;
    for (int t = 0; t < config.trials; ++t) {
      const TrialRecord& rec = result.trials[gi * config.trials + t];
      if (rec.failed) {
        ++failed;
      } else {
        values.push_back(rec.excess_risk);
      }
    }
    failed_total += failed;
    if (values.empty()) throw NumericError("all trials failed at n = " + std::to_string(n));
    PerNSummary summary;
    summary.n = n;
    summary.failed_trials = failed;
    summary.median = median_of(values);
    summary.quantile = conservative_quantile(values, 1.0 - config.gamma);
    summary.bound = evaluate_bound(config, n);
    if (summary.bound) summary.dominated = summary.quantile <= *summary.bound;
    result.per_n.push_back(std::move(summary));
  }
  const double failure_rate =
      static_cast<double>(failed_total) /
      static_cast<double>(result.trials.size());
  if (failure_rate > 0.01)
    throw NumericError("estimator failure rate " + std::to_string(failure_rate) +
                       " exceeds 1%");

  std::vector<long> ns;
  std::vector<double> medians;
  for (const auto& s : result.per_n) {
    ns.push_back(s.n);
    medians.push_back(s.median);
  }
  if (ns.size() >= 3 &&
      std::all_of(medians.begin(), medians.end(), [](double m) { return m > 0; }))
    result.rate = rate_fit(ns, medians);
  return result;
}

RateFit rate_fit(const std::vector<long>& ns, const std::vector<double>& medians) {
  if (ns.size() != medians.size() || ns.size() < 3)
    throw NumericError("rate fit needs >= 3 grid points");
  const size_t k = ns.size();
  std::vector<double> lx(k), ly(k);
  for (size_t i = 0; i < k; ++i) {
    if (!(medians[i] > 0.0))
      throw NumericError("rate fit needs positive medians");
    lx[i] = std::log(static_cast<double>(ns[i]));
    ly[i] = std::log(medians[i]);
  }
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < k; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (size_t i = 0; i < k; ++i) {
    const double resid = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += resid * resid;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

DominanceReport dominance_check(const ExperimentResult& result) {
  if (result.config.bound == BoundKind::none)
    throw ConfigError("dominance check requires a configured bound");
  if (result.config.trials < 30)
    throw ConfigError("dominance check refused: trials < 30");
  DominanceReport report;
  report.all_pass = true;
  bool any_infinite = false;
  for (const auto& s : result.per_n) {
    const bool pass = s.dominated.value_or(false);
    if (s.bound && std::isinf(*s.bound)) any_infinite = true;
    report.per_n.emplace_back(s.n, pass);
    report.all_pass = report.all_pass && pass;
  }
  const double g = result.config.gamma;
  const double se =
      std::sqrt(g * (1.0 - g) / static_cast<double>(result.config.trials));
  std::ostringstream note;
  note << "quantile level " << (1.0 - g) << " estimated from "
       << result.config.trials << " trials (binomial se " << se << ")";
  if (any_infinite) note << "; warning: infinite bound passes trivially";
  report.note = note.str();
  return report;
}

double conservative_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw InputError("quantile of empty sample");
  if (!(level > 0.0 && level <= 1.0)) throw InputError("level must be in (0,1]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<size_t>(
      std::ceil(level * static_cast<double>(values.size())));
  return values[std::min(values.size(), std::max<size_t>(rank, 1)) - 1];
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw InputError("median of empty sample");
  std::sort(values.begin(), values.end());
  const size_t k = values.size();
  return k % 2 == 1 ? values[k / 2]
                    : 0.5 * (values[k / 2 - 1] + values[k / 2]);
}

std::string results_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "n,trial,seed,excess_risk,slope_norm,alpha,failed\n";
  for (const auto& rec : result.trials) {
    out << rec.n << ',' << rec.trial << ',' << rec.seed << ','
        << format_double(rec.excess_risk) << ',' << format_double(rec.slope_norm)
        << ',' << format_double(rec.alpha) << ',' << (rec.failed ? 1 : 0)
        << '\n';
  }
  return out.str();
}

std::vector<TrialRecord> read_results_csv(std::istream& in) {
  std::vector<TrialRecord> records;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("n,", 0) == 0) continue;
    }
    TrialRecord rec;
    unsigned long long seed = 0;
    int failed = 0;
    if (std::sscanf(line.c_str(), "%ld,%d,%llu,%lf,%lf,%lf,%d", &rec.n,
                    &rec.trial, &seed, &rec.excess_risk, &rec.slope_norm,
                    &rec.alpha, &failed) != 7)
      throw ConfigError("malformed results CSV row: " + line);
    rec.seed = seed;
    rec.failed = failed != 0;
    records.push_back(rec);
  }
  return records;
}

nlohmann::json summary_json(const ExperimentResult& result) {
  nlohmann::json per_n = nlohmann::json::array();
  for (const auto& s : result.per_n) {
    nlohmann::json row{{"n", s.n},
                       {"median", s.median},
                       {"quantile", s.quantile},
                       {"failed_trials", s.failed_trials}};
    row["bound"] = s.bound ? nlohmann::json(*s.bound) : nlohmann::json();
    row["dominated"] = s.dominated ? nlohmann::json(*s.dominated) : nlohmann::json();
    per_n.push_back(row);
  }
  nlohmann::json rate;
  if (result.rate) {
    rate = {{"slope", result.rate->slope},
            {"intercept", result.rate->intercept},
            {"r2", result.rate->r2}};
  }
  return nlohmann::json{{"tool_version", kVersion},
                        {"config", to_json(result.config)},
                        {"per_n", per_n},
                        {"rate_fit", rate}};
}

nlohmann::json to_json(const ExperimentConfig& config) {
  nlohmann::json est;
  if (const auto* c = std::get_if<ConstrainedEstimator>(&config.estimator)) {
    est = {{"kind", "constrained"}, {"L", c->slope_bound}};
  } else {
    const auto& ridge = std::get<RidgeEstimator>(config.estimator);
    const char* rule = ridge.rule == RidgeEstimator::Rule::fixed
                           ? "fixed"
                           : ridge.rule == RidgeEstimator::Rule::sqrt_d_over_n
                                 ? "sqrt_d_over_n"
                                 : "d_over_n";
    est = {{"kind", "ridge"}, {"lambda_rule", rule}, {"lambda", ridge.lambda}};
  }
  nlohmann::json loss{{"kind", config.loss.kind == LossKind::squared
                                   ? "squared"
                                   : config.loss.kind == LossKind::absolute
                                         ? "absolute"
                                         : "cross_entropy"}};
  if (config.loss.kind == LossKind::cross_entropy)
    loss["lambda_clip"] = config.loss.lambda_clip;
  const char* bound = config.bound == BoundKind::none
                          ? "none"
                          : config.bound == BoundKind::constrained
                                ? "constrained"
                                : "penalized";
  return nlohmann::json{{"problem", to_json(config.problem)},
                        {"estimator", est},
                        {"loss", loss},
                        {"n_grid", config.n_grid},
                        {"trials", config.trials},
                        {"gamma", config.gamma},
                        {"master_seed", config.master_seed},
                        {"bound", bound},
                        {"workers", config.workers}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig config;
  try {
    config.problem = problem_from_json(j.at("problem"));
    const auto& est = j.at("estimator");
    const std::string kind = est.at("kind").get<std::string>();
    if (kind == "constrained") {
      config.estimator = ConstrainedEstimator{est.at("L").get<double>()};
    } else if (kind == "ridge") {
      RidgeEstimator ridge;
      const std::string rule = est.at("lambda_rule").get<std::string>();
      if (rule == "fixed") {
        ridge.rule = RidgeEstimator::Rule::fixed;
        ridge.lambda = est.at("lambda").get<double>();
      } else if (rule == "sqrt_d_over_n") {
        ridge.rule = RidgeEstimator::Rule::sqrt_d_over_n;
      } else if (rule == "d_over_n") {
        ridge.rule = RidgeEstimator::Rule::d_over_n;
      } else {
        throw ConfigError("unknown lambda_rule: " + rule);
      }
      config.estimator = ridge;
    } else {
      throw ConfigError("unknown estimator kind: " + kind);
    }
    const std::string loss = j.at("loss").at("kind").get<std::string>();
    if (loss == "squared") {
      config.loss = LossSpec::squared();
    } else if (loss == "absolute") {
      config.loss = LossSpec::absolute();
    } else if (loss == "cross_entropy") {
      config.loss =
          LossSpec::cross_entropy(j.at("loss").at("lambda_clip").get<double>());
    } else {
      throw ConfigError("unknown loss kind: " + loss);
    }
    config.n_grid = j.at("n_grid").get<std::vector<long>>();
    config.trials = j.at("trials").get<int>();
    config.gamma = j.at("gamma").get<double>();
    config.master_seed = j.at("master_seed").get<std::uint64_t>();
    const std::string bound = j.at("bound").get<std::string>();
    if (bound == "none") {
      config.bound = BoundKind::none;
    } else if (bound == "constrained") {
      config.bound = BoundKind::constrained;
    } else if (bound == "penalized") {
      config.bound = BoundKind::penalized;
    } else {
      throw ConfigError("unknown bound kind: " + bound);
    }
    config.workers = j.value("workers", 0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  config.validate();
  return config;
}

}  // namespace chainrisk
