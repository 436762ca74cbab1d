#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "chainrisk/affine.hpp"
#include "chainrisk/problems.hpp"

#include <json.hpp>

namespace chainrisk {

struct ConstrainedEstimator {
  double slope_bound = 1.0;
};

struct RidgeEstimator {
  enum class Rule { fixed, sqrt_d_over_n, d_over_n };
  Rule rule = Rule::fixed;
  double lambda = 0.0;  // fixed rule only
};

using EstimatorSpec = std::variant<ConstrainedEstimator, RidgeEstimator>;

double ridge_lambda_for(const RidgeEstimator& est, int d, long n);

enum class BoundKind { none, constrained, penalized };

struct ExperimentConfig {
  ProblemSpec problem;
  EstimatorSpec estimator;
  LossSpec loss = LossSpec::squared();
  std::vector<long> n_grid;
  int trials = 100;
  double gamma = 0.1;
  std::uint64_t master_seed = 1;
  BoundKind bound = BoundKind::none;
  int workers = 0;  // 0 = auto

  void validate() const;
};

struct TrialRecord {
  long n = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double excess_risk = 0.0;
  double slope_norm = 0.0;
  double alpha = 0.0;
  bool failed = false;
};

struct PerNSummary {
  long n = 0;
  double median = 0.0;
  double quantile = 0.0;  // conservative (1-gamma)-quantile
  std::optional<double> bound;
  std::optional<bool> dominated;
  int failed_trials = 0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

struct ExperimentResult {
  std::vector<TrialRecord> trials;
  std::vector<PerNSummary> per_n;
  std::optional<RateFit> rate;
  ExperimentConfig config;
};

/// Seeded Monte-Carlo sweep over the n grid. Deterministic given master_seed
/// for any worker count: per-trial streams are derived from
/// (master_seed, grid index, trial index) only. Estimator failures are
/// recorded and excluded; more than 1% of failures raises NumericError.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// OLS of ln(median) on ln(n); needs >= 3 grid points with positive medians.
RateFit rate_fit(const std::vector<long>& ns, const std::vector<double>& medians);

struct DominanceReport {
  bool all_pass = false;
  std::vector<std::pair<long, bool>> per_n;
  std::string note;
};

/// Per-n dominance flags with a binomial-confidence note; requires a
/// configured bound and trials >= 30.
DominanceReport dominance_check(const ExperimentResult& result);

/// Conservative empirical quantile: the ceil(level * n)-th order statistic.
double conservative_quantile(std::vector<double> values, double level);
double median_of(std::vector<double> values);

/// Population minimizer of the configured reference class: the target
/// function when feasible, otherwise the norm-constrained projection along
/// the population ridge path.
AffineFunction population_reference(const ProblemSpec& spec,
                                    const EstimatorSpec& estimator);

// Persistence. CSV columns: n,trial,seed,excess_risk,slope_norm,alpha,failed;
// doubles are emitted with 17 significant digits so reloading is exact.
std::string results_csv(const ExperimentResult& result);
std::vector<TrialRecord> read_results_csv(std::istream& in);
nlohmann::json summary_json(const ExperimentResult& result);

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

}  // namespace chainrisk
