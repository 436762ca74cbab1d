#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chainrisk/bounds.hpp"
#include "chainrisk/concentration.hpp"
#include "chainrisk/covering.hpp"
#include "chainrisk/errors.hpp"
#include "chainrisk/estimators.hpp"
#include "chainrisk/harness.hpp"
#include "chainrisk/orlicz.hpp"
#include "chainrisk/presets.hpp"
#include "chainrisk/rng.hpp"
#include "chainrisk/version.hpp"

namespace {

using nlohmann::json;

void emit(const json& payload, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << payload.dump(2) << std::endl;
  } else {
    std::ofstream out(out_path);
    if (!out) throw chainrisk::ConfigError("cannot write " + out_path);
    out << payload.dump(2) << std::endl;
  }
}

chainrisk::ExperimentConfig load_config(const std::string& preset,
                                        const std::string& config_path) {
  if (!preset.empty() && !config_path.empty())
    throw chainrisk::ConfigError("use either --preset or --config, not both");
  if (!preset.empty()) return chainrisk::presets::by_name(preset);
  if (config_path.empty())
    throw chainrisk::ConfigError("missing --preset or --config");
  std::ifstream in(config_path);
  if (!in) throw chainrisk::ConfigError("cannot open config: " + config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw chainrisk::ConfigError(std::string("config is not valid JSON: ") +
                                 e.what());
  }
  return chainrisk::config_from_json(j);
}

struct CommonOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<double> gamma;
  int workers = 0;
};

void apply(const CommonOverrides& common, chainrisk::ExperimentConfig& config) {
  if (common.seed) config.master_seed = *common.seed;
  if (common.trials) config.trials = *common.trials;
  if (common.gamma) config.gamma = *common.gamma;
  if (common.workers > 0) config.workers = common.workers;
}

int run_bound(const std::string& preset, const std::string& config_path,
              long n, std::optional<double> gamma, const std::string& out) {
  auto config = load_config(preset, config_path);
  if (gamma) config.gamma = *gamma;
  chainrisk::BoundReport report;
  if (const auto* c =
          std::get_if<chainrisk::ConstrainedEstimator>(&config.estimator)) {
    report = chainrisk::constrained_bound(config.problem, c->slope_bound,
                                          config.gamma, n);
  } else {
    const auto& ridge = std::get<chainrisk::RidgeEstimator>(config.estimator);
    const double lambda =
        chainrisk::ridge_lambda_for(ridge, config.problem.dim, n);
    report = chainrisk::penalized_bound(config.problem, lambda,
                                        config.problem.target_slope.norm(),
                                        config.gamma, n);
  }
  emit(chainrisk::to_json(report), out);
  return 0;
}

int run_simulate(const std::string& preset, const std::string& config_path,
                 const CommonOverrides& common, const std::string& out) {
  auto config = load_config(preset, config_path);
  apply(common, config);
  const auto result = chainrisk::run_experiment(config);
  const std::string csv = chainrisk::results_csv(result);
  if (out.empty()) {
    std::cout << chainrisk::summary_json(result).dump(2) << std::endl;
  } else {
    std::ofstream csv_out(out + ".csv");
    if (!csv_out) throw chainrisk::ConfigError("cannot write " + out + ".csv");
    csv_out << csv;
    emit(chainrisk::summary_json(result), out + ".json");
  }
  if (config.bound != chainrisk::BoundKind::none) {
    const auto dom = chainrisk::dominance_check(result);
    std::cerr << "dominance: " << (dom.all_pass ? "pass" : "FAIL") << " ("
              << dom.note << ")" << std::endl;
    if (!dom.all_pass) return 1;
  }
  return 0;
}

int run_rates(const std::string& csv_path, const std::string& out) {
  std::ifstream in(csv_path);
  if (!in) throw chainrisk::ConfigError("cannot open results CSV: " + csv_path);
  const auto records = chainrisk::read_results_csv(in);
  std::map<long, std::vector<double>> by_n;
  for (const auto& rec : records)
    if (!rec.failed) by_n[rec.n].push_back(rec.excess_risk);
  std::vector<long> ns;
  std::vector<double> medians;
  for (auto& [n, values] : by_n) {
    ns.push_back(n);
    medians.push_back(chainrisk::median_of(values));
  }
  const auto fit = chainrisk::rate_fit(ns, medians);
  json per_n = json::array();
  for (size_t i = 0; i < ns.size(); ++i)
    per_n.push_back({{"n", ns[i]}, {"median", medians[i]}});
  emit(json{{"rate_fit",
             {{"slope", fit.slope},
              {"intercept", fit.intercept},
              {"r2", fit.r2}}},
            {"per_n", per_n}},
       out);
  return 0;
}

int run_orlicz(const std::string& dist, double q, long n, std::uint64_t seed,
               double tol, const std::string& out) {
  chainrisk::Rng rng(chainrisk::derive_stream(seed, 0));
  std::vector<double> samples(n);
  for (auto& v : samples) {
    if (dist == "gaussian") {
      v = rng.gaussian();
    } else if (dist == "laplace") {
      v = rng.laplace();
    } else if (dist == "uniform") {
      v = rng.uniform();
    } else {
      throw chainrisk::ConfigError("unknown --dist: " + dist);
    }
  }
  const auto est = chainrisk::orlicz_norm_empirical(samples, q, tol);
  emit(json{{"dist", dist},
            {"q", q},
            {"n", n},
            {"seed", seed},
            {"value", est.value}},
       out);
  return 0;
}

int run_cover(int ball_dim, double eps, long points, std::uint64_t seed,
              const std::string& out) {
  chainrisk::Rng rng(chainrisk::derive_stream(seed, 0));
  Eigen::MatrixXd pts(points, ball_dim);
  for (long i = 0; i < points; ++i)
    pts.row(i) = rng.uniform_in_ball(ball_dim).transpose();
  const auto centers = chainrisk::greedy_cover(pts, eps);
  const double entropy = chainrisk::entropy_ball(eps, 1.0, ball_dim);
  emit(json{{"dim", ball_dim},
            {"eps", eps},
            {"points", points},
            {"cover_size", centers.size()},
            {"log_cover_size", std::log(static_cast<double>(centers.size()))},
            {"entropy_ball", entropy}},
       out);
  return 0;
}

int run_verify(long reps, std::uint64_t seed, double gamma, int workers) {
  if (reps <= 0) throw chainrisk::ConfigError("--reps must be positive");
  struct Check {
    std::string name;
    bool pass;
    std::string detail;
  };
  std::vector<Check> checks;
  const double slack = 3.0 * std::sqrt(gamma * (1.0 - gamma) / reps);

  {  // Orlicz: gaussian psi_2 norm and tail domination
    chainrisk::Rng rng(chainrisk::derive_stream(seed, 1));
    std::vector<double> w(200000);
    for (auto& v : w) v = rng.gaussian();
    const double est = chainrisk::orlicz_norm_empirical(w, 2.0).value;
    const double expect = std::sqrt(8.0 / 3.0);
    bool pass = std::abs(est - expect) < 0.05;
    std::ostringstream detail;
    detail << "estimate " << est << " vs " << expect;
    for (double t = 0.5; t <= 3.0; t += 0.5) {
      double freq = 0.0;
      for (double v : w) freq += std::abs(v) >= t ? 1.0 : 0.0;
      freq /= w.size();
      pass = pass && freq <= chainrisk::tail_bound(expect, 2.0, t);
    }
    checks.push_back({"orlicz-gaussian", pass, detail.str()});
  }
  {  // Finite-class maximal inequalities
    for (auto [family, name] :
         {std::pair{chainrisk::FiniteMaxFamily::gaussian_q2, "finite-max-q2"},
          {chainrisk::FiniteMaxFamily::laplace_q1, "finite-max-q1"},
          {chainrisk::FiniteMaxFamily::moment_theta1, "finite-max-moment"}}) {
      const double freq = chainrisk::finite_max_violation_frequency(
          family, 50, gamma, reps, chainrisk::derive_stream(seed, 2));
      std::ostringstream detail;
      detail << "violation frequency " << freq << " <= " << gamma + slack;
      checks.push_back({name, freq <= gamma + slack, detail.str()});
    }
  }
  {  // Sup-process bound
    chainrisk::SupProcessMcConfig config;
    config.cov = Eigen::MatrixXd::Identity(2, 2);
    config.n = 300;
    config.gamma = gamma;
    config.reps = std::min<long>(reps, 500);
    config.seed = chainrisk::derive_stream(seed, 3);
    config.workers = workers;
    const auto res = chainrisk::validate_sup_bound_mc(config);
    const double sl =
        3.0 * std::sqrt(gamma * (1.0 - gamma) / config.reps);
    std::ostringstream detail;
    detail << "violation frequency " << res.violation_frequency << " <= "
           << gamma + sl << " (net " << res.net_size << ")";
    checks.push_back(
        {"sup-process", res.violation_frequency <= gamma + sl, detail.str()});
  }
  {  // Matrix norm inequality
    chainrisk::Rng rng(chainrisk::derive_stream(seed, 4));
    bool pass = true;
    for (int k = 0; k < 100; ++k) {
      const int n = 1 + static_cast<int>(rng.uniform() * 20);
      const int d = 1 + static_cast<int>(rng.uniform() * 10);
      Eigen::MatrixXd a(n, d);
      Eigen::VectorXd b(n);
      for (int i = 0; i < n; ++i) {
        b[i] = rng.gaussian();
        for (int j = 0; j < d; ++j) a(i, j) = rng.gaussian();
      }
      pass = pass && chainrisk::lsenorm_check(a, b, 0.01 + rng.uniform()).holds;
    }
    checks.push_back({"lsenorm", pass, "100 random instances"});
  }
  {  // Covering entropy
    chainrisk::Rng rng(chainrisk::derive_stream(seed, 5));
    bool pass = true;
    for (int d : {1, 2, 3}) {
      Eigen::MatrixXd pts(2000 * d, d);
      for (int i = 0; i < pts.rows(); ++i)
        pts.row(i) = rng.uniform_in_ball(d).transpose();
      for (double eps : {0.25, 0.5, 1.0}) {
        const auto centers = chainrisk::greedy_cover(pts, eps);
        pass = pass && std::log(static_cast<double>(centers.size())) <=
                           chainrisk::entropy_ball(eps, 1.0, d);
      }
    }
    checks.push_back({"covering-ball", pass, "d in {1,2,3}, eps in {.25,.5,1}"});
  }

  bool all = true;
  for (const auto& c : checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail
              << std::endl;
    all = all && c.pass;
  }
  std::cout << (all ? "verify: all checks passed" : "verify: FAILURES above")
            << std::endl;
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("chainrisk ") + chainrisk::kVersion +
               " - excess-risk bounds for least squares and their "
               "Monte-Carlo validation"};
  app.require_subcommand(1);

  std::string preset, config_path, out_path, csv_path, dist = "gaussian";
  long n = 1000, points = 10000, reps = 2000;
  double q = 2.0, tol = 1e-6, eps = 0.5;
  int ball_dim = 2;
  CommonOverrides common;
  std::uint64_t seed = 1;
  double gamma = 0.1;
  std::optional<double> gamma_opt;
  std::optional<std::uint64_t> seed_opt;
  std::optional<int> trials_opt;
  int workers = 0;

  auto* bound = app.add_subcommand("bound", "evaluate a bound as JSON");
  bound->add_option("--preset", preset, "preset name");
  bound->add_option("--config", config_path, "experiment config JSON");
  bound->add_option("--n", n, "sample size")->check(CLI::PositiveNumber);
  bound->add_option("--gamma", gamma_opt, "confidence level in (0,1)");
  bound->add_option("--out", out_path, "output path (default stdout)");

  auto* simulate = app.add_subcommand(
      "simulate", "run a seeded experiment sweep; writes CSV + summary JSON");
  simulate->add_option("--preset", preset, "preset name");
  simulate->add_option("--config", config_path, "experiment config JSON");
  simulate->add_option("--out", out_path, "output prefix (.csv/.json)");
  simulate->add_option("--seed", seed_opt, "master seed override");
  simulate->add_option("--trials", trials_opt, "trials per grid point")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--gamma", gamma_opt, "confidence level override");
  simulate->add_option("--workers", workers, "worker threads (0 = auto)")
      ->envname("CHAINRISK_WORKERS");

  auto* verify = app.add_subcommand(
      "verify", "run the concentration/covering property suite");
  verify->add_option("--reps", reps, "repetitions per Monte-Carlo check");
  verify->add_option("--seed", seed, "seed");
  verify->add_option("--gamma", gamma, "confidence level in (0,1)");
  verify->add_option("--workers", workers, "worker threads (0 = auto)")
      ->envname("CHAINRISK_WORKERS");

  auto* rates = app.add_subcommand("rates", "fit log-log rates from a results CSV");
  rates->add_option("--csv", csv_path, "results CSV path")->required();
  rates->add_option("--out", out_path, "output path (default stdout)");

  auto* orlicz = app.add_subcommand("orlicz", "estimate an empirical psi_q norm");
  orlicz->add_option("--dist", dist, "gaussian | laplace | uniform");
  orlicz->add_option("--q", q, "Orlicz exponent >= 1");
  orlicz->add_option("--n", n, "sample count")->check(CLI::PositiveNumber);
  orlicz->add_option("--seed", seed, "seed");
  orlicz->add_option("--tol", tol, "tolerance on the defining expectation");
  orlicz->add_option("--out", out_path, "output path (default stdout)");

  auto* cover = app.add_subcommand("cover", "greedy cover of a sampled unit ball");
  cover->add_option("--ball", ball_dim, "ball dimension")
      ->check(CLI::PositiveNumber);
  cover->add_option("--eps", eps, "cover radius")->check(CLI::PositiveNumber);
  cover->add_option("--points", points, "sample count")
      ->check(CLI::PositiveNumber);
  cover->add_option("--seed", seed, "seed");
  cover->add_option("--out", out_path, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  common.seed = seed_opt;
  common.trials = trials_opt;
  common.gamma = gamma_opt;
  common.workers = workers;

  try {
    if (bound->parsed())
      return run_bound(preset, config_path, n, gamma_opt, out_path);
    if (simulate->parsed())
      return run_simulate(preset, config_path, common, out_path);
    if (verify->parsed()) return run_verify(reps, seed, gamma, workers);
    if (rates->parsed()) return run_rates(csv_path, out_path);
    if (orlicz->parsed())
      return run_orlicz(dist, q, n, seed, tol, out_path);
    if (cover->parsed())
      return run_cover(ball_dim, eps, points, seed, out_path);
  } catch (const chainrisk::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const chainrisk::InputError& e) {
    std::cerr << "input error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 2;
}
