#include "chainrisk/presets.hpp"

#include <cmath>

#include "chainrisk/errors.hpp"

namespace chainrisk::presets {

namespace {

ProblemSpec gaussian_d3() {
  Eigen::VectorXd slope = Eigen::VectorXd::Zero(3);
  slope[0] = 0.5;
  return make_gaussian_spec(Eigen::VectorXd::Zero(3),
                            Eigen::MatrixXd::Identity(3, 3), slope, 0.5, 1.0,
                            "constrained-gaussian");
}

}  // namespace

ExperimentConfig constrained_gaussian() {
  ExperimentConfig config;
  config.problem = gaussian_d3();
  config.estimator = ConstrainedEstimator{1.0};
  config.loss = LossSpec::squared();
  config.n_grid = {100, 400, 1600, 6400};
  config.trials = 500;
  config.gamma = 0.1;
  config.master_seed = 20240817;
  config.bound = BoundKind::constrained;
  return config;
}

ExperimentConfig ridge_sqrt() {
  ExperimentConfig config;
  config.problem = gaussian_d3();
  config.problem.id = "ridge-sqrt";
  config.estimator = RidgeEstimator{RidgeEstimator::Rule::sqrt_d_over_n, 0.0};
  config.loss = LossSpec::squared();
  config.n_grid = {200, 800, 3200, 12800};
  config.trials = 200;
  config.gamma = 0.1;
  config.master_seed = 20240818;
  config.bound = BoundKind::penalized;
  return config;
}

ExperimentConfig ridge_dn() {
  // One-dimensional unit-variance design with a declared eigenvalue floor
  // kappa = 0.5, which forces b_x = sqrt(2): below the true psi_2 norm
  // sqrt(8/3) of a unit Gaussian, so this spec exercises the d/n regime
  // rather than the certified declaration route.
  ProblemSpec spec;
  spec.dim = 1;
  spec.design = GaussianDesign{Eigen::VectorXd::Zero(1),
                               Eigen::MatrixXd::Identity(1, 1)};
  spec.target_slope = Eigen::VectorXd::Constant(1, 0.5);
  spec.target_bias = 0.5;
  spec.noise_sd = 1.0;
  spec.b_x = std::sqrt(2.0);
  spec.b_y = std::sqrt(8.0 / 3.0 * (0.25 + 1.0));
  spec.kappa = 0.5;
  spec.id = "ridge-dn";
  spec.validate();

  ExperimentConfig config;
  config.problem = spec;
  config.estimator = RidgeEstimator{RidgeEstimator::Rule::d_over_n, 0.0};
  config.loss = LossSpec::squared();
  config.n_grid = {200, 800, 3200, 12800};
  config.trials = 200;
  config.gamma = 0.1;
  config.master_seed = 20240819;
  config.bound = BoundKind::penalized;
  return config;
}

ExperimentConfig mbg_skew(double p) {
  Eigen::VectorXd slope = Eigen::VectorXd::Zero(3);
  slope[2] = 0.5;
  ExperimentConfig config;
  config.problem = make_mbg_spec(p, slope, 0.5, 1.0, "mbg-skew");
  config.estimator = ConstrainedEstimator{0.5};
  config.loss = LossSpec::squared();
  config.n_grid = {400, 1600, 6400, 25600};
  config.trials = 300;
  config.gamma = 0.1;
  config.master_seed = 20240820;
  config.bound = BoundKind::constrained;
  return config;
}

ExperimentConfig by_name(const std::string& name) {
  if (name == "constrained-gaussian") return constrained_gaussian();
  if (name == "ridge-sqrt") return ridge_sqrt();
  if (name == "ridge-dn") return ridge_dn();
  if (name == "mbg-skew") return mbg_skew();
  throw ConfigError("unknown preset: " + name);
}

std::vector<std::string> names() {
  return {"constrained-gaussian", "ridge-sqrt", "ridge-dn", "mbg-skew"};
}

}  // namespace chainrisk::presets
