#pragma once

#include <string>
#include <vector>

#include "chainrisk/harness.hpp"

namespace chainrisk::presets {

/// d = 3 isotropic Gaussian design, |a*| = 0.5, slope-constrained LSE with
/// L = 1 and the constrained bound.
ExperimentConfig constrained_gaussian();

/// Same design, ridge with lambda = sqrt(d/n) and the penalized bound.
ExperimentConfig ridge_sqrt();

/// d = 1 design with a declared eigenvalue floor (kappa = 0.5), ridge with
/// lambda = d/n and the penalized bound.
ExperimentConfig ridge_dn();

/// Skewed three-coordinate design at skew p, constrained LSE with L = 0.5.
ExperimentConfig mbg_skew(double p = 0.1);

ExperimentConfig by_name(const std::string& name);
std::vector<std::string> names();

}  // namespace chainrisk::presets
