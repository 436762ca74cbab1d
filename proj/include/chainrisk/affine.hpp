#pragma once

#include <Eigen/Core>

namespace chainrisk {

/// Affine hypothesis f(x) = slope . x + bias.
struct AffineFunction {
  Eigen::VectorXd slope;
  double bias = 0.0;

  double operator()(const Eigen::VectorXd& x) const {
    return slope.dot(x) + bias;
  }

  int dim() const { return static_cast<int>(slope.size()); }
};

}  // namespace chainrisk
