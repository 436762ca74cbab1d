#pragma once

#include <cmath>
#include <map>
#include <string>

#include <json.hpp>

namespace chainrisk {

/// A bound value with its per-term breakdown. Invariant:
/// total = (moment + integral + delta_T + approx) / r + floor, to 1e-12 relative.
struct BoundReport {
  double total = 0.0;
  double moment_term = 0.0;
  double integral_term = 0.0;
  double delta_t_term = 0.0;
  double approx_term = 0.0;
  double floor_term = 0.0;
  double r = 1.0;
  std::map<std::string, double> inputs;

  bool terms_consistent() const {
    const double sum =
        (moment_term + integral_term + delta_t_term + approx_term) / r +
        floor_term;
    if (std::isinf(total) || std::isinf(sum)) return std::isinf(total) && std::isinf(sum);
    return std::abs(total - sum) <= 1e-12 * std::max(1.0, std::abs(total));
  }
};

inline nlohmann::json to_json(const BoundReport& b) {
  return nlohmann::json{
      {"total", b.total},
      {"terms",
       {{"moment_term", b.moment_term},
        {"integral_term", b.integral_term},
        {"delta_t_term", b.delta_t_term},
        {"approx_term", b.approx_term},
        {"floor_term", b.floor_term}}},
      {"r", b.r},
      {"inputs", b.inputs}};
}

}  // namespace chainrisk
