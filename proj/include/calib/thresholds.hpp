// Turning a target false-positive rate into a distance threshold: the
// model-based quantile method and the two data-driven interpolation
// baselines (generic and class-specific).

#pragma once

#include "calib/model.hpp"
#include "calib/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace calib {

enum class ThresholdMethod { model, generic_data, class_data };

inline const char* to_string(ThresholdMethod m) {
  switch (m) {
    case ThresholdMethod::model: return "model";
    case ThresholdMethod::generic_data: return "generic_data";
    case ThresholdMethod::class_data: return "class_data";
  }
  return "?";
}

inline ThresholdMethod threshold_method_from_string(const std::string& s) {
  if (s == "model") return ThresholdMethod::model;
  if (s == "generic_data") return ThresholdMethod::generic_data;
  if (s == "class_data") return ThresholdMethod::class_data;
  throw std::invalid_argument("unknown threshold method: " + s);
}

struct ThresholdSpec {
  double target_fpr = 0.0;
  ThresholdMethod method = ThresholdMethod::model;
  double threshold = 0.0;
};

// tau = sigma_opt * sqrt(q) with q the non-central chi-squared quantile at
// epsilon; an impostor at distance below tau is accepted with model
// probability epsilon.
inline double model_threshold(const FittedModel& m, double epsilon,
                              const SeriesConfig& cfg = {}) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("model_threshold: epsilon must be in (0, 1)");
  double q = noncentral_chi2_quantile(epsilon, m.dim_opt, m.lambda_opt, cfg);
  return m.sigma_opt * std::sqrt(q);
}

namespace detail {

// Linear interpolation of the epsilon-quantile of a distance list. Below
// 1/N the threshold interpolates between 0 and the smallest distance; when
// epsilon*N lands on an integer the interpolation formula is 0/0 and the
// continuous limit delta_{floor(eps N)} is used.
inline double interpolated_threshold(std::vector<double> sorted_distances,
                                     double epsilon) {
  if (sorted_distances.empty())
    throw std::invalid_argument("interpolated_threshold: empty distance list");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("interpolated_threshold: epsilon must be in (0, 1)");
  std::stable_sort(sorted_distances.begin(), sorted_distances.end());
  const double n = static_cast<double>(sorted_distances.size());
  if (epsilon <= 1.0 / n) return epsilon * n * sorted_distances.front();
  double f = epsilon * n;
  auto lo = static_cast<std::size_t>(std::floor(f));
  auto hi = static_cast<std::size_t>(std::ceil(f));
  if (lo == hi) return sorted_distances[lo - 1];
  double dlo = sorted_distances[lo - 1];
  double dhi = sorted_distances[hi - 1];
  return dlo + (f - static_cast<double>(lo)) * (dhi - dlo);
}

}  // namespace detail

// One shared threshold from the pooled inter-class distances of all classes.
inline double generic_data_threshold(const std::vector<double>& all_distances,
                                     double epsilon) {
  return detail::interpolated_threshold(all_distances, epsilon);
}

// Same interpolation applied to a single class's distance list.
inline double class_data_threshold(const InterClassDistances& d, double epsilon) {
  return detail::interpolated_threshold(d.distances, epsilon);
}

// Accept iff the query distance is strictly below the threshold.
inline bool verify(double query_distance, const ThresholdSpec& spec) {
  return query_distance < spec.threshold;
}

}  // namespace calib
