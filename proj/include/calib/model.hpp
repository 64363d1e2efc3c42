// Per-class fitting of the non-central chi-squared model to inter-class
// distances: scaled squares, the non-centrality estimator, empirical CDF,
// goodness-of-fit scores, and the exhaustive grid search over (dim, sigma).

#pragma once

#include "calib/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace calib {

// One class's distances from its training pattern to every other class's
// training pattern. Bounded measures pass through unbound_transform before
// arriving here.
struct InterClassDistances {
  std::string class_id;
  std::vector<double> distances;
};

struct FitConstraints {
  int dim_low = 1;
  int dim_high = 1;
  double sigma_low = 1.0;
  double sigma_high = 1.0;
  int sigma_steps = 50;

  void validate() const {
    if (dim_low < 1 || dim_low > dim_high)
      throw std::invalid_argument("FitConstraints: need 1 <= dim_low <= dim_high");
    if (!(sigma_low > 0.0 && sigma_low <= sigma_high))
      throw std::invalid_argument(
          "FitConstraints: need 0 < sigma_low <= sigma_high");
    if (sigma_steps < 1)
      throw std::invalid_argument("FitConstraints: sigma_steps must be >= 1");
  }

  double sigma_at(int step) const {
    if (sigma_steps == 1) return sigma_low;
    return sigma_low + step * (sigma_high - sigma_low) / (sigma_steps - 1);
  }
};

struct FittedModel {
  int dim_opt = 0;
  double sigma_opt = 0.0;
  double lambda_opt = 0.0;
  double rho = 0.0;
};

enum class GoodnessMetric { ncc, bhattacharyya };

// x_i = (delta_i / sigma)^2, order-preserving.
inline std::vector<double> scaled_squares(const InterClassDistances& d,
                                          double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("scaled_squares: sigma must be > 0");
  std::vector<double> out;
  out.reserve(d.distances.size());
  for (double delta : d.distances) {
    double s = delta / sigma;
    out.push_back(s * s);
  }
  return out;
}

// Non-centrality estimate: max{ mean - dim, mean / (1 + dim) }.
inline double estimate_lambda(const std::vector<double>& samples, int dim) {
  if (samples.empty())
    throw std::invalid_argument("estimate_lambda: samples must be non-empty");
  double mean = std::accumulate(samples.begin(), samples.end(), 0.0) /
                static_cast<double>(samples.size());
  double beta = 1.0 / (1.0 + dim);
  return std::max(mean - dim, beta * mean);
}

// Empirical CDF of a sample: F(x) = |{x_j <= x}| / n.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
    if (sorted_.empty())
      throw std::invalid_argument("EmpiricalCdf: samples must be non-empty");
    std::sort(sorted_.begin(), sorted_.end());
  }

  double operator()(double x) const {
    auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) /
           static_cast<double>(sorted_.size());
  }

  const std::vector<double>& sorted_samples() const { return sorted_; }

  // CDF values at the sorted sample points themselves.
  std::vector<double> values_at_samples() const {
    const std::size_t n = sorted_.size();
    std::vector<double> v(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && sorted_[j + 1] == sorted_[i]) ++j;
      double val = static_cast<double>(j + 1) / static_cast<double>(n);
      for (std::size_t t = i; t <= j; ++t) v[t] = val;
      i = j + 1;
    }
    return v;
  }

 private:
  std::vector<double> sorted_;
};

inline EmpiricalCdf empirical_cdf(std::vector<double> samples) {
  return EmpiricalCdf(std::move(samples));
}

// Normalized cross-correlation (Pearson correlation) of two CDF traces.
inline double goodness(const std::vector<double>& phi_ref,
                       const std::vector<double>& phi) {
  if (phi_ref.size() != phi.size() || phi_ref.size() < 2)
    throw std::invalid_argument("goodness: vectors must have equal length >= 2");
  const double n = static_cast<double>(phi_ref.size());
  double ma = std::accumulate(phi_ref.begin(), phi_ref.end(), 0.0) / n;
  double mb = std::accumulate(phi.begin(), phi.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < phi_ref.size(); ++i) {
    double da = phi_ref[i] - ma;
    double db = phi[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0)
    throw std::invalid_argument("goodness: constant input vector");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

// Bhattacharyya coefficient over the discrete CDF increments; in [0, 1],
// higher is better, so grid selection can maximize either score.
inline double goodness_bhattacharyya(const std::vector<double>& phi_ref,
                                     const std::vector<double>& phi) {
  if (phi_ref.size() != phi.size() || phi_ref.empty())
    throw std::invalid_argument(
        "goodness_bhattacharyya: vectors must have equal non-zero length");
  double coeff = 0.0;
  double prev_a = 0.0, prev_b = 0.0;
  for (std::size_t i = 0; i < phi_ref.size(); ++i) {
    double pa = std::max(phi_ref[i] - prev_a, 0.0);
    double pb = std::max(phi[i] - prev_b, 0.0);
    coeff += std::sqrt(pa * pb);
    prev_a = phi_ref[i];
    prev_b = phi[i];
  }
  // tail mass beyond the largest sample (zero for the empirical side when
  // it is normalized to end at 1)
  coeff += std::sqrt(std::max(1.0 - prev_a, 0.0) * std::max(1.0 - prev_b, 0.0));
  return std::min(coeff, 1.0);
}

struct FitOptions {
  GoodnessMetric metric = GoodnessMetric::ncc;
  std::size_t min_distances = 10;
  SeriesConfig series;
};

// Exhaustive grid search over integer dim in [dim_low, dim_high] and a
// uniform sigma grid; for each candidate estimates lambda and scores the
// model CDF against the empirical CDF. Returns the best candidate; ties are
// broken by smaller dim, then smaller sigma (strict ">" keeps the first
// maximum in ascending loop order).
inline FittedModel fit(const InterClassDistances& d, const FitConstraints& c,
                       const FitOptions& opt = {}) {
  c.validate();
  if (d.distances.size() < opt.min_distances)
    throw std::invalid_argument("fit: need at least " +
                                std::to_string(opt.min_distances) +
                                " distances, have " +
                                std::to_string(d.distances.size()));

  // Sorted order of the scaled squares does not depend on sigma, so the
  // empirical CDF trace can be computed once.
  std::vector<double> sorted_delta = d.distances;
  std::sort(sorted_delta.begin(), sorted_delta.end());
  std::vector<double> phi_ref = EmpiricalCdf(sorted_delta).values_at_samples();

  const std::size_t n = sorted_delta.size();
  std::vector<double> samples(n), phi(n);
  FittedModel best;
  best.rho = -2.0;

  for (int dim = c.dim_low; dim <= c.dim_high; ++dim) {
    for (int step = 0; step < c.sigma_steps; ++step) {
      const double sigma = c.sigma_at(step);
      for (std::size_t i = 0; i < n; ++i) {
        double s = sorted_delta[i] / sigma;
        samples[i] = s * s;
      }
      double lambda = estimate_lambda(samples, dim);
      for (std::size_t i = 0; i < n; ++i)
        phi[i] = noncentral_chi2_cdf(samples[i], dim, lambda, opt.series);
      double rho = opt.metric == GoodnessMetric::ncc
                       ? goodness(phi_ref, phi)
                       : goodness_bhattacharyya(phi_ref, phi);
      if (rho > best.rho) best = FittedModel{dim, sigma, lambda, rho};
    }
  }
  return best;
}

}  // namespace calib
