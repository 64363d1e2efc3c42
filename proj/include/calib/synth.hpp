// Synthetic-data generator for the isotropic-Gaussian embedding premise:
// Gaussian class centers with Gaussian within-class scatter, plus a direct
// sum-of-squared-normals sampler for the non-central chi-squared
// distribution used as an independent oracle.

#pragma once

#include "calib/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace calib {

// Deterministic normal sampler: mt19937_64 with a fixed 53-bit uniform
// mapping and Box-Muller, so a seed fully determines the stream without
// relying on the implementation-defined std::normal_distribution.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}

  double uniform01() {  // in (0, 1)
    return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = uniform01();
    double v = uniform01();
    double r = std::sqrt(-2.0 * std::log(u));
    double t = 2.0 * M_PI * v;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

 private:
  std::mt19937_64 rng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct EmbeddingConfig {
  int dim = 18;
  int n_classes = 100;
  double sigma_between = 1.0;
  double sigma_within = 0.3;
  std::uint64_t seed = 0;

  void validate() const {
    if (dim < 1) throw std::invalid_argument("EmbeddingConfig: dim must be >= 1");
    if (n_classes < 2)
      throw std::invalid_argument("EmbeddingConfig: n_classes must be >= 2");
    if (!(sigma_between > 0.0))
      throw std::invalid_argument("EmbeddingConfig: sigma_between must be > 0");
    if (sigma_within < 0.0)
      throw std::invalid_argument("EmbeddingConfig: sigma_within must be >= 0");
  }
};

struct SyntheticPopulation {
  int dim = 0;
  std::vector<Eigen::VectorXd> class_centers;
  std::vector<Eigen::VectorXd> training_patterns;
  std::vector<std::vector<Eigen::VectorXd>> query_patterns;

  int n_classes() const { return static_cast<int>(class_centers.size()); }

  std::string class_id(int c) const {
    std::string s = std::to_string(c);
    while (s.size() < 3) s.insert(s.begin(), '0');
    return "class_" + s;
  }
};

// Draw order: all class centers first, then per class the training pattern
// followed by its query patterns. The seed fully determines the output.
inline SyntheticPopulation generate(const EmbeddingConfig& config,
                                    int queries_per_class) {
  config.validate();
  if (queries_per_class < 0)
    throw std::invalid_argument("generate: queries_per_class must be >= 0");
  NormalSampler rng(config.seed);
  SyntheticPopulation pop;
  pop.dim = config.dim;
  pop.class_centers.reserve(config.n_classes);
  for (int c = 0; c < config.n_classes; ++c) {
    Eigen::VectorXd center(config.dim);
    for (int j = 0; j < config.dim; ++j)
      center(j) = config.sigma_between * rng.normal();
    pop.class_centers.push_back(std::move(center));
  }
  pop.training_patterns.reserve(config.n_classes);
  pop.query_patterns.resize(config.n_classes);
  for (int c = 0; c < config.n_classes; ++c) {
    auto draw = [&]() {
      Eigen::VectorXd p = pop.class_centers[c];
      for (int j = 0; j < config.dim; ++j)
        p(j) += config.sigma_within * rng.normal();
      return p;
    };
    pop.training_patterns.push_back(draw());
    pop.query_patterns[c].reserve(queries_per_class);
    for (int q = 0; q < queries_per_class; ++q)
      pop.query_patterns[c].push_back(draw());
  }
  return pop;
}

// Per class, Euclidean distances from its training pattern to every other
// class's training pattern.
inline std::vector<InterClassDistances> interclass_distances(
    const SyntheticPopulation& pop) {
  std::vector<InterClassDistances> out;
  const int n = pop.n_classes();
  out.reserve(n);
  for (int c = 0; c < n; ++c) {
    InterClassDistances d;
    d.class_id = pop.class_id(c);
    d.distances.reserve(n - 1);
    for (int o = 0; o < n; ++o) {
      if (o == c) continue;
      d.distances.push_back(
          (pop.training_patterns[c] - pop.training_patterns[o]).norm());
    }
    out.push_back(std::move(d));
  }
  return out;
}

// n draws of sum_{j=1..k} (Z_j + mu_j)^2 with Z_j standard normal and all
// non-centrality on the first axis (chi'^2 depends on mu only through its
// squared norm).
inline std::vector<double> sample_noncentral_chi2(int k, double lambda, int n,
                                                  std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("sample_noncentral_chi2: k must be >= 1");
  if (lambda < 0.0)
    throw std::invalid_argument("sample_noncentral_chi2: lambda must be >= 0");
  if (n < 1) throw std::invalid_argument("sample_noncentral_chi2: n must be >= 1");
  NormalSampler rng(seed);
  const double mu = std::sqrt(lambda);
  std::vector<double> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    double z0 = rng.normal() + mu;
    double s = z0 * z0;
    for (int j = 1; j < k; ++j) {
      double z = rng.normal();
      s += z * z;
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace calib
