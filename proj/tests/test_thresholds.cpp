#include "calib/thresholds.hpp"
#include "calib/synth.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace calib;

namespace {

// Brute-force training FPR attained by a threshold.
double attained_fpr(const std::vector<double>& distances, double tau) {
  long long below = 0;
  for (double d : distances)
    if (d < tau) ++below;
  return static_cast<double>(below) / distances.size();
}

}  // namespace

TEST_CASE("model_threshold closed form and scaling") {
  FittedModel m{2, 1.0, 0.0, 1.0};
  for (double eps : {0.01, 0.1, 0.5}) {
    double tau = model_threshold(m, eps);
    CHECK(tau == Catch::Approx(std::sqrt(-2.0 * std::log(1.0 - eps))).margin(1e-6));
  }
  FittedModel m2{2, 2.0, 0.0, 1.0};
  CHECK(model_threshold(m2, 0.05) ==
        Catch::Approx(2.0 * model_threshold(m, 0.05)).epsilon(1e-9));
}

TEST_CASE("model_threshold satisfies the cdf identity") {
  FittedModel m{18, 1.7, 9.0, 1.0};
  for (double eps : {0.001, 0.01, 0.25}) {
    double tau = model_threshold(m, eps);
    double x = (tau / m.sigma_opt) * (tau / m.sigma_opt);
    CHECK(noncentral_chi2_cdf(x, m.dim_opt, m.lambda_opt) ==
          Catch::Approx(eps).margin(1e-6));
  }
  CHECK_THROWS_AS(model_threshold(m, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(model_threshold(m, 1.0), std::invalid_argument);
}

TEST_CASE("model_threshold attains the target on held-out impostors") {
  // impostor distances drawn from the model itself
  const double sigma0 = 1.3;
  auto train = sample_noncentral_chi2(18, 9.0, 500, 2024);
  InterClassDistances d{"c", {}};
  for (double x : train) d.distances.push_back(sigma0 * std::sqrt(x));
  auto m = fit(d, FitConstraints{15, 22, 0.8, 2.0, 50});
  double tau = model_threshold(m, 0.01);
  auto held = sample_noncentral_chi2(18, 9.0, 10000, 4048);
  long long below = 0;
  for (double x : held)
    if (sigma0 * std::sqrt(x) < tau) ++below;
  CHECK(static_cast<double>(below) / held.size() ==
        Catch::Approx(0.01).margin(0.005));
}

TEST_CASE("generic_data_threshold interpolation branches") {
  std::vector<double> d{1.0, 2.0, 3.0, 4.0};
  CHECK(generic_data_threshold(d, 0.1) == Catch::Approx(0.4));
  CHECK(generic_data_threshold(d, 0.375) == Catch::Approx(1.5));
  CHECK(generic_data_threshold(d, 0.5) == Catch::Approx(2.0));  // eps*N integer
  CHECK_THROWS_AS(generic_data_threshold({}, 0.1), std::invalid_argument);
}

TEST_CASE("class_data_threshold examples") {
  InterClassDistances d{"c", {10.0, 20.0}};
  CHECK(class_data_threshold(d, 0.25) == Catch::Approx(5.0));
  CHECK(class_data_threshold(d, 0.75) == Catch::Approx(15.0));
  // threshold collapses as eps -> 0+
  CHECK(class_data_threshold(d, 1e-9) == Catch::Approx(2e-8).epsilon(1e-9));
}

TEST_CASE("verify decision is strict at the threshold") {
  ThresholdSpec spec{0.01, ThresholdMethod::model, 1.5};
  CHECK(verify(0.0, spec));
  CHECK_FALSE(verify(1.5, spec));
  CHECK_FALSE(verify(2.0, spec));
}

TEST_CASE("thresholds are monotone in epsilon") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uni(0.1, 10.0);
  std::vector<double> d;
  for (int i = 0; i < 30; ++i) d.push_back(uni(rng));
  FittedModel m{18, 1.2, 7.0, 1.0};
  double prev_g = 0.0, prev_c = 0.0, prev_m = 0.0;
  for (double eps : {0.001, 0.01, 0.05, 0.2, 0.5, 0.9}) {
    double g = generic_data_threshold(d, eps);
    double c = class_data_threshold({"c", d}, eps);
    double mm = model_threshold(m, eps);
    CHECK(g >= prev_g);
    CHECK(c >= prev_c);
    CHECK(mm >= prev_m);
    prev_g = g;
    prev_c = c;
    prev_m = mm;
  }
}

TEST_CASE("data-driven thresholds attain FPR within 1/N of target") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uni(0.5, 20.0);
  for (int n : {4, 20, 99}) {
    std::vector<double> d;
    for (int i = 0; i < n; ++i) d.push_back(uni(rng));
    for (double eps : {0.005, 1.0 / n, 0.1, 0.37, 0.5, 0.83}) {
      if (!(eps > 0.0 && eps < 1.0)) continue;
      double tau = generic_data_threshold(d, eps);
      INFO("n=" << n << " eps=" << eps);
      CHECK(std::abs(attained_fpr(d, tau) - eps) <= 1.0 / n + 1e-12);
    }
  }
}

TEST_CASE("threshold is sort-invariant and pooled list matches generic") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> uni(0.0, 5.0);
  std::vector<double> d;
  for (int i = 0; i < 25; ++i) d.push_back(uni(rng));
  std::vector<double> shuffled = d;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  for (double eps : {0.01, 0.2, 0.77}) {
    CHECK(generic_data_threshold(d, eps) == generic_data_threshold(shuffled, eps));
    CHECK(class_data_threshold({"c", d}, eps) == generic_data_threshold(d, eps));
  }
}
