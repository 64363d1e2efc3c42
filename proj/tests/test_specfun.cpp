#include "calib/specfun.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

using namespace calib;

namespace {

// Independent oracle: the Bessel series summed directly with exact
// factorials, fixed 30 terms.
double bessel_series_oracle(double a, double x) {
  double sum = 0.0;
  for (int i = 0; i < 30; ++i) {
    sum += std::pow(x / 2.0, a + 2 * i) /
           (std::tgamma(i + 1.0) * std::tgamma(a + i + 1.0));
  }
  return sum;
}

// Adaptive Simpson quadrature oracle.
double simpson(const std::function<double(double)>& f, double a, double b) {
  double c = 0.5 * (a + b);
  return (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b));
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double eps, double whole, int depth) {
  double c = 0.5 * (a + b);
  double left = simpson(f, a, c);
  double right = simpson(f, c, b);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, c, eps / 2.0, left, depth - 1) +
         adaptive_simpson(f, c, b, eps / 2.0, right, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double eps = 1e-10) {
  return adaptive_simpson(f, a, b, eps, simpson(f, a, b), 40);
}

// Poisson-mixture oracle for the non-central chi-squared density.
double pdf_mixture_oracle(double x, int k, double lambda) {
  double sum = 0.0;
  for (int i = 0; i < 200; ++i) {
    double logw = -lambda / 2.0 + i * std::log(lambda / 2.0) -
                  std::lgamma(i + 1.0);
    double kk = k + 2.0 * i;
    double logp = (kk / 2.0 - 1.0) * std::log(x) - x / 2.0 -
                  (kk / 2.0) * std::log(2.0) - std::lgamma(kk / 2.0);
    sum += std::exp(logw + logp);
  }
  return sum;
}

// Sum-of-squared-normals sampling oracle (independent of the synth module).
std::vector<double> mc_noncentral_chi2(int k, double lambda, int n,
                                       unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double mu = std::sqrt(lambda);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    double z0 = normal(rng) + mu;
    double s = z0 * z0;
    for (int j = 1; j < k; ++j) {
      double z = normal(rng);
      s += z * z;
    }
    out[i] = s;
  }
  return out;
}

}  // namespace

TEST_CASE("bessel_i basic values") {
  CHECK(bessel_i(0, 0) == 1.0);
  CHECK(bessel_i(1, 0) == 0.0);
  CHECK(bessel_i(0, 1) == Catch::Approx(1.2661).margin(5e-5));
  CHECK(bessel_i(0, 1) == Catch::Approx(bessel_series_oracle(0, 1)).epsilon(1e-12));
}

TEST_CASE("bessel_i matches brute-force series across orders") {
  for (double a : {0.0, 0.5, 1.0, 3.5, 8.0}) {
    for (double x : {0.1, 1.0, 4.0, 10.0}) {
      INFO("a=" << a << " x=" << x);
      CHECK(bessel_i(a, x) ==
            Catch::Approx(bessel_series_oracle(a, x)).epsilon(1e-10));
    }
  }
}

TEST_CASE("bessel_i is non-negative") {
  for (double a : {0.0, 0.5, 2.0, 10.0})
    for (double x : {0.0, 0.01, 1.0, 50.0, 200.0})
      CHECK(bessel_i(a, x) >= 0.0);
}

TEST_CASE("bessel_i domain and overflow errors") {
  CHECK_THROWS_AS(bessel_i(-1, 1), std::domain_error);
  CHECK_THROWS_AS(bessel_i(0, -1), std::domain_error);
  CHECK_THROWS_AS(bessel_i(0, 2000), std::overflow_error);
}

TEST_CASE("central chi2 cdf") {
  CHECK(central_chi2_cdf(0, 5) == 0.0);
  CHECK(central_chi2_cdf(1e6, 5) == Catch::Approx(1.0).margin(1e-12));
  // closed form 1 - e^{-x/2} for k = 2
  double x95 = -2.0 * std::log(0.05);
  CHECK(central_chi2_cdf(x95, 2) == Catch::Approx(0.95).margin(1e-10));
  for (double x : {0.3, 1.0, 2.5, 7.0})
    CHECK(central_chi2_cdf(x, 2) ==
          Catch::Approx(1.0 - std::exp(-x / 2.0)).margin(1e-12));
}

TEST_CASE("noncentral chi2 pdf values") {
  CHECK(noncentral_chi2_pdf(1, 2, 0) ==
        Catch::Approx(0.5 * std::exp(-0.5)).epsilon(1e-12));
  CHECK_THROWS_AS(noncentral_chi2_pdf(0, 2, 1), std::domain_error);
  CHECK_THROWS_AS(noncentral_chi2_pdf(-1, 2, 1), std::domain_error);

  CHECK(noncentral_chi2_pdf(2, 4, 3) ==
        Catch::Approx(pdf_mixture_oracle(2, 4, 3)).epsilon(1e-10));

  double total = integrate(
      [](double x) { return noncentral_chi2_pdf(x, 18, 9); }, 1e-12, 200.0);
  CHECK(total == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("noncentral chi2 pdf integrates to one over the (k, lambda) grid") {
  for (double k : {2.0, 10.0, 18.0, 22.0}) {
    for (double lambda : {0.0, 1.0, 9.0, 50.0}) {
      double upper = k + lambda + 20.0 * std::sqrt(2.0 * k + 4.0 * lambda) + 20.0;
      double total = integrate(
          [&](double x) { return noncentral_chi2_pdf(x, k, lambda); }, 1e-12,
          upper);
      INFO("k=" << k << " lambda=" << lambda);
      CHECK(total == Catch::Approx(1.0).margin(1e-6));
    }
  }
}

TEST_CASE("noncentral chi2 cdf basic properties") {
  CHECK(noncentral_chi2_cdf(0, 5, 3) == 0.0);
  CHECK(noncentral_chi2_cdf(-2.0 * std::log(0.05), 2, 0) ==
        Catch::Approx(0.95).margin(1e-10));
  // lambda = 0 reduces to the central cdf
  for (double x : {0.5, 3.0, 10.0, 30.0})
    for (double k : {2.0, 10.0, 22.0})
      CHECK(noncentral_chi2_cdf(x, k, 0) ==
            Catch::Approx(central_chi2_cdf(x, k)).margin(1e-10));
}

TEST_CASE("noncentral chi2 cdf is non-decreasing and reaches the tails") {
  for (double k : {2.0, 18.0}) {
    for (double lambda : {0.0, 9.0, 50.0}) {
      double hi = k + lambda + 10.0 * std::sqrt(2.0 * k + 4.0 * lambda) + 10.0;
      double prev = 0.0;
      for (int i = 1; i <= 1000; ++i) {
        double x = hi * i / 1000.0;
        double f = noncentral_chi2_cdf(x, k, lambda);
        CHECK(f >= prev - 1e-14);
        prev = f;
      }
      CHECK(prev == Catch::Approx(1.0).margin(1e-6));
    }
  }
}

TEST_CASE("noncentral chi2 cdf is decreasing in lambda") {
  for (double k : {2.0, 10.0, 18.0}) {
    for (double x : {1.0, 5.0, 15.0, 40.0}) {
      double prev = 2.0;
      for (double lambda : {0.0, 1.0, 9.0, 50.0}) {
        double f = noncentral_chi2_cdf(x, k, lambda);
        CHECK(f <= prev + 1e-12);
        prev = f;
      }
    }
  }
}

TEST_CASE("noncentral chi2 cdf matches the sampling oracle") {
  const int n = 10'000'000;
  auto draws = mc_noncentral_chi2(5, 4.0, n, 20240817);
  long long below = 0;
  for (double d : draws)
    if (d <= 10.0) ++below;
  double mc = static_cast<double>(below) / n;
  // MC standard error at this n is ~1.6e-4
  CHECK(noncentral_chi2_cdf(10.0, 5, 4.0) == Catch::Approx(mc).margin(1e-3));
}

TEST_CASE("quantile closed form and round trips") {
  CHECK(noncentral_chi2_quantile(0.95, 2, 0) ==
        Catch::Approx(-2.0 * std::log(0.05)).margin(1e-6));
  for (double p : {0.001, 0.01, 0.5, 0.99}) {
    for (double k : {2.0, 10.0, 22.0}) {
      for (double lambda : {0.0, 9.0, 50.0}) {
        double q = noncentral_chi2_quantile(p, k, lambda);
        INFO("p=" << p << " k=" << k << " lambda=" << lambda);
        CHECK(noncentral_chi2_cdf(q, k, lambda) == Catch::Approx(p).margin(1e-9));
      }
    }
  }
}

TEST_CASE("chi2(3) median against sampling oracle") {
  const int n = 10'000'000;
  auto draws = mc_noncentral_chi2(3, 0.0, n, 7);
  std::nth_element(draws.begin(), draws.begin() + n / 2, draws.end());
  double mc_median = draws[n / 2];
  CHECK(noncentral_chi2_quantile(0.5, 3, 0) ==
        Catch::Approx(mc_median).margin(5e-3));
}

TEST_CASE("quantile rejects invalid p") {
  CHECK_THROWS_AS(noncentral_chi2_quantile(0.0, 2, 0), std::domain_error);
  CHECK_THROWS_AS(noncentral_chi2_quantile(1.0, 2, 0), std::domain_error);
}

TEST_CASE("series config validation") {
  SeriesConfig bad;
  bad.rel_tol = 0.0;
  CHECK_THROWS_AS(bessel_i(0, 1, bad), std::invalid_argument);
  bad = SeriesConfig{};
  bad.max_terms = 0;
  CHECK_THROWS_AS(bessel_i(0, 1, bad), std::invalid_argument);
}
