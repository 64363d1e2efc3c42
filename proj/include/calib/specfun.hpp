// Special functions for the non-central chi-squared model: modified Bessel
// function of the first kind, central / non-central chi-squared pdf and cdf,
// and quantile inversion by bracketing + bisection.
//
// All functions are pure; safe to call concurrently.

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace calib {

struct SeriesConfig {
  double rel_tol = 1e-12;  // stop when a term is < rel_tol * running sum
  int max_terms = 10000;

  void validate() const {
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
      throw std::invalid_argument("SeriesConfig: rel_tol must be in (0, 1)");
    if (max_terms < 1)
      throw std::invalid_argument("SeriesConfig: max_terms must be >= 1");
  }
};

namespace detail {

// Regularized lower incomplete gamma P(a, x), series expansion.
// Valid for x < a + 1.
inline double gamma_p_series(double a, double x, const SeriesConfig& cfg) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < cfg.max_terms; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * cfg.rel_tol) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x), modified Lentz continued
// fraction. Valid for x >= a + 1.
inline double gamma_q_cf(double a, double x, const SeriesConfig& cfg) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= cfg.max_terms; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < cfg.rel_tol) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x, const SeriesConfig& cfg = {}) {
  if (x < 0.0 || a <= 0.0)
    throw std::domain_error("gamma_p: require x >= 0 and a > 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x, cfg);
  return 1.0 - gamma_q_cf(a, x, cfg);
}

// log I_a(x) for x > 0, a >= 0. Series summed with the leading term
// factored out so only the log of the result can overflow.
inline double log_bessel_i(double a, double x, const SeriesConfig& cfg) {
  const double log_t0 = a * std::log(x / 2.0) - std::lgamma(a + 1.0);
  const double q = x * x / 4.0;
  double term = 1.0;
  double sum = 1.0;
  for (int i = 0; i < cfg.max_terms; ++i) {
    term *= q / ((i + 1.0) * (a + i + 1.0));
    sum += term;
    if (term < sum * cfg.rel_tol) break;
  }
  return log_t0 + std::log(sum);
}

}  // namespace detail

// Modified Bessel function of the first kind, I_a(x).
// Signals overflow for arguments whose result exceeds double range; callers
// needing large x should work with detail::log_bessel_i instead.
inline double bessel_i(double a, double x, const SeriesConfig& cfg = {}) {
  cfg.validate();
  if (a < 0.0 || x < 0.0)
    throw std::domain_error("bessel_i: require a >= 0 and x >= 0");
  if (x == 0.0) return a == 0.0 ? 1.0 : 0.0;
  double lg = detail::log_bessel_i(a, x, cfg);
  if (lg > std::log(std::numeric_limits<double>::max()))
    throw std::overflow_error("bessel_i: result exceeds double range at x=" +
                              std::to_string(x));
  return std::exp(lg);
}

// CDF of the central chi-squared distribution with k degrees of freedom,
// i.e. the regularized lower incomplete gamma P(k/2, x/2).
inline double central_chi2_cdf(double x, double k, const SeriesConfig& cfg = {}) {
  if (x < 0.0) throw std::domain_error("central_chi2_cdf: x must be >= 0");
  if (k <= 0.0) throw std::domain_error("central_chi2_cdf: k must be > 0");
  return detail::gamma_p(k / 2.0, x / 2.0, cfg);
}

// Density of the non-central chi-squared distribution with k degrees of
// freedom and non-centrality lambda, evaluated at x > 0. The lambda = 0 case
// branches to the central chi-squared density (the analytic limit).
inline double noncentral_chi2_pdf(double x, double k, double lambda,
                                  const SeriesConfig& cfg = {}) {
  cfg.validate();
  if (x <= 0.0) throw std::domain_error("noncentral_chi2_pdf: x must be > 0");
  if (k < 1.0) throw std::domain_error("noncentral_chi2_pdf: k must be >= 1");
  if (lambda < 0.0)
    throw std::domain_error("noncentral_chi2_pdf: lambda must be >= 0");
  if (lambda == 0.0) {
    double lg = (k / 2.0 - 1.0) * std::log(x) - x / 2.0 -
                (k / 2.0) * std::log(2.0) - std::lgamma(k / 2.0);
    return std::exp(lg);
  }
  double lg = -(x + lambda) / 2.0 +
              (k / 4.0 - 0.5) * std::log(x / lambda) +
              detail::log_bessel_i(k / 2.0 - 1.0, std::sqrt(lambda * x), cfg);
  return 0.5 * std::exp(lg);
}

// CDF of the non-central chi-squared distribution: the Poisson mixture
// e^{-lambda/2} sum_i (lambda/2)^i / i! * central_chi2_cdf(x, k + 2i).
// The central terms follow the incomplete-gamma recurrence
// P(a+1, y) = P(a, y) - y^a e^{-y} / Gamma(a+1).
inline double noncentral_chi2_cdf(double x, double k, double lambda,
                                  const SeriesConfig& cfg = {}) {
  cfg.validate();
  if (x < 0.0) throw std::domain_error("noncentral_chi2_cdf: x must be >= 0");
  if (k < 1.0) throw std::domain_error("noncentral_chi2_cdf: k must be >= 1");
  if (lambda < 0.0)
    throw std::domain_error("noncentral_chi2_cdf: lambda must be >= 0");
  if (x == 0.0) return 0.0;
  if (lambda == 0.0) return central_chi2_cdf(x, k, cfg);

  const double h = lambda / 2.0;
  const double a = k / 2.0;
  const double y = x / 2.0;
  double weight = std::exp(-h);                      // Poisson(h) at i = 0
  double cdf_term = detail::gamma_p(a, y, cfg);      // P(a + i, y)
  double step = std::exp(a * std::log(y) - y - std::lgamma(a + 1.0));
  double sum = 0.0;
  double weight_used = 0.0;
  for (int i = 0; i < cfg.max_terms; ++i) {
    sum += weight * cdf_term;
    weight_used += weight;
    // cdf_term decreases in i, so the tail is at most (1 - weight_used) * cdf_term
    if (i >= h && (1.0 - weight_used) * cdf_term < cfg.rel_tol * (sum + 1e-300))
      break;
    cdf_term = std::max(cdf_term - step, 0.0);
    step *= y / (a + i + 1.0);
    weight *= h / (i + 1.0);
  }
  return std::min(sum, 1.0);
}

// Inverse CDF of the non-central chi-squared distribution. Brackets from
// [0, k + lambda + 10 sqrt(2k + 4 lambda) + 10], doubling the upper end
// until it covers p, then bisects until the CDF residual is within p_tol.
inline double noncentral_chi2_quantile(double p, double k, double lambda,
                                       const SeriesConfig& cfg = {},
                                       double p_tol = 1e-9) {
  cfg.validate();
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("noncentral_chi2_quantile: p must be in (0, 1)");
  double lo = 0.0;
  double hi = k + lambda + 10.0 * std::sqrt(2.0 * k + 4.0 * lambda) + 10.0;
  int expand = 0;
  while (noncentral_chi2_cdf(hi, k, lambda, cfg) < p) {
    hi *= 2.0;
    if (++expand > 200)
      throw std::runtime_error(
          "noncentral_chi2_quantile: failed to bracket the quantile");
  }
  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < 500; ++iter) {
    mid = 0.5 * (lo + hi);
    double f = noncentral_chi2_cdf(mid, k, lambda, cfg);
    if (std::abs(f - p) <= p_tol) return mid;
    if (f < p)
      lo = mid;
    else
      hi = mid;
  }
  double f = noncentral_chi2_cdf(mid, k, lambda, cfg);
  if (std::abs(f - p) <= p_tol) return mid;
  throw std::runtime_error(
      "noncentral_chi2_quantile: bisection did not converge for p=" +
      std::to_string(p));
}

}  // namespace calib
