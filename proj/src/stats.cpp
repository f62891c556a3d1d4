#include "gpbandits/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace gpb {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kE = 2.71828182845904523536;
constexpr double kTwoOverSqrtPi = 1.1283791670955126;  // d/dx erf(x) at 0

// Winitzki-style initial estimate, accurate to ~1e-4 over (-1, 1).
double erf_inv_initial(double u) {
  const double a = 0.147;
  const double ln1mu2 = std::log((1.0 - u) * (1.0 + u));
  const double term = 2.0 / (kPi * a) + 0.5 * ln1mu2;
  const double inner = term * term - ln1mu2 / a;
  const double value = std::sqrt(std::sqrt(inner) - term);
  return u < 0.0 ? -value : value;
}

}  // namespace

double erf_inv(double u) {
  if (!(std::fabs(u) < 1.0)) {
    throw std::invalid_argument("erf_inv: argument must lie in (-1, 1)");
  }
  if (u == 0.0) return 0.0;
  double x = erf_inv_initial(u);
  // Newton on erf(x) - u; the derivative 2/sqrt(pi) exp(-x^2) is exact.
  for (int i = 0; i < 6; ++i) {
    const double err = std::erf(x) - u;
    const double deriv = kTwoOverSqrtPi * std::exp(-x * x);
    if (deriv == 0.0) break;
    const double step = err / deriv;
    x -= step;
    if (std::fabs(step) < 1e-15 * (1.0 + std::fabs(x))) break;
  }
  return x;
}

double erf_inv_complement(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 2.0)) {
    throw std::invalid_argument(
        "erf_inv_complement: complement must lie in (0, 2)");
  }
  if (epsilon >= 1e-8) return erf_inv(1.0 - epsilon);
  // Newton on log(erfc(x)) - log(epsilon); the log form stays conditioned
  // deep in the tail where erfc underflows toward denormals.
  const double log_eps = std::log(epsilon);
  double x = std::sqrt(std::max(0.0, -std::log(epsilon * std::sqrt(kPi))));
  for (int i = 0; i < 32; ++i) {
    const double erfc_x = std::erfc(x);
    if (erfc_x <= 0.0) break;  // beyond double range; keep the estimate
    const double g = std::log(erfc_x) - log_eps;
    const double gprime = -kTwoOverSqrtPi * std::exp(-x * x) / erfc_x;
    const double step = g / gprime;
    x -= step;
    if (std::fabs(step) < 1e-14 * (1.0 + std::fabs(x))) break;
  }
  return x;
}

double erf_inv_lower_bound(double u, double omega) {
  if (!(u >= 0.0 && u < 1.0)) {
    throw std::invalid_argument("erf_inv_lower_bound: u must lie in [0, 1)");
  }
  if (!(omega > 1.0)) {
    throw std::invalid_argument("erf_inv_lower_bound: omega must exceed 1");
  }
  const double theta = std::sqrt(2.0 * kE / kPi) * std::sqrt(omega - 1.0) / omega;
  const double arg = -std::log((1.0 - u) / theta) / omega;
  return std::sqrt(std::max(0.0, arg));
}

double erf_inv_upper_bound(double u, double omega, double theta) {
  if (!(u >= 0.0 && u < 1.0)) {
    throw std::invalid_argument("erf_inv_upper_bound: u must lie in [0, 1)");
  }
  if (!(omega > 0.0 && omega <= 1.0)) {
    throw std::invalid_argument("erf_inv_upper_bound: omega must lie in (0, 1]");
  }
  if (!(theta >= 1.0)) {
    throw std::invalid_argument("erf_inv_upper_bound: theta must be >= 1");
  }
  const double arg = -std::log((1.0 - u) / theta) / omega;
  return std::sqrt(std::max(0.0, arg));
}

double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double gaussian_quantile(double p, double mu, double sigma2) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("gaussian_quantile: p must lie in (0, 1)");
  }
  if (!(sigma2 >= 0.0)) {
    throw std::invalid_argument("gaussian_quantile: variance must be >= 0");
  }
  return mu + std::sqrt(sigma2) * std::sqrt(2.0) * erf_inv(2.0 * p - 1.0);
}

double rectified_mean(double mu, double sigma2) {
  if (!(sigma2 >= 0.0)) {
    throw std::invalid_argument("rectified_mean: variance must be >= 0");
  }
  if (sigma2 == 0.0) return std::max(0.0, mu);
  const double sigma = std::sqrt(sigma2);
  const double z = mu / sigma;
  return mu * std_normal_cdf(z) + sigma * std_normal_pdf(z);
}

}  // namespace gpb
