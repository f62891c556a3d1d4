// Scalar probability utilities: inverse error function with Newton
// refinement, Chernoff-type bounds on erf^{-1}, Gaussian quantiles and the
// mean of a rectified Gaussian. All functions are pure and thread-safe.

#ifndef GPBANDITS_STATS_HPP_
#define GPBANDITS_STATS_HPP_

namespace gpb {

// Inverse of erf on (-1, 1). Rational initial guess refined by Newton
// iterations against std::erf; round-trip |erf(erf_inv(u)) - u| <= 1e-12.
// Throws std::invalid_argument for |u| >= 1.
double erf_inv(double u);

// Lower bound sqrt(-log((1-u)/theta)/omega) with the maximal
// theta = sqrt(2e/pi) * sqrt(omega-1)/omega. Valid for u in [0,1), omega > 1.
// A negative root argument is clamped to 0 (the bound is vacuous there).
double erf_inv_lower_bound(double u, double omega);

// Upper bound with caller-supplied theta >= 1 and omega in (0, 1].
double erf_inv_upper_bound(double u, double omega, double theta);

// erf_inv(1 - epsilon) computed from the complement, stable for epsilon all
// the way down to ~1e-300 where 1 - epsilon is no longer representable.
double erf_inv_complement(double epsilon);

// Standard normal density and distribution function (erfc-based, accurate in
// the far tails).
double std_normal_pdf(double x);
double std_normal_cdf(double x);

// p-quantile of N(mu, sigma2): mu + sigma * sqrt(2) * erf_inv(2p - 1).
// Throws std::invalid_argument unless p in (0,1) and sigma2 >= 0.
double gaussian_quantile(double p, double mu, double sigma2);

// E[max(0, X)] for X ~ N(mu, sigma2); exactly max(0, mu) when sigma2 == 0.
double rectified_mean(double mu, double sigma2);

}  // namespace gpb

#endif  // GPBANDITS_STATS_HPP_
