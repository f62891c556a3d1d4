// Shared helpers for the unit suites: random arms/kernels and a dense
// joint-Gaussian conditioning oracle kept independent of the library's
// factorization path.

#ifndef GPBANDITS_TESTS_TEST_UTIL_HPP_
#define GPBANDITS_TESTS_TEST_UTIL_HPP_

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "gpbandits/gp.hpp"
#include "gpbandits/kernels.hpp"

namespace gpb::testutil {

inline std::vector<BaseArm> random_arms(int n, int dim, Rng& rng,
                                        double range = 2.0) {
  std::vector<BaseArm> arms;
  arms.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Vector x(dim);
    for (int d = 0; d < dim; ++d) x[d] = rng.uniform(0.0, range);
    arms.emplace_back(i, std::move(x));
  }
  return arms;
}

inline std::shared_ptr<Matern52Kernel> random_matern(int dim, Rng& rng) {
  Vector lengthscales(dim);
  for (int d = 0; d < dim; ++d) lengthscales[d] = rng.uniform(0.3, 2.0);
  return std::make_shared<Matern52Kernel>(
      FeatureKernelParams(rng.uniform(0.5, 2.0), lengthscales));
}

// Posterior mean/variance by explicit dense inversion of K + noise I.
inline PosteriorSummary dense_posterior(const Kernel& kernel,
                                        const MeanFn& prior,
                                        const std::vector<BaseArm>& observed,
                                        const Vector& y, double noise,
                                        const BaseArm& probe) {
  const auto n = static_cast<Eigen::Index>(observed.size());
  if (n == 0) return {prior(probe), kernel(probe, probe), noise};
  Matrix gram = kernel_gram(kernel, observed);
  gram.diagonal().array() += noise;
  Vector centered(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    centered[i] = y[i] - prior(observed[static_cast<std::size_t>(i)]);
  }
  const Matrix inv = gram.fullPivLu().inverse();
  const Vector k = kernel_cross(kernel, probe, observed);
  PosteriorSummary out;
  out.mean = prior(probe) + k.dot(inv * centered);
  out.variance = kernel(probe, probe) - k.dot(inv * k);
  out.noise_variance = noise;
  return out;
}

}  // namespace gpb::testutil

#endif  // GPBANDITS_TESTS_TEST_UTIL_HPP_
