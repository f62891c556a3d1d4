// Exact Gaussian-process inference on finite arm sets.
//
// GPState keeps the observation history together with the lower-triangular
// factor of K + noise*I; conditioning on a new batch extends the factor by a
// rank-|batch| block instead of refactorizing. PooledGPLearner maintains the
// same posterior over a fixed arm pool in covariance form, which keeps
// memory at O(pool^2) regardless of how many observations accumulate.

#ifndef GPBANDITS_GP_HPP_
#define GPBANDITS_GP_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "gpbandits/kernels.hpp"

namespace gpb {

using MeanFn = std::function<double(const BaseArm&)>;

inline MeanFn zero_mean() {
  return [](const BaseArm&) { return 0.0; };
}

// Posterior marginal at one arm plus the observation-noise variance, which
// index policies need for rectification.
struct PosteriorSummary {
  double mean = 0.0;
  double variance = 0.0;
  double noise_variance = 0.0;
};

// Immutable GP regression state. condition() returns a new state sharing the
// kernel; the Cholesky factor L of K + noise*I satisfies L L^T = K + noise*I
// and posterior queries run two triangular solves against it.
class GPState {
 public:
  GPState(std::shared_ptr<const Kernel> kernel, MeanFn prior_mean,
          double noise_variance);

  // Posterior mean/variance at one arm; with no observations this is the
  // prior.
  PosteriorSummary posterior(const BaseArm& a) const;

  // Joint posterior covariance block over the given arms.
  Matrix posterior_cov(const std::vector<BaseArm>& arms) const;

  // Extends the state with a batch of observations. Rewards must be finite
  // and match the arm count. The factor is extended by a block Cholesky
  // update; no full refactorization.
  GPState condition(const std::vector<BaseArm>& arms,
                    const Vector& rewards) const;

  int num_observations() const { return static_cast<int>(y_.size()); }
  double noise_variance() const { return noise_variance_; }
  const Kernel& kernel() const { return *kernel_; }
  std::shared_ptr<const Kernel> kernel_ptr() const { return kernel_; }
  const MeanFn& prior_mean() const { return prior_mean_; }
  const std::vector<BaseArm>& observed_arms() const { return arms_; }
  const Matrix& factor() const { return chol_; }

 private:
  std::shared_ptr<const Kernel> kernel_;
  MeanFn prior_mean_;
  double noise_variance_;
  std::vector<BaseArm> arms_;
  Vector y_;
  Matrix chol_;     // lower-triangular factor of K + noise*I
  Vector whitened_;  // L^{-1} (y - prior)
};

// Lower Cholesky of a symmetric PSD matrix with jitter 1e-8 * max(diag)
// added up front and escalated x10 up to `retries` times on failure.
Matrix jittered_cholesky(Matrix gram, int retries = 3);

// Draws one function sample over a finite arm list: prior + L z with L the
// jittered factor of the Gram and z standard normal from the seed.
// Deterministic given (seed, arm order).
Vector sample_function(const Kernel& kernel, const MeanFn& prior_mean,
                       const std::vector<BaseArm>& arms, std::uint64_t seed);

// Independent per-arm posterior draws f(a) ~ N(mu_{t-1}(a), sigma2_{t-1}(a)).
Vector sample_posterior_independent(const GPState& state,
                                    const std::vector<BaseArm>& arms,
                                    std::uint64_t seed);

// Exact GP posterior over a fixed finite pool, maintained in covariance form
// (mean vector + full covariance). update() performs the conjugate rank-K
// round update; posterior() is O(1) per arm afterwards. Produces the same
// posterior as GPState over the pool.
class PooledGPLearner {
 public:
  PooledGPLearner(std::shared_ptr<const Kernel> kernel, const MeanFn& prior_mean,
                  std::vector<BaseArm> pool, double noise_variance);

  void update(const SuperArm& chosen, const Vector& rewards);

  PosteriorSummary posterior(int arm_id) const;
  Matrix posterior_cov(const SuperArm& arms) const;

  int pool_size() const { return static_cast<int>(pool_.size()); }
  double noise_variance() const { return noise_variance_; }
  const std::vector<BaseArm>& pool() const { return pool_; }

 private:
  std::vector<BaseArm> pool_;
  double noise_variance_;
  Vector mean_;
  Matrix cov_;
};

}  // namespace gpb

#endif  // GPBANDITS_GP_HPP_
