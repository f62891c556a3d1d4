// Sparse variational GP with natural-gradient optimization.
//
// The variational distribution q(u) = N(m, S) lives on inducing values at M
// arms; the process is centered on the prior mean, so m parameterizes the
// deviation from it. Natural-gradient steps act on the Gaussian natural
// parameters (S^{-1} m, -1/2 S^{-1}); continuous inducing coordinates and
// kernel hyperparameters move by a first-order step on the batch ELBO at a
// separate inner rate.

#ifndef GPBANDITS_SVGP_HPP_
#define GPBANDITS_SVGP_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "gpbandits/gp.hpp"

namespace gpb {

struct SVGPState {
  std::shared_ptr<const Kernel> kernel;
  MeanFn prior_mean;
  double noise_variance = 1.0;
  std::vector<BaseArm> inducing;  // Z, size M >= 1
  Vector m;                       // variational mean, M
  Matrix S;                       // variational covariance, M x M PSD

  int num_inducing() const { return static_cast<int>(inducing.size()); }
};

// Fresh state with q equal to the prior over the inducing values
// (m = 0, S = K_ZZ).
SVGPState make_svgp_state(std::shared_ptr<const Kernel> kernel,
                          MeanFn prior_mean, double noise_variance,
                          std::vector<BaseArm> inducing);

// Marginal q(f(a)) through the inducing conditional.
PosteriorSummary svgp_posterior(const SVGPState& state, const BaseArm& a);

Matrix svgp_posterior_cov(const SVGPState& state,
                          const std::vector<BaseArm>& arms);

// Minibatch evidence lower bound with scaling total_count/|batch|:
//   sum_batch E_q[log N(y | f(a), noise)] * N/B - KL(q(u) || p(u)).
// An empty batch contributes only -KL.
double svgp_elbo(const SVGPState& state, const std::vector<BaseArm>& batch_arms,
                 const Vector& batch_rewards, int total_count);

// One natural-gradient ascent step on (m, S) at ngd_rate, plus a first-order
// step at inner_rate on the continuous inducing coordinates and kernel
// hyperparameters (central finite differences of the batch ELBO). S is
// re-projected to PSD by symmetrization and an eigenvalue floor of 1e-10.
// Throws NumericError (tagged with batch_id) if a gradient goes non-finite.
SVGPState svgp_ngd_step(const SVGPState& state,
                        const std::vector<BaseArm>& batch_arms,
                        const Vector& batch_rewards, int total_count,
                        double ngd_rate, double inner_rate, int batch_id = -1);

// The M most-visited edges paired with their contexts; ties broken by
// ascending edge id. Returns all visited edges when fewer than M exist.
std::vector<BaseArm> select_inducing(const std::map<int, int>& visit_counts,
                                     const std::vector<BaseArm>& contexts,
                                     int m);

}  // namespace gpb

#endif  // GPBANDITS_SVGP_HPP_
