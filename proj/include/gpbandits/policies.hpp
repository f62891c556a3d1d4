// Index policies and their parameter schedules.
//
// Three GP policy families (UCB, BayesUCB quantiles, Thompson sampling) plus
// the independent-Gaussian baseline. Schedules produce the confidence
// parameter beta_t or the quantile parameter eta_t; compute_indices turns
// per-arm posterior summaries into selection indices, with a cost-minimizing
// mode that rectifies the optimistic estimate so shortest-path oracles see
// non-negative weights, and a reward-maximizing mode that produces the plain
// optimistic indices.

#ifndef GPBANDITS_POLICIES_HPP_
#define GPBANDITS_POLICIES_HPP_

#include <vector>

#include "gpbandits/common.hpp"
#include "gpbandits/gp.hpp"

namespace gpb {

enum class PolicyFamily { kUCB, kBUCB, kTS };

enum class IndexMode { kMaximize, kMinimize };

// beta_t = scale * 2 log(cardinality * t^2 / sqrt(2 pi)). May be negative
// for tiny cardinality * t^2; callers clamp at 0 before taking sqrt.
double ucb_beta(int t, double cardinality, double scale = 1.0);

// eta_t = (2 pi)^{omega/2} / (2 cardinality^omega t^xi), clamped below
// 1/2 - 1e-12 so the quantile stays above the median.
double bucb_eta(int t, double cardinality, double xi, double omega);

// beta_t = 2 (erf_inv(1 - 2 eta_t))^2.
double bucb_beta(int t, double cardinality, double xi, double omega);

// C_omega = (sqrt(pi) omega / sqrt(2 e (omega - 1)))^{1/omega}, omega > 1.
double c_omega(double omega);

// Parameter schedule shared by policies and bound calculators. The bound
// validity condition for BUCB (xi > omega > 1) is tracked, not enforced:
// the omega = xi = 1 experimental setting is allowed and flagged.
struct ScheduleParams {
  PolicyFamily family = PolicyFamily::kUCB;
  double cardinality = 1.0;  // |A| or tau_t^d
  double xi = 1.0;
  double omega = 1.0;
  double beta_scale = 1.0;

  double beta(int t) const;                // clamped at 0
  double eta(int t) const;                 // BUCB quantile parameter
  bool bound_valid() const { return xi > omega && omega > 1.0; }
};

enum class RectifierVariance { kNoise, kPosterior };

struct IndexOptions {
  IndexMode mode = IndexMode::kMinimize;
  RectifierVariance rectifier = RectifierVariance::kNoise;
};

// Per-arm selection indices U_{t,a}.
//
// Minimize mode (navigation): mu~ = mu - sqrt(beta_t) sigma (UCB), the
// eta_t-quantile (BUCB) or a posterior sample (TS), then
// U = E[max(0, Z)] for Z ~ N(mu~, v) with v the noise variance (default) or
// the posterior variance. Maximize mode: mu~ = mu + sqrt(beta_t) sigma /
// (1 - eta_t)-quantile / posterior sample, unrectified.
//
// TS draws one sample per arm in input order from `rng`; two invocations
// with equal seeds produce identical indices.
std::vector<double> compute_indices(PolicyFamily family,
                                    const std::vector<PosteriorSummary>& posteriors,
                                    int t, const ScheduleParams& schedule,
                                    const IndexOptions& options, Rng& rng);

// Independent-Gaussian baseline: per-edge posterior with known noise.
struct BIState {
  Vector mean;
  Vector variance;
  double noise_variance = 1.0;

  PosteriorSummary posterior(int edge) const;
};

BIState make_bi_state(int num_edges, double prior_mean, double prior_variance,
                      double noise_variance);
BIState make_bi_state(Vector prior_means, double prior_variance,
                      double noise_variance);

// Conjugate update for one edge from n observations with sum S:
//   var_n = 1/(1/var0 + n/noise), mean_n = var_n (mean0/var0 + S/noise).
BIState bi_update(const BIState& state, int edge, const Vector& observations);

}  // namespace gpb

#endif  // GPBANDITS_POLICIES_HPP_
