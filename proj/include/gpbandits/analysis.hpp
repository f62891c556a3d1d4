// Information-gain quantities and regret-bound calculators.
//
// The bound formulas take an information-gain surrogate (greedy) and an
// empirical largest posterior-block eigenvalue; because the true suprema are
// not computable, bounds evaluated this way are labeled empirical-constant
// bounds. All logarithms are natural and information is reported in nats.

#ifndef GPBANDITS_ANALYSIS_HPP_
#define GPBANDITS_ANALYSIS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "gpbandits/gp.hpp"
#include "gpbandits/policies.hpp"

namespace gpb {

// 1/2 log det(I + noise^{-2} K) in nats via Cholesky; empty sets gain 0.
double information_gain(const Matrix& gram, double noise_variance);

// Greedy surrogate for the maximal information gain with budget T: each step
// adds the point of maximal current posterior variance (ties by index) and
// accrues 1/2 log(1 + sigma^2/noise). Monotone non-decreasing in T.
double greedy_gamma(const Kernel& kernel, const std::vector<BaseArm>& pool,
                    double noise_variance, int budget);

// Running maximum eigenvalue over observed posterior covariance blocks of
// size <= K; a lower estimate of the true supremum.
class LambdaStarTracker {
 public:
  // Asymmetric blocks (beyond 1e-8 relative) are input errors.
  void observe(const Matrix& block);
  double value() const { return max_eigenvalue_; }
  int blocks_seen() const { return blocks_seen_; }

 private:
  double max_eigenvalue_ = 0.0;
  int blocks_seen_ = 0;
};

// Inputs shared by the finite and infinite bound formulas.
struct BoundInputs {
  int horizon = 1;            // T
  int max_super_arm = 1;      // K
  double noise_variance = 1.0;
  double lambda_star = 0.0;   // tracked max posterior-block eigenvalue
  double gamma = 0.0;         // information-gain value (nats)
  ScheduleParams schedule;    // cardinality = |A| for the finite case
  std::optional<double> beta_override;  // bypasses the schedule when set
  // Regularity constants for the infinite case.
  double c1 = 1.0;
  double c2 = 1.0;
  double c3 = 1.0;
  double lipschitz = 1.0;
  int dimension = 1;
};

struct BoundResult {
  double value = 0.0;
  double beta_horizon = 0.0;
  bool schedule_valid = true;  // BUCB requires xi > omega > 1
};

// Finite-arm-set Bayesian regret bounds:
//   UCB:  pi^2/6 + sqrt(C_K T K beta_T gamma)
//   BUCB: sqrt(C_K T K beta_T gamma) + C_omega xi/(xi - omega)
//   TS:   pi^2/3 + 2 sqrt(C_K T K beta_T gamma)
// with C_K = 2 (lambda_star + noise). An invalid BUCB schedule yields a
// flagged result, not an exception.
BoundResult finite_regret_bound(PolicyFamily family, const BoundInputs& inputs);

// Infinite-arm-set variants with cardinality tau_T^d and additive constants
// pi^2/2 (UCB), pi^2/3 + C_omega xi/(xi-omega) (BUCB), 2 pi^2/3 (TS).
BoundResult infinite_regret_bound(PolicyFamily family, const BoundInputs& inputs);

struct TauConstants {
  int max_super_arm = 1;  // K
  double lipschitz = 1.0;  // L
  int dimension = 1;       // d
  double c1 = 1.0;
  double c2 = 1.0;
  double c3 = 1.0;
  double noise_std = 1.0;  // varsigma
};

// Per-dimension discretization count: the max of the four closed-form
// expressions for the given family, escalated (doubling) until the four
// discretization-size inequalities verify directly, then ceiled to >= 1.
double tau_t(PolicyFamily family, int t, const TauConstants& constants,
             double xi, double omega);

// Direct numeric re-check of the four discretization-size inequalities for
// a candidate tau at round t.
bool tau_satisfies_assumptions(PolicyFamily family, double tau, int t,
                               const TauConstants& constants, double xi,
                               double omega);

// Per-round record of a bandit run.
struct RegretTraceRow {
  int t = 0;
  double instantaneous_regret = 0.0;
  double cumulative_regret = 0.0;
  double beta_or_eta = 0.0;
  double posterior_std_sum = 0.0;
  double info_gain_to_date = 0.0;
};

struct InfoGainCheck {
  double lhs = 0.0;  // sum of posterior variances over chosen arms
  double rhs = 0.0;  // 2 (lambda_hat + noise) * realized information gain
  double lambda_hat = 0.0;
  double realized_gain = 0.0;
  bool pass = false;
};

// Verifies sum_t sigma^2_{t-1}(a_t) <= 2 (lambda*_K + noise) * I(r; f) on a
// realized trace: lhs from the recorded per-arm posterior variances, rhs
// from the tracked block maximum and the realized mutual information of the
// selected sequence. Passes at 1e-8 slack.
InfoGainCheck verify_infogain_inequality(
    const std::vector<std::vector<double>>& chosen_variances_per_round,
    double lambda_hat, double noise_variance, const Matrix& selected_gram);

}  // namespace gpb

#endif  // GPBANDITS_ANALYSIS_HPP_
