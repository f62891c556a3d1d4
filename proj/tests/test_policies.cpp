#include <doctest.h>

#include <cmath>

#include "gpbandits/policies.hpp"

using namespace gpb;

namespace {
constexpr double kSqrt2Pi = 2.5066282746310002;
}

TEST_CASE("ucb_beta closed form") {
  CHECK(ucb_beta(10, 100.0) == doctest::Approx(16.5828036775430200).epsilon(1e-12));
  CHECK(ucb_beta(1, kSqrt2Pi) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(ucb_beta(10, 100.0, 0.5) == doctest::Approx(0.5 * ucb_beta(10, 100.0)));
  CHECK_THROWS_AS(ucb_beta(0, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(ucb_beta(1, 0.5), std::invalid_argument);
}

TEST_CASE("bucb_eta schedule") {
  // Exact cancellation pre-clamp: (2 pi)^{1/2} / (2 sqrt(2 pi)) = 1/2.
  CHECK(bucb_eta(1, kSqrt2Pi, 3.0, 1.0) == doctest::Approx(0.5 - 1e-12));
  CHECK(bucb_eta(10, 100.0, 1.0, 2.0) ==
        doctest::Approx(3.14159265358979e-5).epsilon(1e-10));
  double previous = bucb_eta(1, 50.0, 1.3, 1.0);
  for (int t = 2; t <= 100; ++t) {
    const double eta = bucb_eta(t, 50.0, 1.3, 1.0);
    CHECK(eta < previous);
    previous = eta;
  }
}

TEST_CASE("bucb_beta equals two squared inverse-erf quantiles") {
  // Cardinality chosen so eta_1 = 0.025 (omega = xi = 1).
  const double cardinality = kSqrt2Pi / (2.0 * 0.025);
  CHECK(bucb_beta(1, cardinality, 1.0, 1.0) ==
        doctest::Approx(3.84145882069412596).epsilon(1e-9));
  // eta at the median clamp gives an effectively zero beta.
  CHECK(bucb_beta(1, kSqrt2Pi, 3.0, 1.0) < 1e-20);
}

TEST_CASE("theoretically valid BUCB betas stay below UCB betas") {
  for (double cardinality : {10.0, 100.0, 10000.0}) {
    for (int t = 1; t <= 500; ++t) {
      CHECK(bucb_beta(t, cardinality, 1.0, 1.0) <
            ucb_beta(t, cardinality));
    }
  }
}

TEST_CASE("c_omega closed form and limit") {
  CHECK(c_omega(2.0) == doctest::Approx(1.23302347952757202).epsilon(1e-12));
  CHECK(std::fabs(c_omega(1e6) - 1.0) < 1e-4);
  for (double omega : {1.01, 1.1, 2.0, 5.0, 10.0}) {
    const double value = c_omega(omega);
    CHECK(std::isfinite(value));
    CHECK(value > 0.0);
  }
  CHECK_THROWS_AS(c_omega(1.0), std::invalid_argument);
  CHECK_THROWS_AS(c_omega(0.5), std::invalid_argument);
}

TEST_CASE("schedule beta clamps negatives to zero") {
  ScheduleParams schedule;
  schedule.family = PolicyFamily::kUCB;
  schedule.cardinality = 1.0;
  CHECK(schedule.beta(1) == 0.0);
}

namespace {

std::vector<PosteriorSummary> single(double mean, double variance,
                                     double noise) {
  return {PosteriorSummary{mean, variance, noise}};
}

ScheduleParams ucb_schedule_with_beta(double beta) {
  // 2 log(c/sqrt(2 pi)) = beta at t = 1  =>  c = exp(beta/2) sqrt(2 pi).
  ScheduleParams schedule;
  schedule.family = PolicyFamily::kUCB;
  schedule.cardinality = std::exp(beta / 2.0) * kSqrt2Pi;
  return schedule;
}

}  // namespace

TEST_CASE("minimize-mode UCB index subtracts the exploration bonus then rectifies") {
  Rng rng(1);
  const ScheduleParams schedule = ucb_schedule_with_beta(4.0);
  IndexOptions options;
  options.mode = IndexMode::kMinimize;
  // mu~ = 5 - 2*1 = 3; zero-variance rectifier keeps it at 3.
  const auto indices = compute_indices(PolicyFamily::kUCB,
                                       single(5.0, 1.0, 0.0), 1, schedule,
                                       options, rng);
  CHECK(indices[0] == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("zero beta reduces to the rectified posterior mean") {
  Rng rng(1);
  ScheduleParams schedule;
  schedule.family = PolicyFamily::kUCB;
  schedule.cardinality = 1.0;  // beta clamps to 0
  IndexOptions options;
  options.mode = IndexMode::kMinimize;
  const double noise = 0.49;
  const auto indices = compute_indices(PolicyFamily::kUCB,
                                       single(1.2, 100.0, noise), 1, schedule,
                                       options, rng);
  CHECK(indices[0] == doctest::Approx(rectified_mean(1.2, noise)).epsilon(1e-12));
}

TEST_CASE("maximize mode produces plain optimistic indices") {
  Rng rng(1);
  const ScheduleParams schedule = ucb_schedule_with_beta(4.0);
  IndexOptions options;
  options.mode = IndexMode::kMaximize;
  const auto indices = compute_indices(PolicyFamily::kUCB,
                                       single(5.0, 1.0, 0.3), 1, schedule,
                                       options, rng);
  CHECK(indices[0] == doctest::Approx(7.0).epsilon(1e-9));
}

TEST_CASE("BUCB minimize uses the lower quantile") {
  Rng rng(1);
  ScheduleParams schedule;
  schedule.family = PolicyFamily::kBUCB;
  schedule.cardinality = 100.0;
  schedule.xi = 1.0;
  schedule.omega = 1.0;
  IndexOptions options;
  options.mode = IndexMode::kMinimize;
  options.rectifier = RectifierVariance::kNoise;
  const double mean = 2.0, variance = 0.25, noise = 0.04;
  const auto indices = compute_indices(PolicyFamily::kBUCB,
                                       single(mean, variance, noise), 3,
                                       schedule, options, rng);
  const double eta = schedule.eta(3);
  const double expected =
      rectified_mean(gaussian_quantile(eta, mean, variance), noise);
  CHECK(indices[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("posterior-variance rectifier variant") {
  Rng rng(1);
  ScheduleParams schedule;
  schedule.family = PolicyFamily::kUCB;
  schedule.cardinality = 1.0;
  IndexOptions options;
  options.mode = IndexMode::kMinimize;
  options.rectifier = RectifierVariance::kPosterior;
  const auto indices = compute_indices(PolicyFamily::kUCB,
                                       single(0.4, 2.0, 0.01), 1, schedule,
                                       options, rng);
  CHECK(indices[0] == doctest::Approx(rectified_mean(0.4, 2.0)).epsilon(1e-12));
}

TEST_CASE("TS indices are reproducible for a fixed seed") {
  ScheduleParams schedule;
  schedule.family = PolicyFamily::kTS;
  schedule.cardinality = 10.0;
  IndexOptions options;
  options.mode = IndexMode::kMinimize;
  std::vector<PosteriorSummary> posteriors;
  for (int i = 0; i < 5; ++i) {
    posteriors.push_back({0.5 * i, 0.3 + 0.1 * i, 0.2});
  }
  Rng rng1(42), rng2(42), rng3(43);
  const auto a = compute_indices(PolicyFamily::kTS, posteriors, 2, schedule,
                                 options, rng1);
  const auto b = compute_indices(PolicyFamily::kTS, posteriors, 2, schedule,
                                 options, rng2);
  const auto c = compute_indices(PolicyFamily::kTS, posteriors, 2, schedule,
                                 options, rng3);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("stronger exploration weakly lowers every cost-mode index") {
  Rng rng(1);
  IndexOptions options;
  options.mode = IndexMode::kMinimize;
  std::vector<PosteriorSummary> posteriors;
  for (int i = 0; i < 8; ++i) {
    posteriors.push_back({-1.0 + 0.4 * i, 0.2 + 0.05 * i, 0.1});
  }
  // UCB: larger beta lowers mu~ and rectified_mean is monotone.
  for (double beta_low : {0.0, 1.0, 4.0}) {
    const auto low = compute_indices(PolicyFamily::kUCB, posteriors, 1,
                                     ucb_schedule_with_beta(beta_low), options,
                                     rng);
    const auto high = compute_indices(PolicyFamily::kUCB, posteriors, 1,
                                      ucb_schedule_with_beta(beta_low + 2.0),
                                      options, rng);
    for (std::size_t i = 0; i < posteriors.size(); ++i) {
      CHECK(high[i] <= low[i] + 1e-12);
    }
  }
  // BUCB: smaller eta (larger 1 - eta) lowers the minimize-mode quantile.
  ScheduleParams tight;
  tight.family = PolicyFamily::kBUCB;
  tight.cardinality = 10.0;
  ScheduleParams tighter = tight;
  tighter.cardinality = 10000.0;
  const auto loose_idx = compute_indices(PolicyFamily::kBUCB, posteriors, 5,
                                         tight, options, rng);
  const auto tight_idx = compute_indices(PolicyFamily::kBUCB, posteriors, 5,
                                         tighter, options, rng);
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    CHECK(tight_idx[i] <= loose_idx[i] + 1e-12);
  }
}

TEST_CASE("BI conjugate update") {
  const BIState prior = make_bi_state(3, 0.0, 1.0, 1.0);
  Vector obs(1);
  obs[0] = 2.0;
  const BIState next = bi_update(prior, 1, obs);
  CHECK(next.mean[1] == doctest::Approx(1.0));
  CHECK(next.variance[1] == doctest::Approx(0.5));
  // Untouched edges keep the prior.
  CHECK(next.mean[0] == 0.0);
  CHECK(next.variance[0] == 1.0);

  const BIState same = bi_update(next, 1, Vector(0));
  CHECK(same.mean[1] == next.mean[1]);
  CHECK(same.variance[1] == next.variance[1]);
}

TEST_CASE("BI posterior variance strictly decreases with every observation") {
  BIState state = make_bi_state(1, 0.0, 2.0, 0.7);
  double previous = state.variance[0];
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    Vector obs(1);
    obs[0] = rng.gaussian();
    state = bi_update(state, 0, obs);
    CHECK(state.variance[0] < previous);
    previous = state.variance[0];
  }
}

TEST_CASE("multi-observation BI update matches the n-sample formula") {
  const BIState prior = make_bi_state(1, 0.5, 2.0, 0.25);
  Vector obs(3);
  obs << 1.0, 2.0, 0.5;
  const BIState next = bi_update(prior, 0, obs);
  const double var_n = 1.0 / (1.0 / 2.0 + 3.0 / 0.25);
  const double mean_n = var_n * (0.5 / 2.0 + obs.sum() / 0.25);
  CHECK(next.variance[0] == doctest::Approx(var_n).epsilon(1e-12));
  CHECK(next.mean[0] == doctest::Approx(mean_n).epsilon(1e-12));
}
