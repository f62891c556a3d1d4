#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "gpbandits/envs.hpp"
#include "test_util.hpp"

using namespace gpb;

namespace {

RoadEdge edge(const char* name, int from, int to, double length, double speed,
              double grade) {
  RoadEdge e;
  e.name = name;
  e.from = from;
  e.to = to;
  e.length_m = length;
  e.speed_mps = speed;
  e.grade_rad = grade;
  return e;
}

class ZeroKernel : public Kernel {
 public:
  double operator()(const BaseArm&, const BaseArm&) const override {
    return 0.0;
  }
};

// Posterior handed to run_round directly; used to drive the loop with the
// true values.
class FixedLearner : public Learner {
 public:
  explicit FixedLearner(Vector means) : means_(std::move(means)) {}
  PosteriorSummary posterior(int arm_id) const override {
    return {means_[arm_id], 0.0, 0.0};
  }
  Matrix posterior_cov(const SuperArm& arms) const override {
    return Matrix::Zero(static_cast<Eigen::Index>(arms.size()),
                        static_cast<Eigen::Index>(arms.size()));
  }
  void update(const SuperArm&, const Vector&) override {}

 private:
  Vector means_;
};

}  // namespace

TEST_CASE("deterministic energy on the reference edges") {
  const EnergyParams params;
  // All terms scale with length.
  CHECK(deterministic_energy(edge("z", 0, 1, 0.0, 13.89, 0.0), params) == 0.0);
  CHECK(deterministic_energy(edge("f", 0, 1, 100.0, 13.89, 0.0), params) ==
        doctest::Approx(8.07956141156463).epsilon(1e-9));
  // Downhill enough that the bracket is negative: recuperation branch.
  CHECK(deterministic_energy(edge("d", 0, 1, 100.0, 13.89, -0.05), params) ==
        doctest::Approx(-16.3555551573630).epsilon(1e-9));
}

TEST_CASE("line graph construction and connection weights") {
  RoadNetwork network;
  network.vertex_names = {"a", "b", "c"};
  network.edges = {edge("e1", 0, 1, 1.0, 10.0, 0.0),
                   edge("e2", 1, 2, 2.0, 10.0, 0.0),
                   edge("e3", 2, 0, 3.0, 10.0, 0.0)};
  network.connections = {{0, 1}, {1, 2}, {2, 0}};
  const LineGraph graph = build_line_graph(network);
  CHECK(graph.num_nodes == 3);
  CHECK(graph.arcs.size() == 3);
  CHECK(graph.mean_edge_length == doctest::Approx(2.0));
  // Weight out of edge e1 (length 1) is mean / 1 = 2.
  CHECK(graph.arcs[0].weight == doctest::Approx(2.0));

  RoadNetwork chained;
  chained.vertex_names = {"a", "b", "c"};
  chained.edges = {edge("e1", 0, 1, 5.0, 10.0, 0.0),
                   edge("e2", 1, 2, 5.0, 10.0, 0.0)};
  chained.connections = {{0, 1}};
  const LineGraph two = build_line_graph(chained);
  CHECK(two.num_nodes == 2);
  CHECK(two.arcs.size() == 1);
  CHECK(two.arcs[0].weight == doctest::Approx(1.0));  // equal lengths
}

TEST_CASE("context standardization") {
  Matrix raw(3, 3);
  raw << 0.0, 7.0, 1.0,
         2.0, 7.0, 2.0,
         4.0, 7.0, 3.0;
  const StandardizedContexts out = standardize_contexts(raw);
  // Constant column passes through with a flag.
  CHECK(out.zero_variance[1]);
  CHECK(out.contexts(0, 1) == 7.0);
  // Non-degenerate columns end up with unit population variance.
  for (int c : {0, 2}) {
    const double mean = out.contexts.col(c).mean();
    const double var = (out.contexts.col(c).array() - mean).square().sum() / 3.0;
    CHECK(var == doctest::Approx(1.0).epsilon(1e-10));
  }

  Matrix two(2, 1);
  two << 0.0, 2.0;  // population std exactly 1
  const StandardizedContexts unchanged = standardize_contexts(two);
  CHECK(unchanged.contexts(0, 0) == doctest::Approx(0.0));
  CHECK(unchanged.contexts(1, 0) == doctest::Approx(2.0));
}

TEST_CASE("truth sampling: zero kernel reproduces the prior exactly") {
  RoadNetwork network;
  network.vertex_names = {"a", "b", "c"};
  network.edges = {edge("e1", 0, 1, 100.0, 10.0, 0.0),
                   edge("e2", 1, 2, 120.0, 11.0, 0.01),
                   edge("e3", 2, 0, 90.0, 9.0, -0.01)};
  network.connections = {{0, 1}, {1, 2}, {2, 0}};
  const LineGraph graph = build_line_graph(network);
  const Vector prior = deterministic_energy_all(network, EnergyParams{});
  ZeroKernel kernel;
  Rng rng(1);
  const auto arms = testutil::random_arms(3, 2, rng);
  const EnvTruth truth = sample_truth(graph, kernel, prior, 0.1, 42, arms);
  CHECK((truth.f - prior).cwiseAbs().maxCoeff() == 0.0);

  const EnvTruth again = sample_truth(graph, kernel, prior, 0.1, 42, arms);
  CHECK((truth.f - again.f).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("persistent negative cycles abort truth sampling") {
  RoadNetwork network;
  network.vertex_names = {"a", "b"};
  network.edges = {edge("e1", 0, 1, 100.0, 10.0, 0.0),
                   edge("e2", 1, 0, 100.0, 10.0, 0.0)};
  network.connections = {{0, 1}, {1, 0}};
  const LineGraph graph = build_line_graph(network);
  Vector prior(2);
  prior << -1.0, -1.0;  // the 2-cycle always has negative cost
  ZeroKernel kernel;
  Rng rng(1);
  const auto arms = testutil::random_arms(2, 2, rng);
  CHECK_THROWS_AS(sample_truth(graph, kernel, prior, 0.1, 7, arms),
                  EnvironmentError);
}

TEST_CASE("sampled truth deviation matches the configured prior scale") {
  // Pool the mean-square deviation from the prior over several draws; with
  // the prior mean subtracted it estimates the average marginal variance.
  const RoadNetwork network = generate_grid_network(8, 8, 5);  // 224 edges
  const LineGraph graph = build_line_graph(network);
  const StandardizedContexts contexts = standardize_contexts(raw_features(network));
  std::vector<BaseArm> arms;
  for (Eigen::Index i = 0; i < contexts.contexts.rows(); ++i) {
    arms.emplace_back(static_cast<int>(i), contexts.contexts.row(i).transpose());
  }
  const Vector prior = deterministic_energy_all(network, EnergyParams{});
  const double mean_prior = prior.mean();
  const double sigma_det = std::sqrt(
      (prior.array() - mean_prior).square().sum() / static_cast<double>(prior.size()));
  const double target_std = 0.25 * sigma_det;

  std::vector<WeightedConnection> weighted(graph.arcs.begin(), graph.arcs.end());
  GramMatrix gram = graph_matern_gram(graph.num_nodes, weighted,
                                      GraphKernelParams(2.0, 1.0, 1.0));
  gram.cov /= gram.cov.diagonal().mean();
  const double half = 0.5 * target_std * target_std;
  const CompositeKernel kernel(std::make_shared<GramMatrix>(std::move(gram)),
                               FeatureKernelParams(half, Vector::Ones(3)),
                               FeatureKernelParams(half, Vector::Ones(3)));

  double pooled_square = 0.0;
  const int draws = 30;
  for (int d = 0; d < draws; ++d) {
    const EnvTruth truth = sample_truth(graph, kernel, prior, 0.01, 1000 + d, arms);
    pooled_square += (truth.f - prior).squaredNorm() /
                     static_cast<double>(prior.size());
  }
  const double pooled_std = std::sqrt(pooled_square / draws);
  CHECK(std::fabs(pooled_std - target_std) <= 0.15 * target_std);
}

TEST_CASE("synthetic environment: playing the truth gives zero regret") {
  Rng rng(5);
  SyntheticEnv::Options options;
  options.num_arms = 8;
  options.k = 3;
  options.noise_variance = 0.05;
  auto kernel = testutil::random_matern(2, rng);
  SyntheticEnv env(options, kernel, 97);

  FixedLearner learner(env.truth());
  ScheduleParams schedule;
  schedule.family = PolicyFamily::kUCB;
  schedule.cardinality = 8.0;
  schedule.beta_scale = 0.0;  // pure greedy on the posterior mean
  PolicySpec policy;
  policy.family = PolicyFamily::kUCB;
  Rng round_rng(11);
  for (int t = 1; t <= 5; ++t) {
    const RoundResult round =
        run_round(env, policy, &learner, t, schedule, IndexOptions{}, round_rng);
    CHECK(round.instantaneous_regret == doctest::Approx(0.0).scale(1.0));
  }
}

TEST_CASE("regret is non-negative and only available arms are chosen") {
  Rng rng(6);
  SyntheticEnv::Options options;
  options.num_arms = 10;
  options.k = 2;
  options.availability = 0.6;
  options.noise_variance = 0.1;
  auto kernel = testutil::random_matern(2, rng);
  SyntheticEnv env(options, kernel, 13);

  PooledGPLearner learner(kernel, zero_mean(), env.arms(), options.noise_variance);
  class LearnerAdapter : public Learner {
   public:
    explicit LearnerAdapter(PooledGPLearner& inner) : inner_(inner) {}
    PosteriorSummary posterior(int arm_id) const override {
      return inner_.posterior(arm_id);
    }
    Matrix posterior_cov(const SuperArm& arms) const override {
      return inner_.posterior_cov(arms);
    }
    void update(const SuperArm& chosen, const Vector& rewards) override {
      inner_.update(chosen, rewards);
    }
   private:
    PooledGPLearner& inner_;
  } adapter(learner);

  ScheduleParams schedule;
  schedule.family = PolicyFamily::kTS;
  schedule.cardinality = 10.0;
  PolicySpec policy;
  policy.family = PolicyFamily::kTS;
  Rng round_rng(17);
  for (int t = 1; t <= 30; ++t) {
    Rng avail_probe = round_rng;  // copy: regenerate the availability stream
    const Availability avail = env.observe_available(t, avail_probe);
    const RoundResult round =
        run_round(env, policy, &adapter, t, schedule, IndexOptions{}, round_rng);
    CHECK(round.instantaneous_regret >= 0.0);
    for (int id : round.chosen) {
      CHECK(std::find(avail.arms.begin(), avail.arms.end(), id) != avail.arms.end());
    }
    CHECK(round.chosen.size() <= 2);
  }
}

TEST_CASE("greedy learner converges on a two-arm gap instance") {
  // Two far-apart arms, truth values 1 and 0, tiny noise: greedy exact
  // posteriors lock on the good arm almost immediately.
  Rng seed_rng(77);
  int converged = 0;
  for (int replicate = 0; replicate < 20; ++replicate) {
    class TwoArmEnv : public Environment {
     public:
      TwoArmEnv() {
        Vector x0(1), x1(1);
        x0 << 0.0;
        x1 << 100.0;
        arms_ = {BaseArm(0, x0), BaseArm(1, x1)};
        truth_.resize(2);
        truth_ << 1.0, 0.0;
      }
      const std::vector<BaseArm>& arms() const override { return arms_; }
      const Vector& truth() const override { return truth_; }
      double noise_variance() const override { return 0.01; }
      IndexMode mode() const override { return IndexMode::kMaximize; }
      Availability observe_available(int, Rng&) override {
        return Availability{{0, 1}, std::nullopt};
      }
      SuperArm select(const std::vector<double>& indices,
                      const Availability& avail) const override {
        return topk_oracle(indices, avail.arms, 1, IndexMode::kMaximize);
      }
      PathResult optimal(const Availability&) const override {
        return PathResult{{0}, 1.0};
      }
     private:
      std::vector<BaseArm> arms_;
      Vector truth_;
    } env;

    auto kernel = std::make_shared<Matern52Kernel>(
        FeatureKernelParams(1.0, Vector::Ones(1)));
    PooledGPLearner learner(kernel, zero_mean(), env.arms(), 0.01);
    class LearnerAdapter : public Learner {
     public:
      explicit LearnerAdapter(PooledGPLearner& inner) : inner_(inner) {}
      PosteriorSummary posterior(int arm_id) const override {
        return inner_.posterior(arm_id);
      }
      Matrix posterior_cov(const SuperArm& arms) const override {
        return inner_.posterior_cov(arms);
      }
      void update(const SuperArm& chosen, const Vector& rewards) override {
        inner_.update(chosen, rewards);
      }
     private:
      PooledGPLearner& inner_;
    } adapter(learner);

    ScheduleParams schedule;
    schedule.family = PolicyFamily::kUCB;
    schedule.cardinality = 2.0;
    schedule.beta_scale = 0.0;
    PolicySpec policy;
    policy.family = PolicyFamily::kUCB;
    Rng rng(seed_rng.next_u64());
    double late_regret = 0.0;
    for (int t = 1; t <= 200; ++t) {
      const RoundResult round =
          run_round(env, policy, &adapter, t, schedule, IndexOptions{}, rng);
      if (t > 100) late_regret += round.instantaneous_regret;
    }
    if (late_regret / 100.0 < 0.05) ++converged;
  }
  CHECK(converged == 20);
}

TEST_CASE("reward noise matches the configured variance") {
  class OneArmEnv : public Environment {
   public:
    OneArmEnv() {
      Vector x(1);
      x << 0.0;
      arms_ = {BaseArm(0, x)};
      truth_.resize(1);
      truth_ << 2.5;
    }
    const std::vector<BaseArm>& arms() const override { return arms_; }
    const Vector& truth() const override { return truth_; }
    double noise_variance() const override { return 0.49; }
    IndexMode mode() const override { return IndexMode::kMaximize; }
    Availability observe_available(int, Rng&) override {
      return Availability{{0}, std::nullopt};
    }
    SuperArm select(const std::vector<double>&, const Availability&) const override {
      return {0};
    }
    PathResult optimal(const Availability&) const override {
      return PathResult{{0}, 2.5};
    }
   private:
    std::vector<BaseArm> arms_;
    Vector truth_;
  } env;

  PolicySpec policy;
  policy.random_baseline = true;
  ScheduleParams schedule;
  schedule.cardinality = 1.0;
  Rng rng(31);
  double sum = 0.0, sumsq = 0.0;
  const int n = 10000;
  for (int t = 1; t <= n; ++t) {
    const RoundResult round =
        run_round(env, policy, nullptr, t, schedule, IndexOptions{}, rng);
    sum += round.rewards[0];
    sumsq += round.rewards[0] * round.rewards[0];
  }
  const double mean = sum / n;
  const double variance = sumsq / n - mean * mean;
  const double se = std::sqrt(0.49 / n);
  CHECK(std::fabs(mean - 2.5) <= 3.0 * se);
  CHECK(std::fabs(variance - 0.49) <= 0.05 * 0.49);
}

TEST_CASE("navigation rounds produce legal simple paths") {
  const RoadNetwork network = generate_grid_network(4, 4, 9);
  LoadedNetwork loaded;
  loaded.network = network;
  const auto route = network.routes.at("main");

  const LineGraph graph = build_line_graph(network);
  std::vector<WeightedConnection> weighted(graph.arcs.begin(), graph.arcs.end());
  GramMatrix gram = graph_matern_gram(graph.num_nodes, weighted,
                                      GraphKernelParams(2.0, 1.0, 1.0));
  gram.cov /= gram.cov.diagonal().mean();
  const Vector prior = deterministic_energy_all(network, EnergyParams{});
  const double mean_prior = prior.mean();
  const double sigma_det = std::sqrt((prior.array() - mean_prior).square().sum() /
                                     static_cast<double>(prior.size()));
  const double half = 0.5 * 0.0625 * sigma_det * sigma_det;
  auto kernel = std::make_shared<CompositeKernel>(
      std::make_shared<GramMatrix>(std::move(gram)),
      FeatureKernelParams(half, Vector::Ones(3)),
      FeatureKernelParams(half, Vector::Ones(3)));

  NavigationEnv::Options options;
  options.noise_variance = 0.01 * sigma_det * sigma_det;
  NavigationEnv env(network, options, kernel, prior, route.first, route.second,
                    1234);

  // Legal-connection lookup.
  std::set<std::pair<int, int>> legal;
  for (const WeightedConnection& arc : env.line_graph().arcs) {
    legal.insert({arc.from, arc.to});
  }

  PolicySpec policy;
  policy.random_baseline = true;
  ScheduleParams schedule;
  schedule.cardinality = static_cast<double>(env.arms().size());
  Rng rng(55);
  for (int t = 1; t <= 25; ++t) {
    const RoundResult round =
        run_round(env, policy, nullptr, t, schedule, IndexOptions{}, rng);
    REQUIRE(!round.chosen.empty());
    CHECK(round.chosen.front() == route.first);
    CHECK(round.chosen.back() == route.second);
    std::set<int> seen;
    for (std::size_t i = 0; i < round.chosen.size(); ++i) {
      CHECK(seen.insert(round.chosen[i]).second);  // simple
      if (i + 1 < round.chosen.size()) {
        CHECK(legal.count({round.chosen[i], round.chosen[i + 1]}) == 1);
      }
    }
    CHECK(round.instantaneous_regret >= 0.0);
  }
}

TEST_CASE("round execution is reproducible for fixed seeds") {
  Rng rng_seed(1);
  SyntheticEnv::Options options;
  options.num_arms = 6;
  options.k = 2;
  options.availability = 0.8;
  auto kernel = testutil::random_matern(2, rng_seed);
  ScheduleParams schedule;
  schedule.family = PolicyFamily::kTS;
  schedule.cardinality = 6.0;
  PolicySpec policy;
  policy.family = PolicyFamily::kTS;

  auto run_once = [&](std::uint64_t seed) {
    SyntheticEnv env(options, kernel, 500);
    PooledGPLearner learner(kernel, zero_mean(), env.arms(),
                            options.noise_variance);
    class LearnerAdapter : public Learner {
     public:
      explicit LearnerAdapter(PooledGPLearner& inner) : inner_(inner) {}
      PosteriorSummary posterior(int arm_id) const override {
        return inner_.posterior(arm_id);
      }
      Matrix posterior_cov(const SuperArm& arms) const override {
        return inner_.posterior_cov(arms);
      }
      void update(const SuperArm& chosen, const Vector& rewards) override {
        inner_.update(chosen, rewards);
      }
     private:
      PooledGPLearner& inner_;
    } adapter(learner);
    Rng rng(seed);
    std::vector<double> regrets;
    for (int t = 1; t <= 15; ++t) {
      regrets.push_back(run_round(env, policy, &adapter, t, schedule,
                                  IndexOptions{}, rng)
                            .instantaneous_regret);
    }
    return regrets;
  };
  CHECK(run_once(2024) == run_once(2024));
  CHECK(run_once(2024) != run_once(2025));
}

TEST_CASE("total connection dropout exhausts the redraw budget") {
  const RoadNetwork network = generate_grid_network(3, 3, 4);
  const auto route = network.routes.at("main");
  const Vector prior = deterministic_energy_all(network, EnergyParams{});
  auto kernel = std::make_shared<ZeroKernel>();
  NavigationEnv::Options options;
  options.p_vol = 1.0;  // every connection removed every round
  options.max_redraws = 5;
  options.noise_variance = 0.25;
  NavigationEnv env(network, options, kernel, prior, route.first, route.second,
                    3);
  Rng rng(1);
  CHECK_THROWS_AS(env.observe_available(1, rng), EnvironmentError);
}

TEST_CASE("volatile navigation rounds stay feasible") {
  const RoadNetwork network = generate_grid_network(4, 4, 3);
  const auto route = network.routes.at("main");
  const Vector prior = deterministic_energy_all(network, EnergyParams{});
  auto kernel = std::make_shared<ZeroKernel>();
  NavigationEnv::Options options;
  options.p_vol = 0.05;
  options.noise_variance = 0.25;
  NavigationEnv env(network, options, kernel, prior, route.first, route.second,
                    77);
  PolicySpec policy;
  policy.random_baseline = true;
  ScheduleParams schedule;
  schedule.cardinality = 1.0;
  Rng rng(8);
  for (int t = 1; t <= 20; ++t) {
    const RoundResult round =
        run_round(env, policy, nullptr, t, schedule, IndexOptions{}, rng);
    CHECK(round.chosen.front() == route.first);
    CHECK(round.chosen.back() == route.second);
    CHECK(round.instantaneous_regret >= 0.0);
  }
}
