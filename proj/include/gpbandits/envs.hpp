// Environments for the volatile combinatorial semi-bandit loop: routing
// oracles on line graphs, a synthetic top-K environment and the
// energy-efficient navigation environment with GP-sampled ground truth.

#ifndef GPBANDITS_ENVS_HPP_
#define GPBANDITS_ENVS_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "gpbandits/gp.hpp"
#include "gpbandits/policies.hpp"
#include "gpbandits/road_network.hpp"

namespace gpb {

struct PathResult {
  SuperArm path;  // line-graph nodes, source..goal inclusive
  double cost = 0.0;
};

// Minimum-total-node-cost simple path between two line-graph nodes, both
// endpoint costs included. Costs must be non-negative. Ties are broken by
// the lexicographically smallest edge-id sequence. Unreachable goal raises
// RoutingError.
PathResult dijkstra_path(const LineGraph& graph, const Vector& node_costs,
                         int source, int goal);

// Same contract but node costs may be negative; raises EnvironmentError
// naming a cycle if a reachable negative cycle exists. Used to compute the
// per-round optimum for regret accounting.
PathResult bellman_ford_optimum(const LineGraph& graph, const Vector& node_costs,
                                int source, int goal);

// The K best available arms by index value (max or min per mode); ties by
// ascending arm id.
SuperArm topk_oracle(const std::vector<double>& values,
                     const std::vector<int>& available, int k, IndexMode mode);

// Per-edge expected rewards/costs with the generating record.
struct EnvTruth {
  Vector f;
  double noise_variance = 0.0;
  std::uint64_t seed = 0;
};

// Draws truth from the GP prior over all edges and verifies the line graph
// has no negative-cost cycle, resampling with derived seeds up to 10 times
// before raising EnvironmentError.
EnvTruth sample_truth(const LineGraph& graph, const Kernel& kernel,
                      const Vector& prior_mean, double noise_variance,
                      std::uint64_t seed, const std::vector<BaseArm>& arms);

// What the learner sees in one round.
struct Availability {
  std::vector<int> arms;                  // available base arms, ascending id
  std::optional<LineGraph> routing_graph;  // navigation only
};

// Common environment interface for Algorithm-style round execution.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const std::vector<BaseArm>& arms() const = 0;
  virtual const Vector& truth() const = 0;
  virtual double noise_variance() const = 0;
  virtual IndexMode mode() const = 0;

  virtual Availability observe_available(int t, Rng& rng) = 0;
  virtual SuperArm select(const std::vector<double>& indices,
                          const Availability& avail) const = 0;
  // Exact optimum under the true costs restricted to the availability.
  virtual PathResult optimal(const Availability& avail) const = 0;
};

// Unstructured pool with exact top-K oracle, reward maximization and i.i.d.
// per-round arm availability.
class SyntheticEnv : public Environment {
 public:
  struct Options {
    int num_arms = 20;
    int context_dim = 2;
    int k = 2;
    double context_range = 1.0;
    double availability = 1.0;  // per-arm availability probability
    double noise_variance = 0.01;
    std::uint64_t context_seed = 0;  // 0: derive contexts from the truth seed
  };

  SyntheticEnv(const Options& options, std::shared_ptr<const Kernel> kernel,
               std::uint64_t truth_seed);

  const std::vector<BaseArm>& arms() const override { return arms_; }
  const Vector& truth() const override { return truth_.f; }
  double noise_variance() const override { return options_.noise_variance; }
  IndexMode mode() const override { return IndexMode::kMaximize; }

  Availability observe_available(int t, Rng& rng) override;
  SuperArm select(const std::vector<double>& indices,
                  const Availability& avail) const override;
  PathResult optimal(const Availability& avail) const override;

  std::shared_ptr<const Kernel> kernel() const { return kernel_; }

 private:
  Options options_;
  std::shared_ptr<const Kernel> kernel_;
  std::vector<BaseArm> arms_;
  EnvTruth truth_;
};

// Energy-efficient navigation on a road network: node costs on the line
// graph, rectified indices into Dijkstra, true optimum by Bellman-Ford.
// Connection-level volatility removes each legal connection independently
// with probability p_vol and redraws rounds that disconnect the route.
class NavigationEnv : public Environment {
 public:
  struct Options {
    double p_vol = 0.0;
    double noise_variance = 1.0;
    int max_redraws = 100;
  };

  NavigationEnv(RoadNetwork network, const Options& options,
                std::shared_ptr<const Kernel> kernel, const Vector& prior_mean,
                int source_edge, int goal_edge, std::uint64_t truth_seed);

  const std::vector<BaseArm>& arms() const override { return arms_; }
  const Vector& truth() const override { return truth_.f; }
  double noise_variance() const override { return options_.noise_variance; }
  IndexMode mode() const override { return IndexMode::kMinimize; }

  Availability observe_available(int t, Rng& rng) override;
  SuperArm select(const std::vector<double>& indices,
                  const Availability& avail) const override;
  PathResult optimal(const Availability& avail) const override;

  const RoadNetwork& network() const { return network_; }
  const LineGraph& line_graph() const { return line_graph_; }
  int source() const { return source_; }
  int goal() const { return goal_; }
  const StandardizedContexts& contexts() const { return contexts_; }

 private:
  RoadNetwork network_;
  Options options_;
  std::shared_ptr<const Kernel> kernel_;
  LineGraph line_graph_;
  StandardizedContexts contexts_;
  std::vector<BaseArm> arms_;
  int source_;
  int goal_;
  EnvTruth truth_;
  mutable std::optional<PathResult> cached_optimum_;  // valid when p_vol == 0
};

// Learner abstraction consumed by the round loop.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual PosteriorSummary posterior(int arm_id) const = 0;
  virtual Matrix posterior_cov(const SuperArm& arms) const = 0;
  virtual void update(const SuperArm& chosen, const Vector& rewards) = 0;
};

struct RoundResult {
  SuperArm chosen;
  Vector rewards;
  double instantaneous_regret = 0.0;
  double beta_or_eta = 0.0;
  double posterior_std_sum = 0.0;       // over the chosen super arm
  Matrix posterior_block;               // covariance over the chosen arms
  std::vector<double> chosen_variances;  // marginals before the update
};

// Policy selector: one of the index families, or a uniform-random baseline.
struct PolicySpec {
  bool random_baseline = false;
  PolicyFamily family = PolicyFamily::kUCB;
};

// Executes one round: observe availability, compute indices, select through
// the environment's oracle, draw semi-bandit rewards, update the learner and
// return the instantaneous regret against the exact optimum. Errors are
// re-raised with the round index attached.
RoundResult run_round(Environment& env, const PolicySpec& policy,
                      Learner* learner, int t, const ScheduleParams& schedule,
                      const IndexOptions& index_options, Rng& rng);

}  // namespace gpb

#endif  // GPBANDITS_ENVS_HPP_
