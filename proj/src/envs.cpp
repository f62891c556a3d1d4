#include "gpbandits/envs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace gpb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cost to reach the goal from every node, node costs charged on entry and
// the start node's own cost included: dist[u] = cost[u] + min_v dist[v] over
// arcs u -> v, dist[goal] = cost[goal]. Computed over reversed arcs.
Vector dijkstra_to_goal(const LineGraph& graph, const Vector& costs, int goal) {
  Vector dist = Vector::Constant(graph.num_nodes, kInf);
  dist[goal] = costs[goal];
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  heap.emplace(dist[goal], goal);
  std::vector<bool> settled(static_cast<std::size_t>(graph.num_nodes), false);
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (settled[static_cast<std::size_t>(u)]) continue;
    settled[static_cast<std::size_t>(u)] = true;
    for (int p : graph.predecessors[static_cast<std::size_t>(u)]) {
      const double candidate = costs[p] + d;
      if (candidate < dist[p]) {
        dist[p] = candidate;
        heap.emplace(candidate, p);
      }
    }
  }
  return dist;
}

struct BellmanFordResult {
  Vector dist;
  bool negative_cycle = false;
  std::vector<int> cycle;
};

// Bellman-Ford variant of dijkstra_to_goal; detects cycles with negative
// total node cost that can still improve some distance.
BellmanFordResult bellman_ford_to_goal(const LineGraph& graph,
                                       const Vector& costs, int goal) {
  BellmanFordResult out;
  out.dist = Vector::Constant(graph.num_nodes, kInf);
  out.dist[goal] = costs[goal];
  std::vector<int> via(static_cast<std::size_t>(graph.num_nodes), -1);

  for (int sweep = 0; sweep < graph.num_nodes; ++sweep) {
    bool changed = false;
    for (const WeightedConnection& arc : graph.arcs) {
      if (out.dist[arc.to] == kInf) continue;
      const double candidate = costs[arc.from] + out.dist[arc.to];
      if (candidate < out.dist[arc.from] - 1e-15) {
        out.dist[arc.from] = candidate;
        via[static_cast<std::size_t>(arc.from)] = arc.to;
        changed = true;
        if (sweep == graph.num_nodes - 1) {
          // Still relaxing after num_nodes - 1 sweeps: walk the via chain to
          // land inside the cycle.
          int u = arc.from;
          for (int i = 0; i < graph.num_nodes; ++i) {
            u = via[static_cast<std::size_t>(u)];
          }
          std::vector<int> cycle{u};
          for (int v = via[static_cast<std::size_t>(u)]; v != u;
               v = via[static_cast<std::size_t>(v)]) {
            cycle.push_back(v);
          }
          out.negative_cycle = true;
          out.cycle = std::move(cycle);
          return out;
        }
      }
    }
    if (!changed) break;
  }
  return out;
}

// Lexicographically smallest simple path satisfying the optimality equation
// dist[u] == cost[u] + dist[v]; depth-first with backtracking so ties and
// zero-cost cycles cannot trap the walk.
bool reconstruct_path(const LineGraph& graph, const Vector& costs,
                      const Vector& dist, int u, int goal,
                      std::vector<bool>& visited, SuperArm& path) {
  path.push_back(u);
  if (u == goal) return true;
  visited[static_cast<std::size_t>(u)] = true;
  for (int v : graph.successors[static_cast<std::size_t>(u)]) {
    if (visited[static_cast<std::size_t>(v)] || dist[v] == kInf) continue;
    const double lhs = costs[u] + dist[v];
    const double tol = 1e-9 * (1.0 + std::fabs(dist[u]));
    if (std::fabs(lhs - dist[u]) > tol) continue;
    if (reconstruct_path(graph, costs, dist, v, goal, visited, path)) {
      visited[static_cast<std::size_t>(u)] = false;
      return true;
    }
  }
  visited[static_cast<std::size_t>(u)] = false;
  path.pop_back();
  return false;
}

void check_endpoints(const LineGraph& graph, int source, int goal,
                     const char* who) {
  if (source < 0 || source >= graph.num_nodes || goal < 0 ||
      goal >= graph.num_nodes) {
    std::ostringstream msg;
    msg << who << ": endpoints (" << source << ", " << goal
        << ") outside the line graph";
    throw std::invalid_argument(msg.str());
  }
}

double path_cost(const Vector& costs, const SuperArm& path) {
  double total = 0.0;
  for (int node : path) total += costs[node];
  return total;
}

// Detects any cycle of negative total node cost in the graph.
std::optional<std::vector<int>> find_negative_cycle(const LineGraph& graph,
                                                    const Vector& costs) {
  Vector dist = Vector::Zero(graph.num_nodes);
  std::vector<int> via(static_cast<std::size_t>(graph.num_nodes), -1);
  for (int sweep = 0; sweep <= graph.num_nodes; ++sweep) {
    bool changed = false;
    for (const WeightedConnection& arc : graph.arcs) {
      const double candidate = dist[arc.from] + costs[arc.to];
      if (candidate < dist[arc.to] - 1e-15) {
        dist[arc.to] = candidate;
        via[static_cast<std::size_t>(arc.to)] = arc.from;
        changed = true;
        if (sweep == graph.num_nodes) {
          int u = arc.to;
          for (int i = 0; i < graph.num_nodes; ++i) {
            u = via[static_cast<std::size_t>(u)];
          }
          std::vector<int> cycle{u};
          for (int v = via[static_cast<std::size_t>(u)]; v != u;
               v = via[static_cast<std::size_t>(v)]) {
            cycle.push_back(v);
          }
          std::reverse(cycle.begin(), cycle.end());
          return cycle;
        }
      }
    }
    if (!changed) return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

PathResult dijkstra_path(const LineGraph& graph, const Vector& node_costs,
                         int source, int goal) {
  check_endpoints(graph, source, goal, "dijkstra_path");
  if (node_costs.size() != graph.num_nodes) {
    throw std::invalid_argument("dijkstra_path: cost vector size mismatch");
  }
  for (Eigen::Index i = 0; i < node_costs.size(); ++i) {
    if (!(node_costs[i] >= 0.0)) {
      std::ostringstream msg;
      msg << "dijkstra_path: negative or non-finite cost at node " << i;
      throw std::invalid_argument(msg.str());
    }
  }
  const Vector dist = dijkstra_to_goal(graph, node_costs, goal);
  if (dist[source] == kInf) {
    std::ostringstream msg;
    msg << "dijkstra_path: goal " << goal << " unreachable from " << source;
    throw RoutingError(msg.str());
  }
  PathResult result;
  std::vector<bool> visited(static_cast<std::size_t>(graph.num_nodes), false);
  if (!reconstruct_path(graph, node_costs, dist, source, goal, visited,
                        result.path)) {
    throw RoutingError("dijkstra_path: failed to reconstruct an optimal path");
  }
  result.cost = path_cost(node_costs, result.path);
  return result;
}

PathResult bellman_ford_optimum(const LineGraph& graph, const Vector& node_costs,
                                int source, int goal) {
  check_endpoints(graph, source, goal, "bellman_ford_optimum");
  if (node_costs.size() != graph.num_nodes) {
    throw std::invalid_argument("bellman_ford_optimum: cost vector size mismatch");
  }
  const BellmanFordResult bf = bellman_ford_to_goal(graph, node_costs, goal);
  if (bf.negative_cycle) {
    std::ostringstream msg;
    msg << "bellman_ford_optimum: negative-cost cycle through nodes";
    for (int node : bf.cycle) msg << ' ' << node;
    throw EnvironmentError(msg.str());
  }
  if (bf.dist[source] == kInf) {
    std::ostringstream msg;
    msg << "bellman_ford_optimum: goal " << goal << " unreachable from "
        << source;
    throw RoutingError(msg.str());
  }
  PathResult result;
  std::vector<bool> visited(static_cast<std::size_t>(graph.num_nodes), false);
  if (!reconstruct_path(graph, node_costs, bf.dist, source, goal, visited,
                        result.path)) {
    throw RoutingError("bellman_ford_optimum: failed to reconstruct an optimal path");
  }
  result.cost = path_cost(node_costs, result.path);
  return result;
}

SuperArm topk_oracle(const std::vector<double>& values,
                     const std::vector<int>& available, int k, IndexMode mode) {
  if (available.empty()) {
    throw std::invalid_argument("topk_oracle: need at least one available arm");
  }
  SuperArm chosen(available.begin(), available.end());
  std::sort(chosen.begin(), chosen.end(), [&](int a, int b) {
    const double va = values[static_cast<std::size_t>(a)];
    const double vb = values[static_cast<std::size_t>(b)];
    if (va != vb) {
      return mode == IndexMode::kMaximize ? va > vb : va < vb;
    }
    return a < b;
  });
  if (static_cast<int>(chosen.size()) > k) {
    chosen.resize(static_cast<std::size_t>(k));
  }
  return chosen;
}

EnvTruth sample_truth(const LineGraph& graph, const Kernel& kernel,
                      const Vector& prior_mean, double noise_variance,
                      std::uint64_t seed, const std::vector<BaseArm>& arms) {
  if (prior_mean.size() != graph.num_nodes ||
      static_cast<int>(arms.size()) != graph.num_nodes) {
    throw std::invalid_argument("sample_truth: prior/arms size mismatch");
  }
  MeanFn mean = [&prior_mean](const BaseArm& a) { return prior_mean[a.id]; };
  std::optional<std::vector<int>> last_cycle;
  for (int attempt = 0; attempt < 10; ++attempt) {
    const std::uint64_t s = attempt == 0 ? seed : mix64(seed + static_cast<std::uint64_t>(attempt));
    Vector f = sample_function(kernel, mean, arms, s);
    last_cycle = find_negative_cycle(graph, f);
    if (!last_cycle) {
      EnvTruth truth;
      truth.f = std::move(f);
      truth.noise_variance = noise_variance;
      truth.seed = s;
      return truth;
    }
  }
  std::ostringstream msg;
  msg << "sample_truth: negative-cost cycle persisted across 10 draws; cycle nodes";
  for (int node : *last_cycle) msg << ' ' << node;
  throw EnvironmentError(msg.str());
}

SyntheticEnv::SyntheticEnv(const Options& options,
                           std::shared_ptr<const Kernel> kernel,
                           std::uint64_t truth_seed)
    : options_(options), kernel_(std::move(kernel)) {
  if (options_.num_arms < 1 || options_.k < 1) {
    throw std::invalid_argument("SyntheticEnv: num_arms and k must be >= 1");
  }
  const std::uint64_t context_seed =
      options_.context_seed != 0 ? options_.context_seed : truth_seed;
  Rng rng(mix64(context_seed ^ 0xa5a5a5a5ULL));
  arms_.reserve(static_cast<std::size_t>(options_.num_arms));
  for (int i = 0; i < options_.num_arms; ++i) {
    Vector context(options_.context_dim);
    for (int d = 0; d < options_.context_dim; ++d) {
      context[d] = rng.uniform(0.0, options_.context_range);
    }
    arms_.emplace_back(i, std::move(context));
  }
  truth_.f = sample_function(*kernel_, zero_mean(), arms_, truth_seed);
  truth_.noise_variance = options_.noise_variance;
  truth_.seed = truth_seed;
}

Availability SyntheticEnv::observe_available(int /*t*/, Rng& rng) {
  Availability avail;
  if (options_.availability >= 1.0) {
    for (const BaseArm& a : arms_) avail.arms.push_back(a.id);
    return avail;
  }
  for (int attempt = 0; attempt < 100; ++attempt) {
    avail.arms.clear();
    for (const BaseArm& a : arms_) {
      if (rng.uniform() < options_.availability) avail.arms.push_back(a.id);
    }
    if (static_cast<int>(avail.arms.size()) >= options_.k) return avail;
  }
  throw EnvironmentError(
      "SyntheticEnv: could not draw an availability set with >= k arms");
}

SuperArm SyntheticEnv::select(const std::vector<double>& indices,
                              const Availability& avail) const {
  return topk_oracle(indices, avail.arms, options_.k, IndexMode::kMaximize);
}

PathResult SyntheticEnv::optimal(const Availability& avail) const {
  std::vector<double> truth_values(arms_.size(), 0.0);
  for (const BaseArm& a : arms_) {
    truth_values[static_cast<std::size_t>(a.id)] = truth_.f[a.id];
  }
  PathResult out;
  out.path = topk_oracle(truth_values, avail.arms, options_.k, IndexMode::kMaximize);
  for (int id : out.path) out.cost += truth_.f[id];
  return out;
}

NavigationEnv::NavigationEnv(RoadNetwork network, const Options& options,
                             std::shared_ptr<const Kernel> kernel,
                             const Vector& prior_mean, int source_edge,
                             int goal_edge, std::uint64_t truth_seed)
    : network_(std::move(network)),
      options_(options),
      kernel_(std::move(kernel)),
      line_graph_(build_line_graph(network_)),
      contexts_(standardize_contexts(raw_features(network_))),
      source_(source_edge),
      goal_(goal_edge) {
  check_endpoints(line_graph_, source_, goal_, "NavigationEnv");
  arms_.reserve(network_.edges.size());
  for (std::size_t i = 0; i < network_.edges.size(); ++i) {
    arms_.emplace_back(static_cast<int>(i),
                       contexts_.contexts.row(static_cast<Eigen::Index>(i)).transpose());
  }
  truth_ = sample_truth(line_graph_, *kernel_, prior_mean,
                        options_.noise_variance, truth_seed, arms_);
}

Availability NavigationEnv::observe_available(int /*t*/, Rng& rng) {
  Availability avail;
  for (const BaseArm& a : arms_) avail.arms.push_back(a.id);
  if (options_.p_vol <= 0.0) {
    return avail;  // static availability; select() falls back to the full graph
  }
  for (int attempt = 0; attempt < options_.max_redraws; ++attempt) {
    LineGraph sub;
    sub.num_nodes = line_graph_.num_nodes;
    sub.mean_edge_length = line_graph_.mean_edge_length;
    sub.successors.assign(static_cast<std::size_t>(sub.num_nodes), {});
    sub.predecessors.assign(static_cast<std::size_t>(sub.num_nodes), {});
    for (const WeightedConnection& arc : line_graph_.arcs) {
      if (rng.uniform() < options_.p_vol) continue;
      sub.arcs.push_back(arc);
      sub.successors[static_cast<std::size_t>(arc.from)].push_back(arc.to);
      sub.predecessors[static_cast<std::size_t>(arc.to)].push_back(arc.from);
    }
    for (auto& s : sub.successors) std::sort(s.begin(), s.end());
    for (auto& p : sub.predecessors) std::sort(p.begin(), p.end());
    const Vector dist = dijkstra_to_goal(sub, Vector::Zero(sub.num_nodes), goal_);
    if (dist[source_] != kInf) {
      avail.routing_graph = std::move(sub);
      return avail;
    }
  }
  std::ostringstream msg;
  msg << "NavigationEnv: goal unreachable after " << options_.max_redraws
      << " availability redraws (p_vol = " << options_.p_vol << ")";
  throw EnvironmentError(msg.str());
}

SuperArm NavigationEnv::select(const std::vector<double>& indices,
                               const Availability& avail) const {
  const LineGraph& graph =
      avail.routing_graph ? *avail.routing_graph : line_graph_;
  Vector costs(line_graph_.num_nodes);
  for (int i = 0; i < line_graph_.num_nodes; ++i) {
    costs[i] = indices[static_cast<std::size_t>(i)];
  }
  return dijkstra_path(graph, costs, source_, goal_).path;
}

PathResult NavigationEnv::optimal(const Availability& avail) const {
  if (!avail.routing_graph && cached_optimum_) return *cached_optimum_;
  const LineGraph& graph =
      avail.routing_graph ? *avail.routing_graph : line_graph_;
  PathResult result = bellman_ford_optimum(graph, truth_.f, source_, goal_);
  if (!avail.routing_graph) cached_optimum_ = result;
  return result;
}

RoundResult run_round(Environment& env, const PolicySpec& policy,
                      Learner* learner, int t, const ScheduleParams& schedule,
                      const IndexOptions& index_options, Rng& rng) {
  try {
    const Availability avail = env.observe_available(t, rng);

    std::vector<double> values(env.arms().size(),
                               std::numeric_limits<double>::quiet_NaN());
    RoundResult result;
    if (policy.random_baseline) {
      for (int id : avail.arms) {
        values[static_cast<std::size_t>(id)] = rng.uniform();
      }
    } else {
      std::vector<PosteriorSummary> posteriors;
      posteriors.reserve(avail.arms.size());
      for (int id : avail.arms) posteriors.push_back(learner->posterior(id));
      IndexOptions options = index_options;
      options.mode = env.mode();
      const std::vector<double> indices =
          compute_indices(policy.family, posteriors, t, schedule, options, rng);
      for (std::size_t i = 0; i < avail.arms.size(); ++i) {
        values[static_cast<std::size_t>(avail.arms[i])] = indices[i];
      }
      result.beta_or_eta = policy.family == PolicyFamily::kBUCB
                               ? schedule.eta(t)
                               : schedule.beta(t);
    }

    result.chosen = env.select(values, avail);

    if (learner != nullptr) {
      result.posterior_block = learner->posterior_cov(result.chosen);
      result.chosen_variances.reserve(result.chosen.size());
      for (std::size_t i = 0; i < result.chosen.size(); ++i) {
        const double v = std::max(result.posterior_block(
                                      static_cast<Eigen::Index>(i),
                                      static_cast<Eigen::Index>(i)),
                                  0.0);
        result.chosen_variances.push_back(v);
        result.posterior_std_sum += std::sqrt(v);
      }
    }

    const double noise_std = std::sqrt(env.noise_variance());
    result.rewards.resize(static_cast<Eigen::Index>(result.chosen.size()));
    double chosen_truth = 0.0;
    for (std::size_t i = 0; i < result.chosen.size(); ++i) {
      const double f = env.truth()[result.chosen[i]];
      chosen_truth += f;
      result.rewards[static_cast<Eigen::Index>(i)] = f + noise_std * rng.gaussian();
    }

    if (learner != nullptr) learner->update(result.chosen, result.rewards);

    const PathResult best = env.optimal(avail);
    double best_truth = 0.0;
    for (int id : best.path) best_truth += env.truth()[id];
    double regret = env.mode() == IndexMode::kMaximize
                        ? best_truth - chosen_truth
                        : chosen_truth - best_truth;
    if (regret < 0.0 && regret > -1e-9) regret = 0.0;
    result.instantaneous_regret = regret;
    return result;
  } catch (const RoutingError& e) {
    throw RoutingError("round " + std::to_string(t) + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError("round " + std::to_string(t) + ": " + e.what());
  } catch (const EnvironmentError& e) {
    throw EnvironmentError("round " + std::to_string(t) + ": " + e.what());
  }
}

}  // namespace gpb
