#include "gpbandits/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "gpbandits/svgp.hpp"

namespace gpb {

// ---------------------------------------------------------------------------
// Config

Config Config::parse(std::istream& in, const std::string& source_name) {
  Config config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string trimmed = line;
    const auto first = trimmed.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (trimmed[first] == '#') continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      std::ostringstream msg;
      msg << source_name << ":" << line_no
          << ": expected 'key = value' (no '=' found)";
      throw ParseError(msg.str());
    }
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      return s.substr(b, e - b + 1);
    };
    const std::string key = strip(trimmed.substr(0, eq));
    const std::string value = strip(trimmed.substr(eq + 1));
    if (key.empty()) {
      std::ostringstream msg;
      msg << source_name << ":" << line_no << ": empty key";
      throw ParseError(msg.str());
    }
    config.entries_[key] = value;
  }
  return config;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  return parse(in, path);
}

void Config::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get_string(const std::string& key,
                               const std::string& dflt) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? dflt : it->second;
}

double Config::get_double(const std::string& key, double dflt) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return dflt;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "': '" + it->second +
                     "' is not a number");
  }
}

int Config::get_int(const std::string& key, int dflt) const {
  const double v = get_double(key, static_cast<double>(dflt));
  return static_cast<int>(v);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t dflt) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return dflt;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "': '" + it->second +
                     "' is not an unsigned integer");
  }
}

bool Config::get_bool(const std::string& key, bool dflt) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return dflt;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError("config key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<double> Config::get_double_list(
    const std::string& key, const std::vector<double>& dflt) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return dflt;
  std::vector<double> out;
  std::istringstream in(it->second);
  std::string token;
  while (std::getline(in, token, ',')) {
    try {
      out.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw ParseError("config key '" + key + "': '" + token +
                       "' is not a number");
    }
  }
  if (out.empty()) {
    throw ParseError("config key '" + key + "': empty list");
  }
  return out;
}

std::vector<std::string> Config::get_string_list(
    const std::string& key, const std::vector<std::string>& dflt) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return dflt;
  std::vector<std::string> out;
  std::istringstream in(it->second);
  std::string token;
  while (std::getline(in, token, ',')) {
    const auto b = token.find_first_not_of(" \t");
    const auto e = token.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(token.substr(b, e - b + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Algorithms

std::string algorithm_name(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::kGPUCB: return "GP-UCB";
    case AlgorithmKind::kGPBUCB: return "GP-BUCB";
    case AlgorithmKind::kGPTS: return "GP-TS";
    case AlgorithmKind::kBIUCB: return "BI-UCB";
    case AlgorithmKind::kBIBUCB: return "BI-BUCB";
    case AlgorithmKind::kBITS: return "BI-TS";
    case AlgorithmKind::kRandom: return "random";
  }
  return "?";
}

AlgorithmKind parse_algorithm(const std::string& name) {
  if (name == "GP-UCB") return AlgorithmKind::kGPUCB;
  if (name == "GP-BUCB") return AlgorithmKind::kGPBUCB;
  if (name == "GP-TS") return AlgorithmKind::kGPTS;
  if (name == "BI-UCB") return AlgorithmKind::kBIUCB;
  if (name == "BI-BUCB") return AlgorithmKind::kBIBUCB;
  if (name == "BI-TS") return AlgorithmKind::kBITS;
  if (name == "random") return AlgorithmKind::kRandom;
  throw ParseError("unknown algorithm '" + name + "'");
}

bool algorithm_uses_gp(AlgorithmKind kind) {
  return kind == AlgorithmKind::kGPUCB || kind == AlgorithmKind::kGPBUCB ||
         kind == AlgorithmKind::kGPTS;
}

PolicyFamily algorithm_family(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::kGPUCB:
    case AlgorithmKind::kBIUCB:
      return PolicyFamily::kUCB;
    case AlgorithmKind::kGPBUCB:
    case AlgorithmKind::kBIBUCB:
      return PolicyFamily::kBUCB;
    case AlgorithmKind::kGPTS:
    case AlgorithmKind::kBITS:
      return PolicyFamily::kTS;
    case AlgorithmKind::kRandom:
      return PolicyFamily::kUCB;  // unused
  }
  return PolicyFamily::kUCB;
}

// ---------------------------------------------------------------------------
// Spec

ExperimentSpec build_experiment(const Config& config) {
  ExperimentSpec spec;
  spec.env_kind = config.get_string("env.kind", "synthetic");
  if (spec.env_kind != "synthetic" && spec.env_kind != "navigation") {
    throw ParseError("env.kind must be 'synthetic' or 'navigation'");
  }
  spec.network = config.get_string("env.network", "grid:5x5:1");
  spec.route = config.get_string("env.route", "main");
  spec.horizon = config.get_int("env.horizon", 100);
  spec.replicates = config.get_int("env.replicates", 5);
  spec.base_seed = config.get_u64("env.seed", 1);
  spec.p_vol = config.get_double("env.p_vol", 0.0);
  if (spec.horizon < 1 || spec.replicates < 1) {
    throw ParseError("env.horizon and env.replicates must be >= 1");
  }

  const auto names = config.get_string_list(
      "algorithms", {"GP-UCB", "GP-BUCB", "GP-TS"});
  if (names.empty()) throw ParseError("algorithms: list must be non-empty");
  for (const std::string& name : names) {
    spec.algorithms.push_back(parse_algorithm(name));
  }

  spec.xi = config.get_double("schedule.xi", 1.0);
  spec.omega = config.get_double("schedule.omega", 1.0);
  spec.beta_scale = config.get_double("schedule.beta_scale", 1.0);
  spec.truth_resample_per_replicate =
      config.get_bool("truth.resample_per_replicate", true);
  spec.include_wall_ms = config.get_bool("output.include_wall_ms", false);
  spec.bounds_report = config.get_bool("bounds.enabled", false);

  spec.synthetic.num_arms = config.get_int("synthetic.num_arms", 20);
  spec.synthetic.context_dim = config.get_int("synthetic.context_dim", 2);
  spec.synthetic.k = config.get_int("synthetic.k", 2);
  spec.synthetic.availability = config.get_double("synthetic.availability", 1.0);
  spec.synthetic.context_range = config.get_double("synthetic.context_range", 1.0);
  spec.synthetic.noise_variance = config.get_double("env.noise_variance", 0.01);

  spec.sigma_f = config.get_double("kernel.sigma_f", 1.0);
  spec.sigma_g = config.get_double("kernel.sigma_g", 1.0);
  if (!(spec.sigma_f > 0.0) || !(spec.sigma_g > 0.0)) {
    throw ParseError("kernel.sigma_f and kernel.sigma_g must be > 0");
  }
  spec.feature_lengthscales =
      config.get_double_list("kernel.lengthscales", {1.0, 1.0, 1.0});
  spec.prior_scale = config.get_double("kernel.prior_scale", 0.25);
  spec.noise_scale = config.get_double("kernel.noise_scale", 0.1);
  spec.nu_g = config.get_double("kernel.nu_g", 2.0);
  spec.kappa_g = config.get_double("kernel.kappa_g", 1.0);
  spec.lengthscale_sweep = config.get_double_list(
      "kernel.lengthscale_sweep", {0.1, 0.5, 1.0, 2.0});
  for (double l : spec.lengthscale_sweep) {
    if (!(l > 0.0)) throw ParseError("kernel.lengthscale_sweep: values must be > 0");
  }

  spec.svgp_enabled = config.get_bool("svgp.enabled", false);
  spec.svgp_m = config.get_int("svgp.m", 64);
  spec.svgp_g = config.get_int("svgp.g", 1);
  spec.svgp_b = config.get_int("svgp.b", 256);
  spec.svgp_threshold = config.get_int("svgp.threshold", 3000);
  spec.svgp_ngd_rate = config.get_double("svgp.ngd_rate", 0.1);
  spec.svgp_inner_rate = config.get_double("svgp.inner_rate", 0.01);

  spec.tau_constants.max_super_arm = config.get_int("bounds.k", 1);
  spec.tau_constants.lipschitz = config.get_double("bounds.lipschitz", 1.0);
  spec.tau_constants.dimension = config.get_int("bounds.dimension", 1);
  spec.tau_constants.c1 = config.get_double("bounds.c1", 1.0);
  spec.tau_constants.c2 = config.get_double("bounds.c2", 1.0);
  spec.tau_constants.c3 = config.get_double("bounds.c3", 1.0);
  spec.tau_constants.noise_std = config.get_double("bounds.noise_std", 1.0);
  return spec;
}

// ---------------------------------------------------------------------------
// Learners

namespace {

class BILearner : public Learner {
 public:
  BILearner(Vector prior_means, double prior_variance, double noise_variance)
      : state_(make_bi_state(std::move(prior_means), prior_variance,
                             noise_variance)) {}

  PosteriorSummary posterior(int arm_id) const override {
    return state_.posterior(arm_id);
  }

  Matrix posterior_cov(const SuperArm& arms) const override {
    Matrix block = Matrix::Zero(static_cast<Eigen::Index>(arms.size()),
                                static_cast<Eigen::Index>(arms.size()));
    for (std::size_t i = 0; i < arms.size(); ++i) {
      block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
          state_.variance[arms[i]];
    }
    return block;
  }

  void update(const SuperArm& chosen, const Vector& rewards) override {
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      Vector obs(1);
      obs[0] = rewards[static_cast<Eigen::Index>(i)];
      state_ = bi_update(state_, chosen[i], obs);
    }
  }

 private:
  BIState state_;
};

// Exact pooled GP that hands over to the sparse variational model once the
// observation count crosses the threshold (or immediately when forced).
class GPLearner : public Learner {
 public:
  struct SvgpOptions {
    bool force = false;
    int threshold = 3000;
    int m = 64;
    int g = 1;
    int b = 256;
    double ngd_rate = 0.1;
    double inner_rate = 0.01;
  };

  GPLearner(std::shared_ptr<const Kernel> kernel, MeanFn prior_mean,
            std::vector<BaseArm> pool, double noise_variance,
            const SvgpOptions& options, std::uint64_t batch_seed)
      : kernel_(std::move(kernel)),
        prior_mean_(std::move(prior_mean)),
        pool_(std::move(pool)),
        noise_variance_(noise_variance),
        options_(options),
        exact_(kernel_, prior_mean_, pool_, noise_variance_),
        batch_rng_(batch_seed) {
    visit_counts_.resize(pool_.size(), 0);
    if (options_.force) activate_svgp();
  }

  PosteriorSummary posterior(int arm_id) const override {
    if (svgp_ && !history_arms_.empty()) {
      return svgp_posterior(*svgp_, pool_[static_cast<std::size_t>(arm_id)]);
    }
    return exact_.posterior(arm_id);
  }

  Matrix posterior_cov(const SuperArm& arms) const override {
    if (svgp_ && !history_arms_.empty()) {
      std::vector<BaseArm> probe;
      probe.reserve(arms.size());
      for (int id : arms) probe.push_back(pool_[static_cast<std::size_t>(id)]);
      return svgp_posterior_cov(*svgp_, probe);
    }
    return exact_.posterior_cov(arms);
  }

  void update(const SuperArm& chosen, const Vector& rewards) override {
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      history_arms_.push_back(chosen[i]);
      history_rewards_.push_back(rewards[static_cast<Eigen::Index>(i)]);
      ++visit_counts_[static_cast<std::size_t>(chosen[i])];
    }
    if (!svgp_active_ &&
        static_cast<int>(history_arms_.size()) > options_.threshold) {
      activate_svgp();
    }
    if (svgp_active_) {
      refresh_svgp();
    } else {
      exact_.update(chosen, rewards);
    }
  }

 private:
  void activate_svgp() { svgp_active_ = true; }

  void refresh_svgp() {
    std::map<int, int> counts;
    for (std::size_t i = 0; i < visit_counts_.size(); ++i) {
      if (visit_counts_[i] > 0) counts[static_cast<int>(i)] = visit_counts_[i];
    }
    std::vector<BaseArm> inducing = select_inducing(counts, pool_, options_.m);
    std::vector<int> ids;
    ids.reserve(inducing.size());
    for (const BaseArm& z : inducing) ids.push_back(z.id);
    if (!svgp_ || ids != inducing_ids_) {
      svgp_ = make_svgp_state(kernel_, prior_mean_, noise_variance_,
                              std::move(inducing));
      inducing_ids_ = std::move(ids);
    }
    const int n = static_cast<int>(history_arms_.size());
    for (int step = 0; step < options_.g; ++step) {
      const int b = std::min(options_.b, n);
      std::vector<BaseArm> batch_arms;
      Vector batch_rewards(b);
      batch_arms.reserve(static_cast<std::size_t>(b));
      for (int i = 0; i < b; ++i) {
        const std::size_t pick =
            static_cast<std::size_t>(batch_rng_.below(static_cast<std::uint64_t>(n)));
        batch_arms.push_back(pool_[static_cast<std::size_t>(history_arms_[pick])]);
        batch_rewards[i] = history_rewards_[pick];
      }
      *svgp_ = svgp_ngd_step(*svgp_, batch_arms, batch_rewards, n,
                             options_.ngd_rate, options_.inner_rate, step);
    }
  }

  std::shared_ptr<const Kernel> kernel_;
  MeanFn prior_mean_;
  std::vector<BaseArm> pool_;
  double noise_variance_;
  SvgpOptions options_;
  PooledGPLearner exact_;
  Rng batch_rng_;
  bool svgp_active_ = false;
  std::optional<SVGPState> svgp_;
  std::vector<int> inducing_ids_;
  std::vector<int> history_arms_;
  std::vector<double> history_rewards_;
  std::vector<int> visit_counts_;
};

// Shared immutable per-experiment assets (network, kernels, priors). The
// environment kernel draws the truth; the model kernel is what learners use
// and may carry swept lengthscales.
struct Assets {
  bool navigation = false;
  std::string route_label = "synthetic";
  // Navigation.
  RoadNetwork network;
  LineGraph line_graph;
  std::shared_ptr<const Kernel> nav_kernel;
  std::shared_ptr<const Kernel> nav_model_kernel;
  Vector prior_energy;
  double sigma_det = 1.0;
  double nav_noise_variance = 1.0;
  double nav_prior_variance = 1.0;
  int source = -1;
  int goal = -1;
  std::vector<std::string> warnings;
  // Synthetic.
  std::shared_ptr<const Kernel> syn_kernel;
  std::shared_ptr<const Kernel> syn_model_kernel;
};

Assets build_assets(const ExperimentSpec& spec) {
  Assets assets;
  if (spec.env_kind == "synthetic") {
    Vector lengthscales(spec.synthetic.context_dim);
    for (int i = 0; i < spec.synthetic.context_dim; ++i) {
      const std::size_t at = std::min<std::size_t>(
          static_cast<std::size_t>(i), spec.feature_lengthscales.size() - 1);
      lengthscales[i] = spec.feature_lengthscales[at];
    }
    assets.syn_kernel = std::make_shared<Matern52Kernel>(
        FeatureKernelParams(spec.sigma_f, lengthscales));
    assets.syn_model_kernel = assets.syn_kernel;
    if (spec.model_lengthscale) {
      assets.syn_model_kernel = std::make_shared<Matern52Kernel>(
          FeatureKernelParams(spec.sigma_f,
                              Vector::Constant(spec.synthetic.context_dim,
                                               *spec.model_lengthscale)));
    }
    return assets;
  }

  assets.navigation = true;
  LoadedNetwork loaded = load_network(spec.network);
  assets.network = std::move(loaded.network);
  assets.warnings = std::move(loaded.warnings);
  assets.route_label = spec.route;
  const auto route = assets.network.routes.find(spec.route);
  if (route == assets.network.routes.end()) {
    throw ParseError("route '" + spec.route + "' not defined in network '" +
                     spec.network + "'");
  }
  assets.source = route->second.first;
  assets.goal = route->second.second;
  assets.line_graph = build_line_graph(assets.network);

  assets.prior_energy = deterministic_energy_all(assets.network, EnergyParams{});
  const double mean_energy = assets.prior_energy.mean();
  const double var_det =
      (assets.prior_energy.array() - mean_energy).square().sum() /
      static_cast<double>(assets.prior_energy.size());
  assets.sigma_det = std::sqrt(var_det);
  if (!(assets.sigma_det > 1e-12)) {
    assets.warnings.push_back(
        "deterministic energy variance is ~0; using unit prior scale");
    assets.sigma_det = 1.0;
  }
  assets.nav_prior_variance =
      (spec.prior_scale * assets.sigma_det) * (spec.prior_scale * assets.sigma_det);
  assets.nav_noise_variance =
      (spec.noise_scale * assets.sigma_det) * (spec.noise_scale * assets.sigma_det);

  // Graph Gram normalized to unit mean diagonal; outputscales then split the
  // target prior variance between the product and additive terms.
  std::vector<WeightedConnection> weighted;
  weighted.reserve(assets.line_graph.arcs.size());
  for (const WeightedConnection& arc : assets.line_graph.arcs) {
    weighted.push_back(arc);
  }
  GramMatrix graph = graph_matern_gram(
      assets.line_graph.num_nodes, weighted,
      GraphKernelParams(spec.nu_g, spec.kappa_g, 1.0));
  const double mean_diag = graph.cov.diagonal().mean();
  if (mean_diag > 0.0) graph.cov *= spec.sigma_g / mean_diag;

  Vector lengthscales(3);
  for (int i = 0; i < 3; ++i) {
    const std::size_t at = std::min<std::size_t>(
        static_cast<std::size_t>(i), spec.feature_lengthscales.size() - 1);
    lengthscales[i] = spec.feature_lengthscales[at];
  }
  const double half = 0.5 * assets.nav_prior_variance;
  auto shared_graph = std::make_shared<GramMatrix>(std::move(graph));
  assets.nav_kernel = std::make_shared<CompositeKernel>(
      shared_graph, FeatureKernelParams(half, lengthscales),
      FeatureKernelParams(half, lengthscales));
  assets.nav_model_kernel = assets.nav_kernel;
  if (spec.model_lengthscale) {
    const Vector swept = Vector::Constant(3, *spec.model_lengthscale);
    assets.nav_model_kernel = std::make_shared<CompositeKernel>(
        shared_graph, FeatureKernelParams(half, swept),
        FeatureKernelParams(half, swept));
  }
  return assets;
}

struct ReplicateOutcome {
  std::vector<TraceRow> rows;
  bool failed = false;
  std::string error;
  double final_cum_regret = 0.0;
  double wall_ms = 0.0;
  // For bound reports.
  std::vector<std::vector<double>> chosen_variances;
  std::vector<int> selected_arms;
  double lambda_hat = 0.0;
  int max_super_arm = 1;
};

ReplicateOutcome run_replicate(const ExperimentSpec& spec, const Assets& assets,
                               AlgorithmKind algorithm, int replicate) {
  ReplicateOutcome outcome;
  const std::string name = algorithm_name(algorithm);
  const std::uint64_t round_seed = derive_seed(spec.base_seed, name,
                                               static_cast<std::uint64_t>(replicate));
  const std::uint64_t truth_seed =
      spec.truth_resample_per_replicate
          ? derive_seed(spec.base_seed, "truth", static_cast<std::uint64_t>(replicate))
          : derive_seed(spec.base_seed, "truth", 0);

  try {
    std::unique_ptr<Environment> env;
    if (assets.navigation) {
      NavigationEnv::Options options;
      options.p_vol = spec.p_vol;
      options.noise_variance = assets.nav_noise_variance;
      env = std::make_unique<NavigationEnv>(
          assets.network, options, assets.nav_kernel, assets.prior_energy,
          assets.source, assets.goal, truth_seed);
    } else {
      env = std::make_unique<SyntheticEnv>(spec.synthetic, assets.syn_kernel,
                                           truth_seed);
    }

    ScheduleParams schedule;
    schedule.family = algorithm_family(algorithm);
    schedule.cardinality = static_cast<double>(env->arms().size());
    schedule.xi = spec.xi;
    schedule.omega = spec.omega;
    schedule.beta_scale = spec.beta_scale;

    std::unique_ptr<Learner> learner;
    if (algorithm_uses_gp(algorithm)) {
      GPLearner::SvgpOptions svgp;
      svgp.force = spec.svgp_enabled;
      svgp.threshold = spec.svgp_threshold;
      svgp.m = spec.svgp_m;
      svgp.g = spec.svgp_g;
      svgp.b = spec.svgp_b;
      svgp.ngd_rate = spec.svgp_ngd_rate;
      svgp.inner_rate = spec.svgp_inner_rate;
      std::shared_ptr<const Kernel> kernel =
          assets.navigation ? assets.nav_model_kernel : assets.syn_model_kernel;
      MeanFn mean;
      if (assets.navigation) {
        const Vector& prior = assets.prior_energy;
        mean = [prior](const BaseArm& a) { return prior[a.id]; };
      } else {
        mean = zero_mean();
      }
      learner = std::make_unique<GPLearner>(
          kernel, mean, env->arms(), env->noise_variance(), svgp,
          derive_seed(spec.base_seed, name + "/batch",
                      static_cast<std::uint64_t>(replicate)));
    } else if (algorithm != AlgorithmKind::kRandom) {
      Vector prior_means;
      double prior_variance;
      if (assets.navigation) {
        prior_means = assets.prior_energy;
        prior_variance = assets.nav_prior_variance;
      } else {
        prior_means = Vector::Zero(static_cast<Eigen::Index>(env->arms().size()));
        prior_variance = 1.0;
      }
      learner = std::make_unique<BILearner>(std::move(prior_means),
                                            prior_variance,
                                            env->noise_variance());
    }

    PolicySpec policy;
    policy.random_baseline = algorithm == AlgorithmKind::kRandom;
    policy.family = algorithm_family(algorithm);

    IndexOptions index_options;
    Rng rng(round_seed);
    LambdaStarTracker tracker;
    double cum_regret = 0.0;
    const auto start = std::chrono::steady_clock::now();

    for (int t = 1; t <= spec.horizon; ++t) {
      const auto round_start = std::chrono::steady_clock::now();
      RoundResult round = run_round(*env, policy, learner.get(), t, schedule,
                                    index_options, rng);
      const auto round_end = std::chrono::steady_clock::now();
      cum_regret += round.instantaneous_regret;

      TraceRow row;
      row.algorithm = name;
      row.route = assets.route_label;
      row.replicate = replicate;
      row.t = t;
      row.inst_regret = round.instantaneous_regret;
      row.cum_regret = cum_regret;
      row.beta_t = round.beta_or_eta;
      row.path_len = static_cast<int>(round.chosen.size());
      row.ms = spec.include_wall_ms
                   ? std::chrono::duration_cast<std::chrono::milliseconds>(
                         round_end - round_start)
                         .count()
                   : 0;
      outcome.rows.push_back(std::move(row));

      outcome.max_super_arm =
          std::max(outcome.max_super_arm, static_cast<int>(round.chosen.size()));
      if (spec.bounds_report && learner) {
        tracker.observe(round.posterior_block);
        outcome.chosen_variances.push_back(round.chosen_variances);
        outcome.selected_arms.insert(outcome.selected_arms.end(),
                                     round.chosen.begin(), round.chosen.end());
      }
    }
    const auto end = std::chrono::steady_clock::now();
    outcome.wall_ms =
        std::chrono::duration<double, std::milli>(end - start).count();
    outcome.final_cum_regret = cum_regret;
    outcome.lambda_hat = tracker.value();
  } catch (const std::exception& e) {
    outcome.failed = true;
    outcome.error = e.what();
    outcome.rows.clear();
  }
  return outcome;
}

}  // namespace

// ---------------------------------------------------------------------------
// Experiment driver

ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs) {
  const Assets assets = build_assets(spec);
  ExperimentResult result;
  result.warnings = assets.warnings;

  struct Task {
    AlgorithmKind algorithm;
    int replicate;
  };
  std::vector<Task> tasks;
  for (AlgorithmKind algorithm : spec.algorithms) {
    for (int r = 0; r < spec.replicates; ++r) tasks.push_back({algorithm, r});
  }
  std::vector<ReplicateOutcome> outcomes(tasks.size());

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      outcomes[i] = run_replicate(spec, assets, tasks[i].algorithm,
                                  tasks[i].replicate);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (std::thread& thread : threads) thread.join();
  }

  // Deterministic merge and per-algorithm summaries.
  for (std::size_t a = 0; a < spec.algorithms.size(); ++a) {
    const AlgorithmKind algorithm = spec.algorithms[a];
    AlgorithmSummary summary;
    summary.algorithm = algorithm_name(algorithm);
    std::vector<double> finals;
    double lambda_hat = 0.0;
    int max_super_arm = 1;
    std::vector<std::vector<double>> all_variances;
    std::vector<int> all_selected;

    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].algorithm != algorithm) continue;
      const ReplicateOutcome& outcome = outcomes[i];
      ++summary.replicates;
      if (outcome.failed) {
        ++summary.failed_replicates;
        summary.errors.push_back("replicate " +
                                 std::to_string(tasks[i].replicate) + ": " +
                                 outcome.error);
        continue;
      }
      result.rows.insert(result.rows.end(), outcome.rows.begin(),
                         outcome.rows.end());
      finals.push_back(outcome.final_cum_regret);
      summary.mean_wall_ms += outcome.wall_ms;
      lambda_hat = std::max(lambda_hat, outcome.lambda_hat);
      max_super_arm = std::max(max_super_arm, outcome.max_super_arm);
      all_variances.insert(all_variances.end(), outcome.chosen_variances.begin(),
                           outcome.chosen_variances.end());
    }
    if (!finals.empty()) {
      double mean = 0.0;
      for (double v : finals) mean += v;
      mean /= static_cast<double>(finals.size());
      double var = 0.0;
      for (double v : finals) var += (v - mean) * (v - mean);
      summary.mean_cum_regret = mean;
      summary.stderr_cum_regret =
          finals.size() > 1
              ? std::sqrt(var / static_cast<double>(finals.size() - 1)) /
                    std::sqrt(static_cast<double>(finals.size()))
              : 0.0;
      summary.mean_wall_ms /= static_cast<double>(finals.size());
    }
    result.summaries.push_back(summary);

    if (spec.bounds_report && algorithm != AlgorithmKind::kRandom &&
        !finals.empty()) {
      const double noise = assets.navigation ? assets.nav_noise_variance
                                             : spec.synthetic.noise_variance;
      // Greedy information-gain surrogate over the full pool with budget T*K,
      // taken under the learner's kernel.
      std::shared_ptr<const Kernel> kernel =
          assets.navigation ? assets.nav_model_kernel : assets.syn_model_kernel;
      std::vector<BaseArm> pool;
      if (assets.navigation) {
        StandardizedContexts contexts = standardize_contexts(raw_features(assets.network));
        for (Eigen::Index i = 0; i < contexts.contexts.rows(); ++i) {
          pool.emplace_back(static_cast<int>(i),
                            contexts.contexts.row(i).transpose());
        }
      } else {
        SyntheticEnv probe(spec.synthetic, assets.syn_kernel,
                           derive_seed(spec.base_seed, "truth", 0));
        pool = probe.arms();
      }
      const double gamma_hat =
          greedy_gamma(*kernel, pool, noise, spec.horizon * max_super_arm);

      BoundInputs inputs;
      inputs.horizon = spec.horizon;
      inputs.max_super_arm = max_super_arm;
      inputs.noise_variance = noise;
      inputs.lambda_star = lambda_hat;
      inputs.gamma = gamma_hat;
      inputs.schedule.family = algorithm_family(algorithm);
      inputs.schedule.cardinality = static_cast<double>(pool.size());
      inputs.schedule.xi = spec.xi;
      inputs.schedule.omega = spec.omega;
      inputs.schedule.beta_scale = spec.beta_scale;
      inputs.c1 = spec.tau_constants.c1;
      inputs.c2 = spec.tau_constants.c2;
      inputs.c3 = spec.tau_constants.c3;
      inputs.lipschitz = spec.tau_constants.lipschitz;
      inputs.dimension = spec.tau_constants.dimension;

      BoundReportRow row;
      row.algorithm = summary.algorithm;
      const BoundResult finite =
          finite_regret_bound(algorithm_family(algorithm), inputs);
      const BoundResult infinite =
          infinite_regret_bound(algorithm_family(algorithm), inputs);
      row.beta_horizon = finite.beta_horizon;
      row.gamma_hat = gamma_hat;
      row.lambda_hat = lambda_hat;
      row.c_k = 2.0 * (lambda_hat + noise);
      row.finite_bound = finite.value;
      row.infinite_bound = infinite.value;
      row.schedule_valid = finite.schedule_valid;
      row.mean_cum_regret = summary.mean_cum_regret;
      result.bounds.push_back(row);
    }
  }

  std::stable_sort(result.rows.begin(), result.rows.end(),
                   [](const TraceRow& a, const TraceRow& b) {
                     if (a.algorithm != b.algorithm) return a.algorithm < b.algorithm;
                     if (a.replicate != b.replicate) return a.replicate < b.replicate;
                     return a.t < b.t;
                   });
  return result;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.9g", v);
  return buffer;
}

}  // namespace

void emit_csv(const std::vector<TraceRow>& rows, std::ostream& out) {
  out << "algorithm,route,replicate,t,inst_regret,cum_regret,beta_t,path_len,ms\n";
  for (const TraceRow& row : rows) {
    out << row.algorithm << ',' << row.route << ',' << row.replicate << ','
        << row.t << ',' << format_double(row.inst_regret) << ','
        << format_double(row.cum_regret) << ',' << format_double(row.beta_t)
        << ',' << row.path_len << ',' << row.ms << '\n';
  }
}

void emit_csv_file(const std::vector<TraceRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write CSV to '" + path + "'");
  emit_csv(rows, out);
}

std::string format_summary(const ExperimentResult& result) {
  std::ostringstream out;
  for (const std::string& warning : result.warnings) {
    out << "warning: " << warning << "\n";
  }
  out << "algorithm  replicates  failed  cum_regret(mean+-stderr)  wall_ms\n";
  for (const AlgorithmSummary& s : result.summaries) {
    out << s.algorithm << "  " << s.replicates << "  " << s.failed_replicates
        << "  " << format_double(s.mean_cum_regret) << " +- "
        << format_double(s.stderr_cum_regret) << "  "
        << format_double(s.mean_wall_ms) << "\n";
    for (const std::string& error : s.errors) {
      out << "  error: " << error << "\n";
    }
  }
  if (!result.bounds.empty()) {
    out << format_bounds(result.bounds);
  }
  return out.str();
}

std::string format_bounds(const std::vector<BoundReportRow>& bounds) {
  std::ostringstream out;
  out << "algorithm,beta_T,gamma_hat,lambda_hat,C_K,finite_bound,infinite_bound,"
         "schedule_valid,mean_cum_regret\n";
  for (const BoundReportRow& row : bounds) {
    out << row.algorithm << ',' << format_double(row.beta_horizon) << ','
        << format_double(row.gamma_hat) << ',' << format_double(row.lambda_hat)
        << ',' << format_double(row.c_k) << ','
        << format_double(row.finite_bound) << ','
        << format_double(row.infinite_bound) << ','
        << (row.schedule_valid ? "true" : "false") << ','
        << format_double(row.mean_cum_regret) << '\n';
  }
  return out.str();
}

std::vector<SweepRow> run_lengthscale_sweep(const ExperimentSpec& spec, int jobs) {
  std::vector<SweepRow> rows;
  for (double lengthscale : spec.lengthscale_sweep) {
    ExperimentSpec scaled = spec;
    scaled.model_lengthscale = lengthscale;  // truth kernel stays configured
    const ExperimentResult result = run_experiment(scaled, jobs);
    for (const AlgorithmSummary& summary : result.summaries) {
      SweepRow row;
      row.lengthscale = lengthscale;
      row.algorithm = summary.algorithm;
      row.mean_cum_regret = summary.mean_cum_regret;
      row.stderr_cum_regret = summary.stderr_cum_regret;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string format_sweep(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "lengthscale,algorithm,mean_cum_regret,stderr_cum_regret\n";
  for (const SweepRow& row : rows) {
    out << format_double(row.lengthscale) << ',' << row.algorithm << ','
        << format_double(row.mean_cum_regret) << ','
        << format_double(row.stderr_cum_regret) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Calculator reports

namespace {

struct PoolInfo {
  std::vector<BaseArm> arms;
  double noise = 1.0;
  std::shared_ptr<const Kernel> kernel;
};

PoolInfo pool_info(const ExperimentSpec& spec, const Assets& assets) {
  PoolInfo info;
  if (assets.navigation) {
    info.kernel = assets.nav_model_kernel;
    info.noise = assets.nav_noise_variance;
    StandardizedContexts contexts =
        standardize_contexts(raw_features(assets.network));
    for (Eigen::Index i = 0; i < contexts.contexts.rows(); ++i) {
      info.arms.emplace_back(static_cast<int>(i),
                             contexts.contexts.row(i).transpose());
    }
  } else {
    info.kernel = assets.syn_model_kernel;
    info.noise = spec.synthetic.noise_variance;
    SyntheticEnv probe(spec.synthetic, assets.syn_kernel,
                       derive_seed(spec.base_seed, "truth", 0));
    info.arms = probe.arms();
  }
  return info;
}

}  // namespace

std::string bounds_report_text(const Config& config) {
  const ExperimentSpec spec = build_experiment(config);
  const Assets assets = build_assets(spec);
  const PoolInfo pool = pool_info(spec, assets);

  const int k = config.get_int("bounds.k",
                               assets.navigation ? 1 : spec.synthetic.k);
  const double gamma = config.has("bounds.gamma")
                           ? config.get_double("bounds.gamma", 0.0)
                           : greedy_gamma(*pool.kernel, pool.arms, pool.noise,
                                          spec.horizon * k);
  const double lambda =
      config.get_double("bounds.lambda_star", pool.noise);

  std::vector<BoundReportRow> rows;
  for (AlgorithmKind algorithm : spec.algorithms) {
    if (!algorithm_uses_gp(algorithm)) continue;
    BoundInputs inputs;
    inputs.horizon = spec.horizon;
    inputs.max_super_arm = k;
    inputs.noise_variance = pool.noise;
    inputs.lambda_star = lambda;
    inputs.gamma = gamma;
    inputs.schedule.family = algorithm_family(algorithm);
    inputs.schedule.cardinality =
        config.get_double("bounds.cardinality",
                          static_cast<double>(pool.arms.size()));
    inputs.schedule.xi = spec.xi;
    inputs.schedule.omega = spec.omega;
    inputs.schedule.beta_scale = spec.beta_scale;
    inputs.c1 = spec.tau_constants.c1;
    inputs.c2 = spec.tau_constants.c2;
    inputs.c3 = spec.tau_constants.c3;
    inputs.lipschitz = spec.tau_constants.lipschitz;
    inputs.dimension = spec.tau_constants.dimension;

    BoundReportRow row;
    row.algorithm = algorithm_name(algorithm);
    const BoundResult finite =
        finite_regret_bound(algorithm_family(algorithm), inputs);
    const BoundResult infinite =
        infinite_regret_bound(algorithm_family(algorithm), inputs);
    row.beta_horizon = finite.beta_horizon;
    row.gamma_hat = gamma;
    row.lambda_hat = lambda;
    row.c_k = 2.0 * (lambda + pool.noise);
    row.finite_bound = finite.value;
    row.infinite_bound = infinite.value;
    row.schedule_valid = finite.schedule_valid;
    rows.push_back(row);
  }
  return format_bounds(rows);
}

std::string gamma_report_text(const Config& config) {
  const ExperimentSpec spec = build_experiment(config);
  const Assets assets = build_assets(spec);
  const PoolInfo pool = pool_info(spec, assets);
  const int k = config.get_int("bounds.k",
                               assets.navigation ? 1 : spec.synthetic.k);
  const int budget = spec.horizon * std::max(k, 1);

  std::ostringstream out;
  out << "budget,gamma_nats\n";
  int step = 1;
  while (true) {
    out << step << ',' << format_double(greedy_gamma(*pool.kernel, pool.arms,
                                                     pool.noise, step))
        << '\n';
    if (step >= budget) break;
    step = std::min(step * 2, budget);
  }
  return out.str();
}

std::string tau_table_text(const Config& config) {
  const ExperimentSpec spec = build_experiment(config);
  std::ostringstream out;
  out << "t,tau_ucb,tau_bucb\n";
  for (int t = 1; t <= spec.horizon; ++t) {
    const double tau_ucb =
        tau_t(PolicyFamily::kUCB, t, spec.tau_constants, spec.xi, spec.omega);
    // The BUCB variant needs omega > 1 inside its schedule; fall back to a
    // barely-valid omega when the configured one is not.
    const double omega_b = spec.omega > 1.0 ? spec.omega : 1.0 + 1e-6;
    const double xi_b = spec.xi > omega_b ? spec.xi : omega_b + 1.0;
    const double tau_bucb =
        tau_t(PolicyFamily::kBUCB, t, spec.tau_constants, xi_b, omega_b);
    out << t << ',' << format_double(tau_ucb) << ',' << format_double(tau_bucb)
        << '\n';
  }
  return out.str();
}

}  // namespace gpb
