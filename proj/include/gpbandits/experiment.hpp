// Experiment orchestration: flat key-value configs, seeded replicate
// execution across algorithms, CSV persistence and bound reports.

#ifndef GPBANDITS_EXPERIMENT_HPP_
#define GPBANDITS_EXPERIMENT_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpbandits/analysis.hpp"
#include "gpbandits/envs.hpp"

namespace gpb {

// Flat dotted-key configuration ("kernel.sigma_f = 1.0"); '#' starts a
// comment. Unknown keys are tolerated, malformed lines raise ParseError with
// the line number.
class Config {
 public:
  static Config parse(std::istream& in, const std::string& source_name);
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key, double dflt) const;
  int get_int(const std::string& key, int dflt) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& dflt) const;
  std::vector<std::string> get_string_list(
      const std::string& key, const std::vector<std::string>& dflt) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

enum class AlgorithmKind {
  kGPUCB,
  kGPBUCB,
  kGPTS,
  kBIUCB,
  kBIBUCB,
  kBITS,
  kRandom,
};

std::string algorithm_name(AlgorithmKind kind);
AlgorithmKind parse_algorithm(const std::string& name);
bool algorithm_uses_gp(AlgorithmKind kind);
PolicyFamily algorithm_family(AlgorithmKind kind);

struct TraceRow {
  std::string algorithm;
  std::string route;
  int replicate = 0;
  int t = 0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
  double beta_t = 0.0;
  int path_len = 0;
  std::int64_t ms = 0;
};

struct AlgorithmSummary {
  std::string algorithm;
  int replicates = 0;
  int failed_replicates = 0;
  double mean_cum_regret = 0.0;
  double stderr_cum_regret = 0.0;
  double mean_wall_ms = 0.0;
  std::vector<std::string> errors;
};

struct BoundReportRow {
  std::string algorithm;
  double beta_horizon = 0.0;
  double gamma_hat = 0.0;
  double lambda_hat = 0.0;
  double c_k = 0.0;
  double finite_bound = 0.0;
  double infinite_bound = 0.0;
  bool schedule_valid = true;
  double mean_cum_regret = 0.0;
};

struct ExperimentResult {
  std::vector<TraceRow> rows;
  std::vector<AlgorithmSummary> summaries;
  std::vector<BoundReportRow> bounds;
  std::vector<std::string> warnings;
};

// Everything needed to run one experiment; build_experiment validates and
// resolves the config into this form.
struct ExperimentSpec {
  std::string env_kind;             // "synthetic" | "navigation"
  std::string network;              // path or grid:<r>x<c>:<seed>
  std::string route = "main";
  std::vector<AlgorithmKind> algorithms;
  int horizon = 100;
  int replicates = 5;
  std::uint64_t base_seed = 1;
  double xi = 1.0;
  double omega = 1.0;
  double beta_scale = 1.0;
  double p_vol = 0.0;
  bool truth_resample_per_replicate = true;
  bool include_wall_ms = false;
  bool bounds_report = false;
  // Synthetic pool.
  SyntheticEnv::Options synthetic;
  // Kernel settings.
  double sigma_f = 1.0;  // synthetic feature-kernel outputscale
  double sigma_g = 1.0;  // graph-kernel outputscale on top of normalization
  std::vector<double> feature_lengthscales{1.0, 1.0, 1.0};
  // Learner-side lengthscale override (the sweep moves the model's prior
  // while the environment truth keeps the configured lengthscales).
  std::optional<double> model_lengthscale;
  double prior_scale = 0.25;  // prior std = prior_scale * sigma_det
  double noise_scale = 0.1;   // noise std = noise_scale * sigma_det
  double nu_g = 2.0;
  double kappa_g = 1.0;
  // SVGP block.
  bool svgp_enabled = false;
  int svgp_m = 64;
  int svgp_g = 1;
  int svgp_b = 256;
  int svgp_threshold = 3000;
  double svgp_ngd_rate = 0.1;
  double svgp_inner_rate = 0.01;
  // Regularity constants for bound reports.
  TauConstants tau_constants;
  std::vector<double> lengthscale_sweep;
};

ExperimentSpec build_experiment(const Config& config);

// Runs every (algorithm, replicate) pair; `jobs` replicate workers run
// concurrently, results merge deterministically. A failing replicate is
// recorded in its algorithm summary and does not abort the others.
ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs = 1);

// CSV with header algorithm,route,replicate,t,inst_regret,cum_regret,beta_t,
// path_len,ms; 9 significant digits, '\n' newlines, rows ordered by
// (algorithm, replicate, t).
void emit_csv(const std::vector<TraceRow>& rows, std::ostream& out);
void emit_csv_file(const std::vector<TraceRow>& rows, const std::string& path);

std::string format_summary(const ExperimentResult& result);
std::string format_bounds(const std::vector<BoundReportRow>& bounds);

// One summary row per (lengthscale, algorithm) over the configured sweep.
struct SweepRow {
  double lengthscale = 0.0;
  std::string algorithm;
  double mean_cum_regret = 0.0;
  double stderr_cum_regret = 0.0;
};

std::vector<SweepRow> run_lengthscale_sweep(const ExperimentSpec& spec,
                                            int jobs = 1);
std::string format_sweep(const std::vector<SweepRow>& rows);

// Calculator-style reports for the CLI: regret bounds from provided
// constants (gamma computed greedily over the environment's pool when not
// supplied), the greedy information-gain curve, and the discretization-size
// table for t = 1..T.
std::string bounds_report_text(const Config& config);
std::string gamma_report_text(const Config& config);
std::string tau_table_text(const Config& config);

}  // namespace gpb

#endif  // GPBANDITS_EXPERIMENT_HPP_
