// gpbandit: experiment runner and calculators over the gpbandits C API.
//
// Subcommands: run, bounds, gamma, tau, validate, sweep-lengthscale.
// Exit codes: 0 success, 1 usage, 2 config/parse error, 3 runtime error.

#include <cstdio>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "gpbandits/gpbandits_c.h"

namespace {

int g_log_level = 2;  // 0 error, 1 warn, 2 info, 3 debug

void log_info(const std::string& message) {
  if (g_log_level >= 2) std::fprintf(stderr, "info: %s\n", message.c_str());
}

int fail(gpb_status status) {
  std::fprintf(stderr, "error: %s\n", gpb_last_error());
  return static_cast<int>(status);
}

struct ConfigHandle {
  gpb_config* ptr = nullptr;
  ~ConfigHandle() { gpb_config_free(ptr); }
};

struct ResultHandle {
  gpb_result* ptr = nullptr;
  ~ResultHandle() { gpb_result_free(ptr); }
};

int load_config(const std::string& path, bool has_seed, std::uint64_t seed,
                ConfigHandle& config) {
  const gpb_status status = gpb_config_load(path.c_str(), &config.ptr);
  if (status != GPB_OK) return fail(status);
  if (has_seed) {
    gpb_config_set(config.ptr, "env.seed", std::to_string(seed).c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Combinatorial GP semi-bandit experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool has_seed = false;
  int jobs = 1;
  std::string log_level = "info";

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config) {
      cmd->add_option("CONFIG", config_path, "Config file (positional)");
      cmd->add_option("--config", config_path, "Config file");
    }
    cmd->add_option("--out", out_path, "Output CSV path");
    cmd->add_option("--seed", seed, "Base seed override")
        ->each([&](const std::string&) { has_seed = true; });
    cmd->add_option("--jobs", jobs, "Concurrent replicate workers");
    cmd->add_option("--log-level", log_level, "error|warn|info|debug");
  };

  CLI::App* run = app.add_subcommand("run", "Run the configured experiment");
  add_common(run, true);
  CLI::App* bounds = app.add_subcommand("bounds", "Regret-bound calculators");
  add_common(bounds, true);
  CLI::App* gamma = app.add_subcommand("gamma", "Greedy information-gain curve");
  add_common(gamma, true);
  CLI::App* tau = app.add_subcommand("tau", "Discretization-size table");
  add_common(tau, true);
  CLI::App* sweep =
      app.add_subcommand("sweep-lengthscale", "Lengthscale sweep summary");
  add_common(sweep, true);

  std::string network_path;
  CLI::App* validate = app.add_subcommand("validate", "Validate a network file");
  validate->add_option("network", network_path, "Network file or grid spec")
      ->required();
  validate->add_option("--log-level", log_level, "error|warn|info|debug");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (log_level == "error") g_log_level = 0;
  else if (log_level == "warn") g_log_level = 1;
  else if (log_level == "info") g_log_level = 2;
  else if (log_level == "debug") g_log_level = 3;
  else {
    std::fprintf(stderr, "error: unknown log level '%s'\n", log_level.c_str());
    return 1;
  }

  if (validate->parsed()) {
    gpb_network* network = nullptr;
    gpb_status status = gpb_network_load(network_path.c_str(), &network);
    if (status != GPB_OK) return fail(status);
    ResultHandle report;
    status = gpb_network_validate(network, &report.ptr);
    gpb_network_free(network);
    if (status != GPB_OK) return fail(status);
    std::fputs(gpb_result_text(report.ptr), stdout);
    return 0;
  }

  if (config_path.empty()) {
    std::fprintf(stderr, "error: a config file is required (positional or --config)\n");
    return 1;
  }

  ConfigHandle config;
  if (const int code = load_config(config_path, has_seed, seed, config)) {
    return code;
  }

  ResultHandle result;
  gpb_status status = GPB_OK;
  if (run->parsed()) {
    const char* csv = out_path.empty() ? nullptr : out_path.c_str();
    status = gpb_run_experiment(config.ptr, csv, jobs, &result.ptr);
    if (status == GPB_OK && csv != nullptr) {
      log_info("wrote trace CSV to " + out_path);
    }
  } else if (bounds->parsed()) {
    status = gpb_bounds_report(config.ptr, &result.ptr);
  } else if (gamma->parsed()) {
    status = gpb_gamma_report(config.ptr, &result.ptr);
  } else if (tau->parsed()) {
    status = gpb_tau_table(config.ptr, &result.ptr);
  } else if (sweep->parsed()) {
    const char* csv = out_path.empty() ? nullptr : out_path.c_str();
    status = gpb_sweep_lengthscale(config.ptr, csv, jobs, &result.ptr);
  }
  if (status != GPB_OK) return fail(status);
  std::fputs(gpb_result_text(result.ptr), stdout);
  return 0;
}
