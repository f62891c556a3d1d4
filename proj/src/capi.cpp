#include "gpbandits/gpbandits_c.h"

#include <exception>
#include <fstream>
#include <string>

#include "gpbandits/experiment.hpp"
#include "gpbandits/road_network.hpp"

namespace {

thread_local std::string g_last_error;

gpb_status set_error(gpb_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
gpb_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return GPB_OK;
  } catch (const gpb::ParseError& e) {
    return set_error(GPB_ERR_PARSE, e.what());
  } catch (const std::invalid_argument& e) {
    return set_error(GPB_ERR_PARSE, e.what());
  } catch (const std::exception& e) {
    return set_error(GPB_ERR_RUNTIME, e.what());
  }
}

}  // namespace

struct gpb_config {
  gpb::Config config;
};

struct gpb_network {
  gpb::LoadedNetwork loaded;
};

struct gpb_result {
  std::string text;
};

extern "C" {

const char* gpb_version(void) { return "0.1.0"; }

const char* gpb_last_error(void) { return g_last_error.c_str(); }

gpb_status gpb_config_create(gpb_config** out) {
  if (out == nullptr) return set_error(GPB_ERR_USAGE, "null out-parameter");
  return guarded([&] { *out = new gpb_config(); });
}

gpb_status gpb_config_load(const char* path, gpb_config** out) {
  if (path == nullptr || out == nullptr) {
    return set_error(GPB_ERR_USAGE, "null argument");
  }
  return guarded([&] {
    auto* config = new gpb_config{gpb::Config::load(path)};
    *out = config;
  });
}

gpb_status gpb_config_set(gpb_config* config, const char* key,
                          const char* value) {
  if (config == nullptr || key == nullptr || value == nullptr) {
    return set_error(GPB_ERR_USAGE, "null argument");
  }
  return guarded([&] { config->config.set(key, value); });
}

void gpb_config_free(gpb_config* config) { delete config; }

gpb_status gpb_network_load(const char* path_or_spec, gpb_network** out) {
  if (path_or_spec == nullptr || out == nullptr) {
    return set_error(GPB_ERR_USAGE, "null argument");
  }
  return guarded([&] {
    auto* network = new gpb_network{gpb::load_network(path_or_spec)};
    *out = network;
  });
}

int gpb_network_edge_count(const gpb_network* network) {
  return network == nullptr
             ? -1
             : static_cast<int>(network->loaded.network.edges.size());
}

int gpb_network_connection_count(const gpb_network* network) {
  return network == nullptr
             ? -1
             : static_cast<int>(network->loaded.network.connections.size());
}

gpb_status gpb_network_validate(const gpb_network* network, gpb_result** out) {
  if (network == nullptr || out == nullptr) {
    return set_error(GPB_ERR_USAGE, "null argument");
  }
  return guarded([&] {
    std::string text;
    const auto& net = network->loaded.network;
    text += "edges: " + std::to_string(net.edges.size()) + "\n";
    text += "connections: " + std::to_string(net.connections.size()) + "\n";
    text += "routes: " + std::to_string(net.routes.size()) + "\n";
    for (const auto& [name, endpoints] : net.routes) {
      text += "route " + name + ": " + net.edges[endpoints.first].name +
              " -> " + net.edges[endpoints.second].name + "\n";
    }
    for (const std::string& warning : network->loaded.warnings) {
      text += "warning: " + warning + "\n";
    }
    text += "ok\n";
    *out = new gpb_result{std::move(text)};
  });
}

void gpb_network_free(gpb_network* network) { delete network; }

gpb_status gpb_run_experiment(const gpb_config* config, const char* csv_path,
                              int jobs, gpb_result** out) {
  if (config == nullptr || out == nullptr) {
    return set_error(GPB_ERR_USAGE, "null argument");
  }
  return guarded([&] {
    const gpb::ExperimentSpec spec = gpb::build_experiment(config->config);
    const gpb::ExperimentResult result =
        gpb::run_experiment(spec, jobs < 1 ? 1 : jobs);
    if (csv_path != nullptr) gpb::emit_csv_file(result.rows, csv_path);
    *out = new gpb_result{gpb::format_summary(result)};
  });
}

gpb_status gpb_bounds_report(const gpb_config* config, gpb_result** out) {
  if (config == nullptr || out == nullptr) {
    return set_error(GPB_ERR_USAGE, "null argument");
  }
  return guarded(
      [&] { *out = new gpb_result{gpb::bounds_report_text(config->config)}; });
}

gpb_status gpb_gamma_report(const gpb_config* config, gpb_result** out) {
  if (config == nullptr || out == nullptr) {
    return set_error(GPB_ERR_USAGE, "null argument");
  }
  return guarded(
      [&] { *out = new gpb_result{gpb::gamma_report_text(config->config)}; });
}

gpb_status gpb_tau_table(const gpb_config* config, gpb_result** out) {
  if (config == nullptr || out == nullptr) {
    return set_error(GPB_ERR_USAGE, "null argument");
  }
  return guarded(
      [&] { *out = new gpb_result{gpb::tau_table_text(config->config)}; });
}

gpb_status gpb_sweep_lengthscale(const gpb_config* config, const char* csv_path,
                                 int jobs, gpb_result** out) {
  if (config == nullptr || out == nullptr) {
    return set_error(GPB_ERR_USAGE, "null argument");
  }
  return guarded([&] {
    const gpb::ExperimentSpec spec = gpb::build_experiment(config->config);
    const auto rows = gpb::run_lengthscale_sweep(spec, jobs < 1 ? 1 : jobs);
    const std::string text = gpb::format_sweep(rows);
    if (csv_path != nullptr) {
      std::ofstream file(csv_path, std::ios::binary);
      if (!file) {
        throw std::runtime_error(std::string("cannot write CSV to '") +
                                 csv_path + "'");
      }
      file << text;
    }
    *out = new gpb_result{text};
  });
}

const char* gpb_result_text(const gpb_result* result) {
  return result == nullptr ? "" : result->text.c_str();
}

void gpb_result_free(gpb_result* result) { delete result; }

}  // extern "C"
