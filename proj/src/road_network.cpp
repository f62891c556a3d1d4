#include "gpbandits/road_network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

namespace gpb {

int RoadNetwork::edge_index(const std::string& name) const {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

double deterministic_energy(const RoadEdge& edge, const EnergyParams& params) {
  const double mechanical =
      params.mass_kg * params.gravity * edge.length_m * std::sin(edge.grade_rad) +
      params.mass_kg * params.gravity * params.rolling_resistance * edge.length_m *
          std::cos(edge.grade_rad) +
      0.5 * params.drag_coefficient * params.frontal_area_m2 * params.air_density *
          edge.length_m * edge.speed_mps * edge.speed_mps;
  if (mechanical >= 0.0) {
    return mechanical / (3600.0 * params.efficiency);
  }
  // Recovered energy is discounted by the recuperation efficiency.
  return mechanical * params.recuperation / 3600.0;
}

Vector deterministic_energy_all(const RoadNetwork& network,
                                const EnergyParams& params) {
  Vector out(static_cast<Eigen::Index>(network.edges.size()));
  for (std::size_t i = 0; i < network.edges.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = deterministic_energy(network.edges[i], params);
  }
  return out;
}

LineGraph build_line_graph(const RoadNetwork& network) {
  if (network.edges.empty()) {
    throw std::invalid_argument("build_line_graph: network has no edges");
  }
  LineGraph graph;
  graph.num_nodes = static_cast<int>(network.edges.size());
  double total_length = 0.0;
  for (const RoadEdge& e : network.edges) total_length += e.length_m;
  graph.mean_edge_length = total_length / static_cast<double>(network.edges.size());

  graph.successors.assign(network.edges.size(), {});
  graph.predecessors.assign(network.edges.size(), {});
  for (const auto& [e1, e2] : network.connections) {
    if (e1 < 0 || e2 < 0 || e1 >= graph.num_nodes || e2 >= graph.num_nodes) {
      throw std::invalid_argument("build_line_graph: connection references unknown edge");
    }
    if (network.edges[static_cast<std::size_t>(e1)].to !=
        network.edges[static_cast<std::size_t>(e2)].from) {
      std::ostringstream msg;
      msg << "build_line_graph: illegal connection " << network.edges[e1].name
          << " -> " << network.edges[e2].name << " (head/tail mismatch)";
      throw std::invalid_argument(msg.str());
    }
    WeightedConnection arc;
    arc.from = e1;
    arc.to = e2;
    arc.weight = graph.mean_edge_length /
                 network.edges[static_cast<std::size_t>(e1)].length_m;
    graph.arcs.push_back(arc);
    graph.successors[static_cast<std::size_t>(e1)].push_back(e2);
    graph.predecessors[static_cast<std::size_t>(e2)].push_back(e1);
  }
  for (auto& s : graph.successors) std::sort(s.begin(), s.end());
  for (auto& p : graph.predecessors) std::sort(p.begin(), p.end());
  return graph;
}

StandardizedContexts standardize_contexts(const Matrix& raw) {
  if (raw.rows() < 2) {
    throw std::invalid_argument("standardize_contexts: need >= 2 edges");
  }
  StandardizedContexts out;
  out.contexts = raw;
  out.zero_variance.assign(static_cast<std::size_t>(raw.cols()), false);
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    const double mean = raw.col(c).mean();
    const double var =
        (raw.col(c).array() - mean).square().sum() / static_cast<double>(raw.rows());
    if (var > 0.0) {
      out.contexts.col(c) /= std::sqrt(var);
    } else {
      out.zero_variance[static_cast<std::size_t>(c)] = true;
    }
  }
  return out;
}

Matrix raw_features(const RoadNetwork& network) {
  Matrix raw(static_cast<Eigen::Index>(network.edges.size()), 3);
  for (std::size_t i = 0; i < network.edges.size(); ++i) {
    raw(static_cast<Eigen::Index>(i), 0) = network.edges[i].length_m;
    raw(static_cast<Eigen::Index>(i), 1) = network.edges[i].speed_mps;
    raw(static_cast<Eigen::Index>(i), 2) = network.edges[i].grade_rad;
  }
  return raw;
}

namespace {

// Iterative Tarjan SCC over the line graph (nodes = edges).
std::vector<int> line_graph_scc(int n, const std::vector<std::vector<int>>& succ) {
  std::vector<int> index(n, -1), lowlink(n, 0), component(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  int next_index = 0, next_component = 0;

  struct Frame {
    int node;
    std::size_t child;
  };
  for (int start = 0; start < n; ++start) {
    if (index[start] != -1) continue;
    std::vector<Frame> frames{{start, 0}};
    index[start] = lowlink[start] = next_index++;
    stack.push_back(start);
    on_stack[start] = true;
    while (!frames.empty()) {
      Frame& frame = frames.back();
      const auto& out = succ[static_cast<std::size_t>(frame.node)];
      if (frame.child < out.size()) {
        const int w = out[frame.child++];
        if (index[w] == -1) {
          index[w] = lowlink[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.push_back({w, 0});
        } else if (on_stack[w]) {
          lowlink[frame.node] = std::min(lowlink[frame.node], index[w]);
        }
      } else {
        if (lowlink[frame.node] == index[frame.node]) {
          while (true) {
            const int w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
            component[w] = next_component;
            if (w == frame.node) break;
          }
          ++next_component;
        }
        const int node = frame.node;
        frames.pop_back();
        if (!frames.empty()) {
          lowlink[frames.back().node] =
              std::min(lowlink[frames.back().node], lowlink[node]);
        }
      }
    }
  }
  return component;
}

}  // namespace

ComponentRestriction restrict_to_largest_scc(const RoadNetwork& network) {
  const LineGraph graph = build_line_graph(network);
  const std::vector<int> component =
      line_graph_scc(graph.num_nodes, graph.successors);

  std::map<int, int> sizes;
  for (int c : component) ++sizes[c];
  int best = -1, best_size = -1;
  for (const auto& [c, size] : sizes) {
    // Prefer the component containing the lowest edge id on ties.
    if (size > best_size) {
      best = c;
      best_size = size;
    }
  }
  ComponentRestriction out;
  std::vector<int> remap(component.size(), -1);
  for (std::size_t i = 0; i < network.edges.size(); ++i) {
    if (component[i] == best) {
      remap[i] = static_cast<int>(out.network.edges.size());
      out.network.edges.push_back(network.edges[i]);
    } else {
      out.dropped_edges.push_back(network.edges[i].name);
    }
  }
  out.network.vertex_names = network.vertex_names;
  for (const auto& [e1, e2] : network.connections) {
    if (remap[static_cast<std::size_t>(e1)] >= 0 &&
        remap[static_cast<std::size_t>(e2)] >= 0) {
      out.network.connections.emplace_back(remap[static_cast<std::size_t>(e1)],
                                           remap[static_cast<std::size_t>(e2)]);
    }
  }
  for (const auto& [name, endpoints] : network.routes) {
    const int src = remap[static_cast<std::size_t>(endpoints.first)];
    const int goal = remap[static_cast<std::size_t>(endpoints.second)];
    if (src < 0 || goal < 0) {
      std::ostringstream msg;
      msg << "route '" << name
          << "' has an endpoint outside the largest strongly connected component";
      throw ParseError(msg.str());
    }
    out.network.routes[name] = {src, goal};
  }
  return out;
}

RoadNetwork parse_network(std::istream& in, const std::string& source_name) {
  RoadNetwork network;
  std::map<std::string, int> vertex_ids;
  std::map<std::string, int> edge_ids;
  auto intern_vertex = [&](const std::string& name) {
    auto it = vertex_ids.find(name);
    if (it != vertex_ids.end()) return it->second;
    const int id = static_cast<int>(network.vertex_names.size());
    vertex_ids.emplace(name, id);
    network.vertex_names.push_back(name);
    return id;
  };

  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    std::ostringstream msg;
    msg << source_name << ":" << line_no << ": " << what;
    throw ParseError(msg.str());
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::string kind;
    if (!(tokens >> kind) || kind[0] == '#') continue;
    if (kind == "edge") {
      RoadEdge edge;
      std::string from, to;
      if (!(tokens >> edge.name >> from >> to >> edge.length_m >>
            edge.speed_mps >> edge.grade_rad)) {
        fail("malformed edge record (expected: edge <id> <from> <to> <length_m> <speed_mps> <grade_rad>)");
      }
      if (edge_ids.count(edge.name)) fail("duplicate edge id '" + edge.name + "'");
      if (!(edge.length_m > 0.0)) fail("edge length must be > 0");
      if (!(edge.speed_mps > 0.0)) fail("edge speed must be > 0");
      if (!std::isfinite(edge.grade_rad)) fail("edge grade must be finite");
      edge.from = intern_vertex(from);
      edge.to = intern_vertex(to);
      edge_ids.emplace(edge.name, static_cast<int>(network.edges.size()));
      network.edges.push_back(edge);
    } else if (kind == "conn") {
      std::string a, b;
      if (!(tokens >> a >> b)) fail("malformed conn record (expected: conn <edge-id> <edge-id>)");
      const auto ita = edge_ids.find(a);
      if (ita == edge_ids.end()) fail("conn references undefined edge '" + a + "'");
      const auto itb = edge_ids.find(b);
      if (itb == edge_ids.end()) fail("conn references undefined edge '" + b + "'");
      const RoadEdge& e1 = network.edges[static_cast<std::size_t>(ita->second)];
      const RoadEdge& e2 = network.edges[static_cast<std::size_t>(itb->second)];
      if (e1.to != e2.from) {
        fail("illegal connection " + a + " -> " + b + " (head of the first edge is not the tail of the second)");
      }
      network.connections.emplace_back(ita->second, itb->second);
    } else if (kind == "route") {
      std::string name, src, goal;
      if (!(tokens >> name >> src >> goal)) fail("malformed route record (expected: route <name> <source-edge> <goal-edge>)");
      const auto its = edge_ids.find(src);
      if (its == edge_ids.end()) fail("route references undefined edge '" + src + "'");
      const auto itg = edge_ids.find(goal);
      if (itg == edge_ids.end()) fail("route references undefined edge '" + goal + "'");
      network.routes[name] = {its->second, itg->second};
    } else {
      fail("unknown record type '" + kind + "'");
    }
  }
  if (network.edges.empty()) {
    std::ostringstream msg;
    msg << source_name << ": no edges defined";
    throw ParseError(msg.str());
  }
  return network;
}

LoadedNetwork load_network(const std::string& path_or_spec) {
  RoadNetwork raw;
  if (path_or_spec.rfind("grid:", 0) == 0) {
    int rows = 0, cols = 0;
    unsigned long long seed = 0;
    char x = 0;
    std::istringstream spec(path_or_spec.substr(5));
    std::string dims, seed_str;
    if (!std::getline(spec, dims, ':') || !std::getline(spec, seed_str)) {
      throw ParseError("grid spec must look like grid:<rows>x<cols>:<seed>");
    }
    std::istringstream dim_in(dims);
    if (!(dim_in >> rows >> x >> cols) || x != 'x' || rows < 2 || cols < 2) {
      throw ParseError("grid spec must look like grid:<rows>x<cols>:<seed>");
    }
    std::istringstream seed_in(seed_str);
    if (!(seed_in >> seed)) {
      throw ParseError("grid spec must look like grid:<rows>x<cols>:<seed>");
    }
    raw = generate_grid_network(rows, cols, seed);
  } else {
    std::ifstream in(path_or_spec);
    if (!in) throw ParseError("cannot open network file '" + path_or_spec + "'");
    raw = parse_network(in, path_or_spec);
  }

  LoadedNetwork out;
  ComponentRestriction restricted = restrict_to_largest_scc(raw);
  out.network = std::move(restricted.network);
  if (!restricted.dropped_edges.empty()) {
    std::ostringstream warning;
    warning << "dropped " << restricted.dropped_edges.size()
            << " edge(s) outside the largest strongly connected component:";
    for (const std::string& name : restricted.dropped_edges) warning << ' ' << name;
    out.warnings.push_back(warning.str());
  }
  return out;
}

RoadNetwork generate_grid_network(int rows, int cols, std::uint64_t seed) {
  if (rows < 2 || cols < 2) {
    throw std::invalid_argument("generate_grid_network: grid must be >= 2x2");
  }
  Rng rng(mix64(seed ^ 0x9d867b35ULL));
  RoadNetwork network;
  auto vertex_name = [cols](int r, int c) {
    return "v" + std::to_string(r * cols + c);
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      network.vertex_names.push_back(vertex_name(r, c));
    }
  }
  // Smooth random elevation per vertex keeps grades loop-consistent; the
  // range keeps slopes within ~2.5%, so recuperation edges stay mild and the
  // rectified indices remain informative.
  std::vector<double> elevation(static_cast<std::size_t>(rows * cols));
  for (double& h : elevation) h = rng.uniform(0.0, 1.5);

  auto add_edge_pair = [&](int r1, int c1, int r2, int c2) {
    const int u = r1 * cols + c1;
    const int v = r2 * cols + c2;
    const double length = rng.uniform(60.0, 140.0);
    const double speed = rng.uniform(8.0, 14.0);
    const double slope = (elevation[static_cast<std::size_t>(v)] -
                          elevation[static_cast<std::size_t>(u)]) /
                         length;
    RoadEdge forward;
    forward.name = "e" + std::to_string(u) + "_" + std::to_string(v);
    forward.from = u;
    forward.to = v;
    forward.length_m = length;
    forward.speed_mps = speed;
    forward.grade_rad = std::atan(slope);
    RoadEdge backward = forward;
    backward.name = "e" + std::to_string(v) + "_" + std::to_string(u);
    backward.from = v;
    backward.to = u;
    backward.grade_rad = std::atan(-slope);
    network.edges.push_back(forward);
    network.edges.push_back(backward);
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) add_edge_pair(r, c, r, c + 1);
      if (r + 1 < rows) add_edge_pair(r, c, r + 1, c);
    }
  }
  // All legal turns except immediate reversals.
  for (std::size_t i = 0; i < network.edges.size(); ++i) {
    for (std::size_t j = 0; j < network.edges.size(); ++j) {
      if (i == j) continue;
      const RoadEdge& e1 = network.edges[i];
      const RoadEdge& e2 = network.edges[j];
      if (e1.to != e2.from) continue;
      if (e1.from == e2.to) continue;  // u-turn
      network.connections.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  // Route across the grid: leave the top-left corner, enter the bottom-right.
  const int src = network.edge_index("e0_1");
  const int goal = network.edge_index(
      "e" + std::to_string(rows * cols - 2) + "_" + std::to_string(rows * cols - 1));
  if (src < 0 || goal < 0) {
    throw std::logic_error("generate_grid_network: route endpoints missing");
  }
  network.routes["main"] = {src, goal};
  return network;
}

}  // namespace gpb
