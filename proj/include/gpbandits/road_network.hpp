// Road networks, their line graphs and the deterministic energy model.
//
// A network is a directed graph with per-edge length, speed and grade. Paths
// live on the line graph: nodes are edges, arcs are legal connections, and
// energy costs sit on the nodes. The loader restricts routing to the largest
// strongly connected component of the line graph.

#ifndef GPBANDITS_ROAD_NETWORK_HPP_
#define GPBANDITS_ROAD_NETWORK_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gpbandits/kernels.hpp"

namespace gpb {

struct RoadEdge {
  std::string name;
  int from = -1;
  int to = -1;
  double length_m = 0.0;
  double speed_mps = 0.0;
  double grade_rad = 0.0;
};

struct RoadNetwork {
  std::vector<std::string> vertex_names;
  std::vector<RoadEdge> edges;
  std::vector<std::pair<int, int>> connections;  // (edge, edge), head==tail
  std::map<std::string, std::pair<int, int>> routes;  // name -> (src, goal)

  int edge_index(const std::string& name) const;  // -1 if unknown
};

// Vehicle and environmental parameters of the energy model. Defaults follow
// a mid-size electric vehicle.
struct EnergyParams {
  double mass_kg = 1830.0;
  double rolling_resistance = 0.01;
  double frontal_area_m2 = 2.6;
  double drag_coefficient = 0.35;
  double efficiency = 0.98;        // driving
  double recuperation = 0.96;      // braking
  double gravity = 9.82;
  double air_density = 1.2;
};

// Expected energy in Wh for driving one edge at constant speed:
//   (m g l sin a + m g C_r l cos a + 0.5 C_d A rho l v^2) / (3600 eta)
// with eta the driving efficiency when the bracket is non-negative; a
// negative bracket (net recuperation) is multiplied by the recuperation
// efficiency instead.
double deterministic_energy(const RoadEdge& edge, const EnergyParams& params);

Vector deterministic_energy_all(const RoadNetwork& network,
                                const EnergyParams& params);

struct LineGraph {
  int num_nodes = 0;  // == number of edges in the road network
  std::vector<WeightedConnection> arcs;
  std::vector<std::vector<int>> successors;
  std::vector<std::vector<int>> predecessors;
  double mean_edge_length = 0.0;
};

// Line graph with connection weights mean-length / length(e1). Throws on an
// empty edge set or a connection whose head/tail vertices disagree.
LineGraph build_line_graph(const RoadNetwork& network);

struct StandardizedContexts {
  Matrix contexts;                 // one row per edge: length, speed, grade
  std::vector<bool> zero_variance;  // per column: passed through unscaled
};

// Divides each raw feature column (length, speed limit, incline) by its
// population standard deviation; columns with zero variance pass through
// unscaled and are flagged.
StandardizedContexts standardize_contexts(const Matrix& raw_features);

Matrix raw_features(const RoadNetwork& network);

struct ComponentRestriction {
  RoadNetwork network;
  std::vector<std::string> dropped_edges;
};

// Restricts the network to the largest strongly connected component of its
// line graph; dropped edges are reported. Routes whose endpoints fall
// outside the component raise ParseError.
ComponentRestriction restrict_to_largest_scc(const RoadNetwork& network);

// Parses the line-oriented network format:
//   edge <id> <from-vertex> <to-vertex> <length_m> <speed_mps> <grade_rad>
//   conn <edge-id> <edge-id>
//   route <name> <source-edge> <goal-edge>
// Blank lines and lines starting with '#' are ignored. Errors carry the
// offending line number.
RoadNetwork parse_network(std::istream& in, const std::string& source_name);

struct LoadedNetwork {
  RoadNetwork network;
  std::vector<std::string> warnings;
};

// Loads and validates a network file, applying the component restriction.
// Also accepts the spec string "grid:<rows>x<cols>:<seed>" for the bundled
// synthetic grid generator.
LoadedNetwork load_network(const std::string& path_or_spec);

// Seeded grid network: rows x cols vertices, bidirectional edges with
// randomized lengths, speeds and elevation-consistent grades, all legal
// turns except immediate reversals, and a "main" route across the grid.
RoadNetwork generate_grid_network(int rows, int cols, std::uint64_t seed);

}  // namespace gpb

#endif  // GPBANDITS_ROAD_NETWORK_HPP_
