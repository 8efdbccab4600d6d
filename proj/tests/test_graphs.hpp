#pragma once

#include <string>
#include <vector>

#include "parksim/random.hpp"
#include "parksim/road_graph.hpp"

namespace testing {

struct EdgeSpec {
  int from;
  int to;
  double length_m;
  double walk_s;
  double drive_s;  // same every hour unless per_hour is set
  int meters = 1;
};

inline std::string node_name(int i) { return "n" + std::to_string(i); }

inline parksim::RoadGraph make_graph(int n_nodes, const std::vector<EdgeSpec>& specs) {
  std::vector<parksim::Intersection> nodes;
  for (int i = 0; i < n_nodes; ++i) nodes.push_back({node_name(i), 49.0 + 0.001 * i, -123.0 - 0.001 * (i % 3)});
  std::vector<parksim::BlockFace> edges;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto& s = specs[k];
    parksim::BlockFace b;
    b.id = "e" + std::to_string(k);
    b.from_node = node_name(s.from);
    b.to_node = node_name(s.to);
    b.length_m = s.length_m;
    b.meter_count = s.meters;
    b.walk_time_s = s.walk_s;
    b.drive_time_s.fill(s.drive_s);
    edges.push_back(b);
  }
  return parksim::RoadGraph(std::move(nodes), std::move(edges));
}

/// Random strongly connected graph: a directed cycle through every node plus
/// extra random edges. Weights are whole or half units so every sum of them is
/// exact in double precision.
inline std::vector<EdgeSpec> random_specs(parksim::Rng& rng, int n_nodes, int extra_edges) {
  std::vector<EdgeSpec> specs;
  const auto weight = [&] { return 0.5 * static_cast<double>(1 + rng() % 40); };
  for (int i = 0; i < n_nodes; ++i) specs.push_back({i, (i + 1) % n_nodes, weight(), weight(), weight()});
  for (int k = 0; k < extra_edges; ++k) {
    const int a = static_cast<int>(rng() % n_nodes);
    const int b = static_cast<int>(rng() % n_nodes);
    specs.push_back({a, b, weight(), weight(), weight()});
  }
  return specs;
}

}  // namespace testing
