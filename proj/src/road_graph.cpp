#include "parksim/road_graph.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "json.hpp"
#include "parksim/csv.hpp"
#include "parksim/errors.hpp"

namespace parksim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

struct Seed {
  NodeIndex node;
  double dist;
};

// Multi-source Dijkstra over nodes. `weight(e)` is the cost of edge e; when
// `directed` is false edges are traversed both ways.
template <typename Weight>
std::vector<double> dijkstra(const RoadGraph& g, std::span<const Seed> seeds, bool directed, Weight weight) {
  std::vector<double> dist(g.node_count(), kInf);
  using Item = std::pair<double, NodeIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
  for (const Seed& s : seeds) {
    if (s.dist < dist[s.node]) {
      dist[s.node] = s.dist;
      frontier.emplace(s.dist, s.node);
    }
  }
  while (!frontier.empty()) {
    const auto [d, u] = frontier.top();
    frontier.pop();
    if (d > dist[u]) continue;
    const auto edges = directed ? g.outgoing(u) : g.incident(u);
    for (EdgeIndex e : edges) {
      const NodeIndex v = g.tail(e) == u ? g.head(e) : g.tail(e);
      const double nd = d + weight(e);
      if (nd < dist[v]) {
        dist[v] = nd;
        frontier.emplace(nd, v);
      }
    }
  }
  return dist;
}

// Undirected midpoint-to-midpoint cost from every block to `dest`.
template <typename Weight>
std::vector<double> undirected_to_block(const RoadGraph& g, EdgeIndex dest, Weight weight) {
  const double half_dest = weight(dest) / 2.0;
  const Seed seeds[] = {{g.tail(dest), 0.0}, {g.head(dest), 0.0}};
  const auto dist = dijkstra(g, seeds, false, weight);
  std::vector<double> out(g.edge_count(), kInf);
  for (EdgeIndex e = 0; e < g.edge_count(); ++e) {
    if (e == dest) {
      out[e] = 0.0;
      continue;
    }
    const double via = std::min(dist[g.tail(e)], dist[g.head(e)]);
    out[e] = weight(e) / 2.0 + via + half_dest;
  }
  return out;
}

template <typename Weight>
double undirected_between(const RoadGraph& g, EdgeIndex src, EdgeIndex dst, Weight weight) {
  if (src == dst) return 0.0;
  const Seed seeds[] = {{g.tail(src), 0.0}, {g.head(src), 0.0}};
  const auto dist = dijkstra(g, seeds, false, weight);
  const double via = std::min(dist[g.tail(dst)], dist[g.head(dst)]);
  if (!std::isfinite(via)) throw NoPathError("no walking route between blocks");
  return weight(src) / 2.0 + via + weight(dst) / 2.0;
}

void check_hour(int hour) {
  if (hour < 0 || hour >= kHoursPerDay) throw DataError("hour out of range: " + std::to_string(hour));
}

}  // namespace

RoadGraph::RoadGraph(std::vector<Intersection> nodes, std::vector<BlockFace> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  if (nodes_.empty()) throw DataError("graph has no nodes");
  if (edges_.empty()) throw DataError("graph has no edges");

  for (NodeIndex i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (!std::isfinite(n.lat) || !std::isfinite(n.lon)) throw DataError("node '" + n.id + "': non-finite coordinates");
    if (!node_lookup_.emplace(n.id, i).second) throw DataError("duplicate node id '" + n.id + "'");
  }

  outgoing_.resize(nodes_.size());
  incident_.resize(nodes_.size());
  tails_.reserve(edges_.size());
  heads_.reserve(edges_.size());
  std::vector<int> in_degree(nodes_.size(), 0);

  for (EdgeIndex e = 0; e < edges_.size(); ++e) {
    const auto& b = edges_[e];
    if (!edge_lookup_.emplace(b.id, e).second) throw DataError("duplicate edge id '" + b.id + "'");
    const auto from = node_lookup_.find(b.from_node);
    const auto to = node_lookup_.find(b.to_node);
    if (from == node_lookup_.end()) throw DataError("edge '" + b.id + "' references unknown node '" + b.from_node + "'");
    if (to == node_lookup_.end()) throw DataError("edge '" + b.id + "' references unknown node '" + b.to_node + "'");
    if (!positive_finite(b.length_m)) throw DataError("edge '" + b.id + "': length_m must be positive");
    if (!positive_finite(b.walk_time_s)) throw DataError("edge '" + b.id + "': walk_time_s must be positive");
    if (b.meter_count < 0) throw DataError("edge '" + b.id + "': negative meter_count");
    for (double t : b.drive_time_s)
      if (!positive_finite(t)) throw DataError("edge '" + b.id + "': drive_time_s entries must be positive");

    tails_.push_back(from->second);
    heads_.push_back(to->second);
    outgoing_[from->second].push_back(e);
    incident_[from->second].push_back(e);
    if (to->second != from->second) incident_[to->second].push_back(e);
    ++in_degree[to->second];
  }

  for (NodeIndex n = 0; n < nodes_.size(); ++n) {
    if (in_degree[n] > 0 && outgoing_[n].empty())
      throw DataError("node '" + nodes_[n].id + "' is a dead end with no reverse block to turn around on");
  }

  // Weak connectivity: undirected reachability from node 0 with unit weights.
  const Seed seed[] = {{0, 0.0}};
  const auto reach = dijkstra(*this, seed, false, [](EdgeIndex) { return 1.0; });
  for (NodeIndex n = 0; n < nodes_.size(); ++n) {
    if (!std::isfinite(reach[n])) throw DataError("graph is disconnected: node '" + nodes_[n].id + "' is unreachable");
  }
}

NodeIndex RoadGraph::node_index(std::string_view id) const {
  const auto it = node_lookup_.find(std::string(id));
  if (it == node_lookup_.end()) throw DataError("unknown node id '" + std::string(id) + "'");
  return it->second;
}

EdgeIndex RoadGraph::edge_index(std::string_view id) const {
  const auto it = edge_lookup_.find(std::string(id));
  if (it == edge_lookup_.end()) throw DataError("unknown block id '" + std::string(id) + "'");
  return it->second;
}

RoadGraph parse_graph(std::string_view json_text, std::string_view source) {
  using nlohmann::json;
  const std::string where(source);
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw DataError(where + ": " + err.what());
  }
  try {
    std::vector<Intersection> nodes;
    for (const auto& n : doc.at("nodes")) {
      nodes.push_back({n.at("id").get<std::string>(), n.at("lat").get<double>(), n.at("lon").get<double>()});
    }
    std::vector<BlockFace> edges;
    for (const auto& e : doc.at("edges")) {
      BlockFace b;
      b.id = e.at("id").get<std::string>();
      b.from_node = e.at("from").get<std::string>();
      b.to_node = e.at("to").get<std::string>();
      b.length_m = e.at("length_m").get<double>();
      b.meter_count = e.at("meter_count").get<int>();
      b.walk_time_s = e.at("walk_time_s").get<double>();
      const auto& drive = e.at("drive_time_s");
      if (!drive.is_array() || drive.size() != kHoursPerDay)
        throw DataError(where + ": edge '" + b.id + "': drive_time_s must have 24 entries");
      for (int h = 0; h < kHoursPerDay; ++h) b.drive_time_s[h] = drive[h].get<double>();
      edges.push_back(std::move(b));
    }
    return RoadGraph(std::move(nodes), std::move(edges));
  } catch (const json::exception& err) {
    throw DataError(where + ": " + err.what());
  } catch (const DataError& err) {
    throw DataError(where + ": " + err.what());
  }
}

RoadGraph load_graph(const std::filesystem::path& path) { return parse_graph(read_file(path), path.string()); }

std::string serialize_graph(const RoadGraph& g) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["nodes"] = ordered_json::array();
  for (const auto& n : g.nodes()) doc["nodes"].push_back({{"id", n.id}, {"lat", n.lat}, {"lon", n.lon}});
  doc["edges"] = ordered_json::array();
  for (const auto& e : g.edges()) {
    doc["edges"].push_back({{"id", e.id},
                            {"from", e.from_node},
                            {"to", e.to_node},
                            {"length_m", e.length_m},
                            {"meter_count", e.meter_count},
                            {"walk_time_s", e.walk_time_s},
                            {"drive_time_s", e.drive_time_s}});
  }
  return doc.dump(1) + "\n";
}

double shortest_drive_time(const RoadGraph& g, EdgeIndex src, EdgeIndex dst, int hour) {
  check_hour(hour);
  if (src == dst) return 0.0;
  const auto dist = drive_times_from_node(g, g.head(src), hour);
  const double via = dist[g.tail(dst)];
  if (!std::isfinite(via)) throw NoPathError("no driving route from '" + g.edge(src).id + "' to '" + g.edge(dst).id + "'");
  return g.edge(src).drive_time_s[hour] / 2.0 + via + g.edge(dst).drive_time_s[hour] / 2.0;
}

double shortest_drive_time(const RoadGraph& g, std::string_view src, std::string_view dst, int hour) {
  return shortest_drive_time(g, g.edge_index(src), g.edge_index(dst), hour);
}

double shortest_walk_time(const RoadGraph& g, EdgeIndex src, EdgeIndex dst) {
  return undirected_between(g, src, dst, [&](EdgeIndex e) { return g.edge(e).walk_time_s; });
}

double shortest_walk_time(const RoadGraph& g, std::string_view src, std::string_view dst) {
  return shortest_walk_time(g, g.edge_index(src), g.edge_index(dst));
}

double block_distance_m(const RoadGraph& g, EdgeIndex block, EdgeIndex dest) {
  return undirected_between(g, block, dest, [&](EdgeIndex e) { return g.edge(e).length_m; });
}

double block_distance_m(const RoadGraph& g, std::string_view block, std::string_view dest) {
  return block_distance_m(g, g.edge_index(block), g.edge_index(dest));
}

std::vector<double> walk_times_to_block(const RoadGraph& g, EdgeIndex dest) {
  return undirected_to_block(g, dest, [&](EdgeIndex e) { return g.edge(e).walk_time_s; });
}

std::vector<double> distances_to_block_m(const RoadGraph& g, EdgeIndex dest) {
  return undirected_to_block(g, dest, [&](EdgeIndex e) { return g.edge(e).length_m; });
}

std::vector<double> drive_times_from_node(const RoadGraph& g, NodeIndex source, int hour) {
  check_hour(hour);
  const Seed seed[] = {{source, 0.0}};
  return dijkstra(g, seed, true, [&](EdgeIndex e) { return g.edge(e).drive_time_s[hour]; });
}

double drive_time_block_to_node(const RoadGraph& g, EdgeIndex block, NodeIndex node, int hour) {
  const auto dist = drive_times_from_node(g, g.head(block), hour);
  if (!std::isfinite(dist.at(node)))
    throw NoPathError("no driving route from '" + g.edge(block).id + "' to node '" + g.node(node).id + "'");
  return g.edge(block).drive_time_s[hour] / 2.0 + dist[node];
}

double walk_time_node_to_block(const RoadGraph& g, NodeIndex node, EdgeIndex block) {
  const Seed seed[] = {{node, 0.0}};
  const auto dist = dijkstra(g, seed, false, [&](EdgeIndex e) { return g.edge(e).walk_time_s; });
  const double via = std::min(dist[g.tail(block)], dist[g.head(block)]);
  if (!std::isfinite(via)) throw NoPathError("no walking route to block '" + g.edge(block).id + "'");
  return via + g.edge(block).walk_time_s / 2.0;
}

}  // namespace parksim
