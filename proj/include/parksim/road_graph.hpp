#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace parksim {

inline constexpr int kHoursPerDay = 24;

using NodeIndex = std::size_t;
using EdgeIndex = std::size_t;
using HourlyTimes = std::array<double, kHoursPerDay>;

struct Intersection {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
};

/// One directed side of a street segment. Drive times vary by hour of day;
/// walk time does not.
struct BlockFace {
  std::string id;
  std::string from_node;
  std::string to_node;
  double length_m = 0.0;
  int meter_count = 0;
  HourlyTimes drive_time_s{};
  double walk_time_s = 0.0;
};

/// Directed street graph. Immutable once constructed; the constructor enforces
/// every structural invariant and throws DataError otherwise:
///  - unique ids, every edge endpoint exists;
///  - positive finite lengths and times, 24 drive-time entries;
///  - weakly connected;
///  - every node that can be entered can also be left (drivers U-turn at
///    dead ends, which requires the reverse face to exist).
class RoadGraph {
 public:
  RoadGraph(std::vector<Intersection> nodes, std::vector<BlockFace> edges);

  const std::vector<Intersection>& nodes() const { return nodes_; }
  const std::vector<BlockFace>& edges() const { return edges_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const Intersection& node(NodeIndex n) const { return nodes_.at(n); }
  const BlockFace& edge(EdgeIndex e) const { return edges_.at(e); }

  NodeIndex node_index(std::string_view id) const;
  EdgeIndex edge_index(std::string_view id) const;
  bool has_edge(std::string_view id) const { return edge_lookup_.count(std::string(id)) > 0; }
  bool has_node(std::string_view id) const { return node_lookup_.count(std::string(id)) > 0; }

  NodeIndex tail(EdgeIndex e) const { return tails_.at(e); }
  NodeIndex head(EdgeIndex e) const { return heads_.at(e); }

  /// Edges leaving `n`, in ascending edge-index order.
  std::span<const EdgeIndex> outgoing(NodeIndex n) const { return outgoing_.at(n); }
  /// Edges touching `n` in either direction (walking ignores direction).
  std::span<const EdgeIndex> incident(NodeIndex n) const { return incident_.at(n); }

 private:
  std::vector<Intersection> nodes_;
  std::vector<BlockFace> edges_;
  std::unordered_map<std::string, NodeIndex> node_lookup_;
  std::unordered_map<std::string, EdgeIndex> edge_lookup_;
  std::vector<NodeIndex> tails_;
  std::vector<NodeIndex> heads_;
  std::vector<std::vector<EdgeIndex>> outgoing_;
  std::vector<std::vector<EdgeIndex>> incident_;
};

RoadGraph parse_graph(std::string_view json_text, std::string_view source = "<memory>");
RoadGraph load_graph(const std::filesystem::path& path);
std::string serialize_graph(const RoadGraph& g);

// Block-to-block queries measure from the middle of one block face to the
// middle of the other: half the first block, the interior blocks in full,
// half the last block. Identical blocks give 0.

/// Minimal drive seconds at `hour`, respecting edge direction. Throws NoPathError.
double shortest_drive_time(const RoadGraph& g, EdgeIndex src, EdgeIndex dst, int hour);
double shortest_drive_time(const RoadGraph& g, std::string_view src, std::string_view dst, int hour);

/// Minimal walk seconds, ignoring edge direction.
double shortest_walk_time(const RoadGraph& g, EdgeIndex src, EdgeIndex dst);
double shortest_walk_time(const RoadGraph& g, std::string_view src, std::string_view dst);

/// Minimal walking-network distance in meters.
double block_distance_m(const RoadGraph& g, EdgeIndex block, EdgeIndex dest);
double block_distance_m(const RoadGraph& g, std::string_view block, std::string_view dest);

/// Walk seconds from every block to `dest` (one Dijkstra instead of one per pair).
std::vector<double> walk_times_to_block(const RoadGraph& g, EdgeIndex dest);
/// Walking-network meters from every block to `dest`.
std::vector<double> distances_to_block_m(const RoadGraph& g, EdgeIndex dest);

/// Drive seconds from the middle of `block` to intersection `node`
/// (a lot entrance); no half-block term on the node side.
double drive_time_block_to_node(const RoadGraph& g, EdgeIndex block, NodeIndex node, int hour);
/// Walk seconds from intersection `node` to the middle of `block`.
double walk_time_node_to_block(const RoadGraph& g, NodeIndex node, EdgeIndex block);

/// Single-source node-to-node drive seconds at `hour`; unreachable nodes are +inf.
std::vector<double> drive_times_from_node(const RoadGraph& g, NodeIndex source, int hour);

}  // namespace parksim
