#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "parksim/road_graph.hpp"

namespace parksim {

enum class TravelMode { drive, walk };

/// Intersection-to-intersection query against a directions service.
/// Walking is time-invariant, so walk requests are always issued for hour 0.
struct DirectionsRequest {
  double origin_lat = 0.0;
  double origin_lon = 0.0;
  double dest_lat = 0.0;
  double dest_lon = 0.0;
  TravelMode mode = TravelMode::drive;
  int hour = 0;

  auto key() const { return std::tie(origin_lat, origin_lon, dest_lat, dest_lon, mode, hour); }
  friend bool operator<(const DirectionsRequest& a, const DirectionsRequest& b) { return a.key() < b.key(); }
};

/// A remote directions backend. Returns nullopt (or throws) when the service
/// cannot answer; callers never substitute a made-up value.
class DirectionsProvider {
 public:
  virtual ~DirectionsProvider() = default;
  virtual std::optional<double> travel_seconds(const DirectionsRequest& request) = 0;
};

/// Local response cache in front of an optional remote provider. Cached
/// answers win; misses go to the remote provider and are recorded; a miss with
/// no usable remote answer is a DataError.
class CachedDirections {
 public:
  explicit CachedDirections(std::filesystem::path cache_path, DirectionsProvider* remote = nullptr);

  double travel_seconds(const DirectionsRequest& request);
  std::optional<double> cached(const DirectionsRequest& request) const;
  void store(const DirectionsRequest& request, double seconds);

  /// Writes the cache file (atomically) if anything new was stored.
  void flush();
  std::size_t size() const { return entries_.size(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  DirectionsProvider* remote_;
  std::map<DirectionsRequest, double> entries_;
  bool dirty_ = false;
};

/// Per-block drive seconds by hour and constant walk seconds, indexed by edge.
class TravelTimeTable {
 public:
  TravelTimeTable(const RoadGraph& g, std::vector<HourlyTimes> drive, std::vector<double> walk);

  static TravelTimeTable from_graph(const RoadGraph& g);

  double drive_s(EdgeIndex e, int hour) const { return drive_.at(e).at(hour); }
  double walk_s(EdgeIndex e) const { return walk_.at(e); }
  std::size_t size() const { return walk_.size(); }

 private:
  std::vector<HourlyTimes> drive_;
  std::vector<double> walk_;
};

/// Queries every block's end-to-end intersection times (24 drive hours plus one walk).
TravelTimeTable fetch_travel_times(const RoadGraph& g, CachedDirections& directions);

/// Returns a copy of `g` with drive/walk times replaced by `table`.
RoadGraph apply_travel_times(const RoadGraph& g, const TravelTimeTable& table);

}  // namespace parksim
