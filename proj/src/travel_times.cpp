#include "parksim/travel_times.hpp"

#include <cmath>

#include "json.hpp"
#include "parksim/csv.hpp"
#include "parksim/errors.hpp"

namespace parksim {
namespace {

const char* mode_name(TravelMode m) { return m == TravelMode::drive ? "drive" : "walk"; }

TravelMode parse_mode(const std::string& s) {
  if (s == "drive") return TravelMode::drive;
  if (s == "walk") return TravelMode::walk;
  throw DataError("unknown travel mode '" + s + "'");
}

DirectionsRequest request_for(const RoadGraph& g, EdgeIndex e, TravelMode mode, int hour) {
  const auto& from = g.node(g.tail(e));
  const auto& to = g.node(g.head(e));
  return {from.lat, from.lon, to.lat, to.lon, mode, hour};
}

}  // namespace

CachedDirections::CachedDirections(std::filesystem::path cache_path, DirectionsProvider* remote)
    : path_(std::move(cache_path)), remote_(remote) {
  if (!std::filesystem::exists(path_)) return;
  using nlohmann::json;
  try {
    const json doc = json::parse(read_file(path_));
    for (const auto& entry : doc.at("entries")) {
      DirectionsRequest r;
      r.origin_lat = entry.at("origin").at(0).get<double>();
      r.origin_lon = entry.at("origin").at(1).get<double>();
      r.dest_lat = entry.at("destination").at(0).get<double>();
      r.dest_lon = entry.at("destination").at(1).get<double>();
      r.mode = parse_mode(entry.at("mode").get<std::string>());
      r.hour = entry.at("hour").get<int>();
      const double seconds = entry.at("seconds").get<double>();
      if (!std::isfinite(seconds) || seconds <= 0.0) throw DataError("non-positive cached travel time");
      entries_[r] = seconds;
    }
  } catch (const json::exception& err) {
    throw DataError(path_.string() + ": " + err.what());
  }
}

std::optional<double> CachedDirections::cached(const DirectionsRequest& request) const {
  const auto it = entries_.find(request);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void CachedDirections::store(const DirectionsRequest& request, double seconds) {
  if (!std::isfinite(seconds) || seconds <= 0.0) throw DataError("directions service returned a non-positive time");
  entries_[request] = seconds;
  dirty_ = true;
}

double CachedDirections::travel_seconds(const DirectionsRequest& request) {
  if (auto hit = cached(request)) return *hit;
  std::optional<double> answer;
  std::string failure = "no remote provider configured";
  if (remote_ != nullptr) {
    try {
      answer = remote_->travel_seconds(request);
      if (!answer) failure = "remote provider returned no answer";
    } catch (const std::exception& err) {
      failure = std::string("remote provider failed: ") + err.what();
    }
  }
  if (!answer) {
    throw DataError("travel time missing from cache " + path_.string() + " (" + mode_name(request.mode) + ", hour " +
                    std::to_string(request.hour) + "): " + failure);
  }
  store(request, *answer);
  return *answer;
}

void CachedDirections::flush() {
  if (!dirty_) return;
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["entries"] = ordered_json::array();
  for (const auto& [r, seconds] : entries_) {
    doc["entries"].push_back({{"origin", {r.origin_lat, r.origin_lon}},
                              {"destination", {r.dest_lat, r.dest_lon}},
                              {"mode", mode_name(r.mode)},
                              {"hour", r.hour},
                              {"seconds", seconds}});
  }
  write_file_atomic(path_, doc.dump(1) + "\n");
  dirty_ = false;
}

TravelTimeTable::TravelTimeTable(const RoadGraph& g, std::vector<HourlyTimes> drive, std::vector<double> walk)
    : drive_(std::move(drive)), walk_(std::move(walk)) {
  if (drive_.size() != g.edge_count() || walk_.size() != g.edge_count())
    throw DataError("travel-time table does not cover every block");
  for (EdgeIndex e = 0; e < walk_.size(); ++e) {
    if (!std::isfinite(walk_[e]) || walk_[e] <= 0.0) throw DataError("non-positive walk time for '" + g.edge(e).id + "'");
    for (double d : drive_[e])
      if (!std::isfinite(d) || d <= 0.0) throw DataError("non-positive drive time for '" + g.edge(e).id + "'");
  }
}

TravelTimeTable TravelTimeTable::from_graph(const RoadGraph& g) {
  std::vector<HourlyTimes> drive;
  std::vector<double> walk;
  for (const auto& e : g.edges()) {
    drive.push_back(e.drive_time_s);
    walk.push_back(e.walk_time_s);
  }
  return TravelTimeTable(g, std::move(drive), std::move(walk));
}

TravelTimeTable fetch_travel_times(const RoadGraph& g, CachedDirections& directions) {
  std::vector<HourlyTimes> drive(g.edge_count());
  std::vector<double> walk(g.edge_count());
  for (EdgeIndex e = 0; e < g.edge_count(); ++e) {
    for (int h = 0; h < kHoursPerDay; ++h) drive[e][h] = directions.travel_seconds(request_for(g, e, TravelMode::drive, h));
    walk[e] = directions.travel_seconds(request_for(g, e, TravelMode::walk, 0));
  }
  return TravelTimeTable(g, std::move(drive), std::move(walk));
}

RoadGraph apply_travel_times(const RoadGraph& g, const TravelTimeTable& table) {
  if (table.size() != g.edge_count()) throw DataError("travel-time table does not match graph");
  std::vector<BlockFace> edges = g.edges();
  for (EdgeIndex e = 0; e < edges.size(); ++e) {
    for (int h = 0; h < kHoursPerDay; ++h) edges[e].drive_time_s[h] = table.drive_s(e, h);
    edges[e].walk_time_s = table.walk_s(e);
  }
  return RoadGraph(g.nodes(), std::move(edges));
}

}  // namespace parksim
