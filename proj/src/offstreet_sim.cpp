#include "parksim/offstreet_sim.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "json.hpp"
#include "parksim/errors.hpp"

namespace parksim {

void LotRateTable::set(const std::string& lot_id, int day, int hour, LotRates rates) {
  if (day < 0 || day > 6 || hour < 0 || hour > 23) throw DataError("rate slot out of range for lot '" + lot_id + "'");
  if (!std::isfinite(rates.arrivals_per_hour) || !std::isfinite(rates.departures_per_hour) ||
      rates.arrivals_per_hour < 0.0 || rates.departures_per_hour < 0.0)
    throw DataError("lot '" + lot_id + "': rates must be finite and nonnegative");
  rates_[{lot_id, day, hour}] = rates;
}

const LotRates& LotRateTable::at(const std::string& lot_id, int day, int hour) const {
  const auto it = rates_.find({lot_id, day, hour});
  if (it == rates_.end())
    throw DataError("no rates for lot '" + lot_id + "' day " + std::to_string(day) + " hour " + std::to_string(hour));
  return it->second;
}

bool LotRateTable::contains(const std::string& lot_id, int day, int hour) const {
  return rates_.count({lot_id, day, hour}) > 0;
}

LotState LotState::with_occupancy(int capacity, int occupied_count) {
  if (capacity < 1) throw DataError("lot capacity must be at least 1");
  if (occupied_count < 0 || occupied_count > capacity) throw DataError("initial occupancy outside [0, capacity]");
  LotState s;
  s.occupied.assign(static_cast<std::size_t>(capacity), 0);
  std::fill_n(s.occupied.begin(), occupied_count, std::uint8_t{1});
  return s;
}

int LotState::occupied_count() const {
  return static_cast<int>(std::count(occupied.begin(), occupied.end(), std::uint8_t{1}));
}

void LotSimConfig::validate() const {
  for (double v : {t_prime_min_s, t_wait_s, t_1_s, tick_s, onstreet_t_min_s})
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("lot simulation times must be positive");
  if (reps < 1) throw ConfigError("offstreet.reps must be positive");
  if (tick_s > 3600.0) throw ConfigError("offstreet.tick_s must not exceed one hour");
}

TickResult apply_tick(LotState& state, int n_arrivals, int n_departures, const LotSimConfig& cfg, Rng& rng) {
  TickResult r;
  r.arrivals = n_arrivals;
  r.departures = n_departures;

  std::vector<int> occupied;
  for (int i = 0; i < state.capacity(); ++i)
    if (state.occupied[static_cast<std::size_t>(i)]) occupied.push_back(i);
  r.departed = std::min<int>(n_departures, static_cast<int>(occupied.size()));
  // Partial Fisher-Yates: the first `departed` entries are a uniform sample.
  for (int i = 0; i < r.departed; ++i) {
    const auto remaining = static_cast<std::uint64_t>(occupied.size() - static_cast<std::size_t>(i));
    const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng() % remaining);
    std::swap(occupied[static_cast<std::size_t>(i)], occupied[j]);
    state.occupied[static_cast<std::size_t>(occupied[static_cast<std::size_t>(i)])] = 0;
  }

  int next_free = 0;
  for (int k = 0; k < n_arrivals; ++k) {
    while (next_free < state.capacity() && state.occupied[static_cast<std::size_t>(next_free)]) ++next_free;
    if (next_free == state.capacity()) {
      r.overflow = n_arrivals - k;
      break;
    }
    state.occupied[static_cast<std::size_t>(next_free)] = 1;
    r.stalls_passed.push_back(next_free);
    ++r.parked;
  }
  state.clock_s += cfg.tick_s;
  return r;
}

TickResult sample_tick(LotState& state, double lambda_a, double lambda_d, const LotSimConfig& cfg, Rng& rng) {
  if (lambda_a < 0.0 || lambda_d < 0.0 || !std::isfinite(lambda_a) || !std::isfinite(lambda_d))
    throw DataError("Poisson rates must be finite and nonnegative");
  const double scale = cfg.tick_s / 3600.0;
  int n_a = 0;
  int n_d = 0;
  if (lambda_a > 0.0) n_a = std::poisson_distribution<int>(lambda_a * scale)(rng);
  if (lambda_d > 0.0) n_d = std::poisson_distribution<int>(lambda_d * scale)(rng);
  return apply_tick(state, n_a, n_d, cfg, rng);
}

double arrival_wait_time(int k, int n_departures, int stalls_passed, const LotSimConfig& cfg) {
  if (k < 1) throw std::invalid_argument("arrival index starts at 1");
  const double queue_unit = cfg.queue_uses_onstreet_minimum ? cfg.onstreet_t_min_s : cfg.t_prime_min_s;
  const double queue_fraction = 1.0 - std::ldexp(1.0, -(k - 1));  // sum_{i=1}^{k-1} 2^-i
  return cfg.t_prime_min_s + stalls_passed * cfg.t_1_s + std::min(k, n_departures) / 2.0 * cfg.t_wait_s +
         queue_fraction * queue_unit;
}

LotHourStats simulate_lot_hour(const LotSpec& spec, const LotRateTable& rates, int day, int hour,
                               const LotSimConfig& cfg, int initial_occupancy, Rng& rng) {
  cfg.validate();
  const LotRates& r = rates.at(spec.id, day, hour);
  const int ticks = static_cast<int>(std::floor(3600.0 / cfg.tick_s));
  LotHourStats stats;
  double sum = 0.0;
  std::vector<double> samples;
  for (int rep = 0; rep < cfg.reps; ++rep) {
    Rng rep_rng(rng());
    LotState state = LotState::with_occupancy(spec.capacity, initial_occupancy);
    for (int t = 0; t < ticks; ++t) {
      const TickResult tick = sample_tick(state, r.arrivals_per_hour, r.departures_per_hour, cfg, rep_rng);
      for (int k = 1; k <= tick.parked; ++k) {
        const double wait = arrival_wait_time(k, tick.departures, tick.stalls_passed[static_cast<std::size_t>(k - 1)], cfg);
        samples.push_back(wait);
        sum += wait;
      }
      stats.arrivals += tick.parked;
      stats.overflow += tick.overflow;
    }
  }
  if (samples.empty()) return stats;
  const double mean = sum / static_cast<double>(samples.size());
  double sq = 0.0;
  for (double s : samples) sq += (s - mean) * (s - mean);
  stats.mean_s = mean;
  stats.std_s = samples.size() > 1 ? std::sqrt(sq / static_cast<double>(samples.size() - 1)) : 0.0;
  return stats;
}

OccupancyEstimate initial_occupancy(const std::map<int, double>& entries_by_hour,
                                    const std::map<int, double>& departures_by_hour, int hour, int capacity) {
  if (hour < 0 || hour > 23) throw DataError("hour out of range: " + std::to_string(hour));
  std::string gaps;
  double balance = 0.0;
  for (int h = 0; h < hour; ++h) {
    const auto e = entries_by_hour.find(h);
    const auto d = departures_by_hour.find(h);
    if (e == entries_by_hour.end()) gaps += " entries@" + std::to_string(h);
    if (d == departures_by_hour.end()) gaps += " departures@" + std::to_string(h);
    if (e != entries_by_hour.end() && d != departures_by_hour.end()) balance += e->second - d->second;
  }
  if (!gaps.empty()) throw DataError("lot flow history has gaps:" + gaps);
  OccupancyEstimate est;
  const double rounded = std::round(balance);
  est.count = static_cast<int>(std::clamp(rounded, 0.0, static_cast<double>(capacity)));
  est.clamped = rounded > capacity || rounded < 0.0;
  if (est.clamped)
    std::cerr << "warning: cumulative lot flow " << rounded << " clamped to [0, " << capacity << "]\n";
  return est;
}

OccupancyEstimate initial_occupancy_from_rates(const LotRateTable& rates, const LotSpec& lot, int day, int hour) {
  std::map<int, double> entries;
  std::map<int, double> departures;
  for (int h = 0; h < hour; ++h) {
    if (!rates.contains(lot.id, day, h)) continue;
    const auto& r = rates.at(lot.id, day, h);
    entries[h] = r.arrivals_per_hour;
    departures[h] = r.departures_per_hour;
  }
  return initial_occupancy(entries, departures, hour, lot.capacity);
}

OffstreetEstimate estimate_offstreet_time(const RoadGraph& g, std::span<const LotSpec> lots, const LotRateTable& rates,
                                          EdgeIndex dest, int day, int hour, const LotSimConfig& cfg) {
  if (lots.empty()) throw ConfigError("no lots configured");
  const auto from_dest = drive_times_from_node(g, g.head(dest), hour);
  const double half_dest = g.edge(dest).drive_time_s[hour] / 2.0;

  const LotSpec* best = nullptr;
  double best_drive = std::numeric_limits<double>::infinity();
  for (const auto& lot : lots) {
    const double drive = half_dest + from_dest[g.node_index(lot.node)];
    if (drive < best_drive || (drive == best_drive && best != nullptr && lot.id < best->id)) {
      best_drive = drive;
      best = &lot;
    }
  }
  if (best == nullptr || !std::isfinite(best_drive))
    throw NoPathError("no lot reachable by car from '" + g.edge(dest).id + "'");

  const auto occupancy = initial_occupancy_from_rates(rates, *best, day, hour);
  Rng rng = make_rng(cfg.seed, {stable_hash(best->id), static_cast<std::uint64_t>(day), static_cast<std::uint64_t>(hour)});
  const LotHourStats stats = simulate_lot_hour(*best, rates, day, hour, cfg, occupancy.count, rng);

  OffstreetEstimate est;
  est.lot_id = best->id;
  est.drive_s = best_drive;
  if (stats.mean_s) {
    est.lot_s = *stats.mean_s;
    est.lot_std_s = stats.std_s;
  } else {
    // No simulated arrivals: a lone driver takes the first free stall.
    est.lot_s = arrival_wait_time(1, 0, std::min(occupancy.count, best->capacity - 1), cfg);
  }
  est.walk_s = walk_time_node_to_block(g, g.node_index(best->node), dest);
  est.total_s = est.drive_s + est.lot_s + est.walk_s;
  return est;
}

std::vector<LotSpec> parse_lots(std::string_view json_text, const RoadGraph* g) {
  using nlohmann::json;
  std::vector<LotSpec> lots;
  try {
    const json doc = json::parse(json_text);
    if (!doc.is_array()) throw DataError("lots file must be a JSON list");
    for (const auto& l : doc) {
      LotSpec spec{l.at("id").get<std::string>(), l.at("node").get<std::string>(), l.at("capacity").get<int>()};
      if (spec.capacity < 1) throw DataError("lot '" + spec.id + "': capacity must be at least 1");
      if (g != nullptr && !g->has_node(spec.node))
        throw DataError("lot '" + spec.id + "' references unknown node '" + spec.node + "'");
      for (const auto& other : lots)
        if (other.id == spec.id) throw DataError("duplicate lot id '" + spec.id + "'");
      lots.push_back(std::move(spec));
    }
  } catch (const json::exception& err) {
    throw DataError(std::string("lots file: ") + err.what());
  }
  return lots;
}

std::string serialize_lots(std::span<const LotSpec> lots) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& l : lots) doc.push_back({{"id", l.id}, {"node", l.node}, {"capacity", l.capacity}});
  return doc.dump(1) + "\n";
}

}  // namespace parksim
