#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "parksim/random.hpp"
#include "parksim/road_graph.hpp"

namespace parksim {

/// A lot is a single line of stalls behind one entrance; stall 0 is nearest
/// the entrance.
struct LotSpec {
  std::string id;
  std::string node;  // entrance intersection
  int capacity = 1;
};

struct LotRates {
  double arrivals_per_hour = 0.0;
  double departures_per_hour = 0.0;
};

/// Hourly Poisson rates keyed by (lot, day of week 0=Mon..6, hour).
class LotRateTable {
 public:
  void set(const std::string& lot_id, int day, int hour, LotRates rates);
  const LotRates& at(const std::string& lot_id, int day, int hour) const;
  bool contains(const std::string& lot_id, int day, int hour) const;
  const std::map<std::tuple<std::string, int, int>, LotRates>& entries() const { return rates_; }

 private:
  std::map<std::tuple<std::string, int, int>, LotRates> rates_;
};

struct LotState {
  std::vector<std::uint8_t> occupied;  // per stall
  double clock_s = 0.0;

  static LotState with_occupancy(int capacity, int occupied_count);
  int occupied_count() const;
  int capacity() const { return static_cast<int>(occupied.size()); }
};

struct LotSimConfig {
  double t_prime_min_s = 60.0;  // park + pay inside a lot
  double t_wait_s = 30.0;       // waiting for a departing car
  double t_1_s = 0.54;          // driving past one stall
  double tick_s = 60.0;
  int reps = 20;
  std::uint64_t seed = 0;
  // The payment-queue term of the wait formula is read as a fraction of the
  // lot minimum. Setting this switches it to the on-street minimum instead.
  bool queue_uses_onstreet_minimum = false;
  double onstreet_t_min_s = 210.0;

  void validate() const;
};

struct TickResult {
  int arrivals = 0;     // N_a drawn
  int departures = 0;   // N_d drawn
  int departed = 0;     // min(N_d, occupied)
  int parked = 0;       // min(N_a, free after departures)
  int overflow = 0;     // arrivals that found the lot full
  std::vector<int> stalls_passed;  // S_k for each parked arrival, in order
};

/// Applies a tick with given counts: departures first (uniform over occupied
/// stalls), then each arrival takes the lowest free stall.
TickResult apply_tick(LotState& state, int n_arrivals, int n_departures, const LotSimConfig& cfg, Rng& rng);

/// Draws N_a ~ Poisson(lambda_a * tick/3600), N_d ~ Poisson(lambda_d * tick/3600)
/// and applies them.
TickResult sample_tick(LotState& state, double lambda_a, double lambda_d, const LotSimConfig& cfg, Rng& rng);

/// Seconds spent by the k-th arrival (k >= 1) of a tick:
///   t'_min + S_k t_1 + min(k, N_d)/2 t_wait + sum_{i=1}^{k-1} 2^-i t_queue.
double arrival_wait_time(int k, int n_departures, int stalls_passed, const LotSimConfig& cfg);

struct LotHourStats {
  std::optional<double> mean_s;  // absent when no arrival parked in any repetition
  double std_s = 0.0;
  long arrivals = 0;
  long overflow = 0;
};

/// cfg.reps repetitions of one hour of ticks starting from `initial_occupancy`
/// filled stalls; every parked arrival is one sample.
LotHourStats simulate_lot_hour(const LotSpec& spec, const LotRateTable& rates, int day, int hour,
                               const LotSimConfig& cfg, int initial_occupancy, Rng& rng);

struct OccupancyEstimate {
  int count = 0;
  bool clamped = false;
};

/// Cumulative entries minus departures over hours [0, hour), clamped to
/// [0, capacity]. Missing hours are a DataError listing the gaps.
OccupancyEstimate initial_occupancy(const std::map<int, double>& entries_by_hour,
                                    const std::map<int, double>& departures_by_hour, int hour, int capacity);

/// Same, using the mean hourly rates of `day` as the flow history.
OccupancyEstimate initial_occupancy_from_rates(const LotRateTable& rates, const LotSpec& lot, int day, int hour);

struct OffstreetEstimate {
  double total_s = 0.0;
  std::string lot_id;
  double drive_s = 0.0;
  double lot_s = 0.0;
  double walk_s = 0.0;
  double lot_std_s = 0.0;
};

/// Drive from the destination block to the lot with the smallest drive time,
/// park, walk back. Lot statistics use a stream keyed by (seed, lot, day, hour).
OffstreetEstimate estimate_offstreet_time(const RoadGraph& g, std::span<const LotSpec> lots, const LotRateTable& rates,
                                          EdgeIndex dest, int day, int hour, const LotSimConfig& cfg);

/// Lots file: JSON list of {id, node, capacity}.
std::vector<LotSpec> parse_lots(std::string_view json_text, const RoadGraph* g = nullptr);
std::string serialize_lots(std::span<const LotSpec> lots);

}  // namespace parksim
