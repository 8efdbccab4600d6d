#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "parksim/features.hpp"
#include "parksim/ingest.hpp"
#include "parksim/offstreet_sim.hpp"
#include "parksim/road_graph.hpp"

namespace parksim {

struct SynthLot {
  int row = 0;
  int col = 0;
  int capacity = 300;
};

/// Parameters of a synthetic grid city whose files follow the real input
/// schemas. Demand and congestion peak at the grid center and fall off
/// toward the edges.
struct SynthConfig {
  int rows = 10;
  int cols = 10;
  double block_length_m = 100.0;
  double length_jitter = 0.2;        // +/- fraction of block length
  double meter_spacing_m = 12.0;     // curb length per meter
  double unmetered_fraction = 0.1;
  double observed_fraction = 0.6;    // share of paid sessions present in payments.csv
  double unpaid_fraction = 0.1;      // sessions with no payment at all
  std::string start_date = "2024-01-01";
  int onstreet_days = 7;
  int survey_sweeps_per_block = 10;
  double missing_timestamp_fraction = 0.17;
  double free_flow_speed_mps = 9.0;
  double walk_speed_mps = 1.3;
  double peak_slowdown = 2.5;        // drive-time multiplier at the center at peak
  double central_load = 1.3;         // offered load per meter at the center
  double edge_load = 0.2;            // offered load per meter far from the center
  int lot_weeks = 12;
  double lot_peak_arrivals_per_hour = 50.0;
  double promo_fraction = 0.3;       // lot entries paying a flat rate until promo_hour
  int promo_hour = 18;
  std::vector<SynthLot> lots;        // empty: one lot at the center node
  std::uint64_t seed = 1;

  void validate() const;
};

/// When each block was completely full, recorded from the generator's own
/// occupancy state.
struct GroundTruth {
  struct Block {
    int meter_count = 0;
    std::vector<std::pair<Timestamp, Timestamp>> full_intervals;  // [start, end), sorted
    std::vector<std::pair<Timestamp, int>> occupancy_changes;      // (time, occupied count after)
  };
  std::map<std::string, Block> blocks;

  bool is_full(const std::string& block_id, Timestamp t) const;
  int occupied_at(const std::string& block_id, Timestamp t) const;
};

struct SynthBundle {
  RoadGraph graph;
  std::vector<PaymentRecord> payments;
  std::vector<SurveyRecord> surveys;
  std::vector<LotSpec> lots;
  std::vector<LotEventRecord> lot_events;
  GroundTruth truth;
  std::size_t generated_sessions = 0;  // paid sessions before observation sampling
};

SynthBundle synth_generate(const SynthConfig& cfg);

/// Writes graph.json, payments.csv, surveys.csv, lots.json, lot_events.csv and
/// ground_truth.json into `dir`.
void write_bundle(const SynthBundle& bundle, const std::filesystem::path& dir);

std::string serialize_ground_truth(const GroundTruth& truth);

}  // namespace parksim
