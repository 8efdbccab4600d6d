#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "parksim/ingest.hpp"
#include "parksim/offstreet_sim.hpp"
#include "parksim/onstreet_sim.hpp"
#include "parksim/synth.hpp"
#include "parksim/training.hpp"

namespace parksim {

/// Everything a run needs. Relative paths are resolved against the directory
/// of the config file.
struct RunConfig {
  std::filesystem::path graph;
  std::filesystem::path payments;
  std::filesystem::path surveys;
  std::filesystem::path lots;
  std::filesystem::path lot_events;
  std::optional<std::filesystem::path> directions_cache;
  std::filesystem::path out_dir = "out";

  std::vector<int> hours;  // default 8-18
  std::string date;        // YYYY-MM-DD; sets the payment features and the day of week
  std::uint64_t seed = 0;
  std::optional<int> rate_weeks;  // default: every whole week in the lot data

  TrainConfig train;
  OnstreetConfig onstreet;
  PolicyWeights policy;
  LotSimConfig offstreet;
  SmoothingConfig smoothing;
  SynthConfig synth;

  /// Propagates `seed` into every stage configuration.
  void set_seed(std::uint64_t s);
  void validate() const;
};

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// "8-18", "7,9,12-14" -> sorted unique hours. ConfigError outside 0-23.
std::vector<int> parse_hours(std::string_view spec);

/// Per (block, hour) comparison of the two parking options.
struct TimeEstimate {
  std::string block_id;
  int hour = 0;
  double mean_onstreet_s = 0.0;
  double mean_offstreet_s = 0.0;
  double delta_s = 0.0;  // offstreet - onstreet; negative means the lot is faster
};

// Fixed file names inside out_dir.
namespace files {
inline constexpr const char* kGraph = "graph.json";
inline constexpr const char* kSamples = "samples.csv";
inline constexpr const char* kRates = "rates.csv";
inline constexpr const char* kIngestReport = "ingest_report.json";
inline constexpr const char* kModel = "model.json";
inline constexpr const char* kBaseline = "baseline.json";
inline constexpr const char* kTrainingReport = "training_report.json";
inline constexpr const char* kEvalReport = "eval_report.json";
inline constexpr const char* kProbabilities = "probabilities.csv";
inline constexpr const char* kOnstreet = "onstreet.csv";
inline constexpr const char* kOffstreet = "offstreet.csv";
inline constexpr const char* kDiff = "diff.csv";
inline constexpr const char* kMaps = "maps";
}  // namespace files

// Each stage reads its inputs (original files or earlier stage outputs in
// out_dir) and writes its outputs atomically. Errors carry the stage name.
void run_synth(const RunConfig& cfg);
void run_ingest(const RunConfig& cfg);
void run_train(const RunConfig& cfg);
void run_eval(const RunConfig& cfg);
void run_predict(const RunConfig& cfg);
void run_sim_on(const RunConfig& cfg);
void run_sim_off(const RunConfig& cfg);
void run_diff(const RunConfig& cfg);
void run_pipeline(const RunConfig& cfg);

/// Joins on-street and off-street results on (block, hour).
std::vector<TimeEstimate> join_estimates(std::string_view onstreet_csv, std::string_view offstreet_csv);

/// FeatureCollection with one LineString per block; `value_property` names the
/// property a viewer should color by.
std::string geojson_map(const RoadGraph& g, std::span<const TimeEstimate> rows, int hour, std::string_view map_name,
                        std::string_view value_property);

/// Starter config pointing at a synthetic bundle in `dir`.
std::string default_config_json(const RunConfig& base);

}  // namespace parksim
