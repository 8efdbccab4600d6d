#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parksim/features.hpp"
#include "parksim/offstreet_sim.hpp"
#include "parksim/road_graph.hpp"
#include "parksim/time.hpp"

namespace parksim {

// ---------------------------------------------------------------------------
// Records

/// One meter checked by an inspector. Records with no timestamp are kept at
/// parse time and dropped by combine_surveys.
struct SurveyRecord {
  std::string meter_id;
  std::string block_id;
  std::optional<Timestamp> timestamp;
  int free_spots = 0;

  bool free() const { return free_spots > 0; }
};

/// Hourly lot activity: entries in the hour and the paid duration of each.
struct LotEventRecord {
  std::string lot_id;
  Timestamp hour;
  int entries = 0;
  std::vector<double> paid_durations_s;
};

/// Consecutive hourly counts; NaN marks an hour with no data.
struct HourlySeries {
  Timestamp start;
  std::vector<double> counts;

  Timestamp time_at(std::size_t i) const { return start + Seconds{static_cast<std::int64_t>(i) * kSecondsPerHour}; }
  double total() const;
};

struct SmoothingConfig {
  std::vector<int> peak_hours{18};
  double sigma_h = 3.5;
  int span_h = 12;

  void validate() const;
};

struct CombinedSurveys {
  std::vector<OccupancySample> samples;
  std::size_t discarded = 0;  // meter checks without a timestamp
};

// ---------------------------------------------------------------------------
// File formats

std::vector<PaymentRecord> parse_payments(std::string_view csv_text, std::string source = "<payments>");
std::vector<PaymentRecord> read_payments(const std::filesystem::path& path);
std::string format_payments(std::span<const PaymentRecord> payments);

std::vector<SurveyRecord> parse_surveys(std::string_view csv_text, std::string source = "<surveys>");
std::vector<SurveyRecord> read_surveys(const std::filesystem::path& path);
std::string format_surveys(std::span<const SurveyRecord> surveys);

/// `block_id,time_iso8601,available`
std::vector<OccupancySample> read_samples(const std::filesystem::path& path);
std::string format_samples(std::span<const OccupancySample> samples);

/// `lot_id,hour_iso8601,entries,paid_durations_s`, durations separated by ';'.
std::vector<LotEventRecord> parse_lot_events(std::string_view csv_text, std::string source = "<lot_events>");
std::vector<LotEventRecord> read_lot_events(const std::filesystem::path& path);
std::string format_lot_events(std::span<const LotEventRecord> events);

/// `lot_id,day_of_week,hour,lambda_a_per_hour,lambda_d_per_hour`
LotRateTable parse_rates(std::string_view csv_text, std::string source = "<rates>");
LotRateTable read_rates(const std::filesystem::path& path);
std::string format_rates(const LotRateTable& rates);

std::vector<LotSpec> read_lots(const std::filesystem::path& path, const RoadGraph* g = nullptr);

// ---------------------------------------------------------------------------
// Transformations

/// Drops untimed checks, then merges checks of one block within the same
/// clock half-hour into a single sample at the window midpoint; the block is
/// available if any checked meter was free. Output is sorted by (block, time).
/// When `g` is given, unknown blocks are a DataError.
CombinedSurveys combine_surveys(std::span<const SurveyRecord> records, const RoadGraph* g = nullptr);

/// Each paid duration becomes one departure at the hour containing
/// entry hour + duration. Negative durations are a DataError.
std::map<std::string, std::map<Timestamp, double>> derive_departures(std::span<const LotEventRecord> events);

/// Normalized left-half Gaussian weights; entry j-1 is the share sent j hours
/// before the peak.
std::vector<double> left_half_gaussian_weights(const SmoothingConfig& cfg);

/// Moves the excess of every configured peak hour (count minus the median of
/// the three hours on either side) back over the preceding span_h hours.
/// Throws DataError when a peak has fewer than span_h hours before it.
HourlySeries smooth_departures(const HourlySeries& series, const SmoothingConfig& cfg);

/// Dense entry series per lot, from the day of the earliest record; hours with
/// no record are NaN.
std::map<std::string, HourlySeries> entry_series(std::span<const LotEventRecord> events);

/// Places sparse departures onto `range`'s hours (zero where absent); departures
/// falling outside the range are dropped.
HourlySeries departures_on(const std::map<Timestamp, double>& departures, const HourlySeries& range);

/// Mean count per (day of week, hour) over the first `weeks` whole weeks.
/// Missing hours or short series are a DataError listing the gaps.
LotRateTable estimate_rates(const std::map<std::string, HourlySeries>& entries,
                            const std::map<std::string, HourlySeries>& departures, int weeks);

}  // namespace parksim
