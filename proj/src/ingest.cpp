#include "parksim/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "parksim/csv.hpp"
#include "parksim/errors.hpp"

namespace parksim {
namespace {

const std::vector<std::string> kPaymentsHeader{"block_id", "start_iso8601", "duration_s"};
const std::vector<std::string> kSurveysHeader{"meter_id", "block_id", "timestamp_iso8601", "free_spots"};
const std::vector<std::string> kSamplesHeader{"block_id", "time_iso8601", "available"};
const std::vector<std::string> kLotEventsHeader{"lot_id", "hour_iso8601", "entries", "paid_durations_s"};
const std::vector<std::string> kRatesHeader{"lot_id", "day_of_week", "hour", "lambda_a_per_hour", "lambda_d_per_hour"};

std::string where(const CsvTable& t, std::size_t row) { return t.source + " row " + std::to_string(row + 1); }

template <typename F>
auto with_context(const CsvTable& t, std::size_t row, F&& f) {
  try {
    return f();
  } catch (const DataError& err) {
    throw DataError(where(t, row) + ": " + err.what());
  }
}

std::string header_line(const std::vector<std::string>& header) {
  std::string line;
  for (const auto& h : header) line += (line.empty() ? "" : ",") + h;
  return line + "\n";
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double HourlySeries::total() const {
  double sum = 0.0;
  for (double c : counts)
    if (!std::isnan(c)) sum += c;
  return sum;
}

void SmoothingConfig::validate() const {
  if (!(sigma_h > 0.0) || !std::isfinite(sigma_h)) throw ConfigError("smoothing.sigma_h must be positive");
  if (span_h < 1) throw ConfigError("smoothing.span_h must be at least 1");
  for (int p : peak_hours)
    if (p < 0 || p > 23) throw ConfigError("smoothing.peak_hours must lie in 0-23");
}

// ---------------------------------------------------------------------------

std::vector<PaymentRecord> parse_payments(std::string_view text, std::string source) {
  const CsvTable t = parse_csv(text, kPaymentsHeader, std::move(source));
  std::vector<PaymentRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out.push_back(with_context(t, i, [&] {
      const auto& r = t.rows[i];
      PaymentRecord p{r[0], parse_timestamp(r[1]), parse_double(r[2], "duration_s")};
      if (!(p.duration_s > 0.0) || !std::isfinite(p.duration_s)) throw DataError("duration_s must be positive");
      return p;
    }));
  }
  return out;
}

std::vector<PaymentRecord> read_payments(const std::filesystem::path& path) {
  return parse_payments(read_file(path), path.string());
}

std::string format_payments(std::span<const PaymentRecord> payments) {
  std::string out = header_line(kPaymentsHeader);
  for (const auto& p : payments)
    out += p.block_id + "," + format_timestamp(p.start) + "," + format_number(p.duration_s) + "\n";
  return out;
}

std::vector<SurveyRecord> parse_surveys(std::string_view text, std::string source) {
  const CsvTable t = parse_csv(text, kSurveysHeader, std::move(source));
  std::vector<SurveyRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out.push_back(with_context(t, i, [&] {
      const auto& r = t.rows[i];
      SurveyRecord s{r[0], r[1], parse_optional_timestamp(r[2]), static_cast<int>(parse_int(r[3], "free_spots"))};
      if (s.free_spots < 0) throw DataError("free_spots must be nonnegative");
      return s;
    }));
  }
  return out;
}

std::vector<SurveyRecord> read_surveys(const std::filesystem::path& path) {
  return parse_surveys(read_file(path), path.string());
}

std::string format_surveys(std::span<const SurveyRecord> surveys) {
  std::string out = header_line(kSurveysHeader);
  for (const auto& s : surveys) {
    out += s.meter_id + "," + s.block_id + "," + (s.timestamp ? format_timestamp(*s.timestamp) : std::string()) + "," +
           std::to_string(s.free_spots) + "\n";
  }
  return out;
}

std::vector<OccupancySample> read_samples(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path, kSamplesHeader);
  std::vector<OccupancySample> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out.push_back(with_context(t, i, [&] {
      const auto& r = t.rows[i];
      const auto label = parse_int(r[2], "available");
      if (label != 0 && label != 1) throw DataError("available must be 0 or 1");
      return OccupancySample{r[0], parse_timestamp(r[1]), label == 1};
    }));
  }
  return out;
}

std::string format_samples(std::span<const OccupancySample> samples) {
  std::string out = header_line(kSamplesHeader);
  for (const auto& s : samples) out += s.block_id + "," + format_timestamp(s.time) + "," + (s.available ? "1" : "0") + "\n";
  return out;
}

std::vector<LotEventRecord> parse_lot_events(std::string_view text, std::string source) {
  const CsvTable t = parse_csv(text, kLotEventsHeader, std::move(source));
  std::vector<LotEventRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out.push_back(with_context(t, i, [&] {
      const auto& r = t.rows[i];
      LotEventRecord e{r[0], parse_timestamp(r[1]), static_cast<int>(parse_int(r[2], "entries")), {}};
      if (e.entries < 0) throw DataError("entries must be nonnegative");
      if (e.hour != floor_to_hour(e.hour)) throw DataError("hour must be aligned to the hour");
      if (!r[3].empty())
        for (const auto& d : split(r[3], ';')) e.paid_durations_s.push_back(parse_double(d, "paid_durations_s"));
      if (static_cast<int>(e.paid_durations_s.size()) > e.entries)
        throw DataError("more paid durations than entries");
      return e;
    }));
  }
  return out;
}

std::vector<LotEventRecord> read_lot_events(const std::filesystem::path& path) {
  return parse_lot_events(read_file(path), path.string());
}

std::string format_lot_events(std::span<const LotEventRecord> events) {
  std::string out = header_line(kLotEventsHeader);
  for (const auto& e : events) {
    std::string durations;
    for (double d : e.paid_durations_s) durations += (durations.empty() ? "" : ";") + format_number(d);
    out += e.lot_id + "," + format_timestamp(e.hour) + "," + std::to_string(e.entries) + "," + durations + "\n";
  }
  return out;
}

LotRateTable parse_rates(std::string_view text, std::string source) {
  const CsvTable t = parse_csv(text, kRatesHeader, std::move(source));
  LotRateTable rates;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    with_context(t, i, [&] {
      const auto& r = t.rows[i];
      rates.set(r[0], static_cast<int>(parse_int(r[1], "day_of_week")), static_cast<int>(parse_int(r[2], "hour")),
                {parse_double(r[3], "lambda_a_per_hour"), parse_double(r[4], "lambda_d_per_hour")});
      return 0;
    });
  }
  return rates;
}

LotRateTable read_rates(const std::filesystem::path& path) { return parse_rates(read_file(path), path.string()); }

std::string format_rates(const LotRateTable& rates) {
  std::string out = header_line(kRatesHeader);
  for (const auto& [key, r] : rates.entries()) {
    const auto& [lot, day, hour] = key;
    out += lot + "," + std::to_string(day) + "," + std::to_string(hour) + "," + format_number(r.arrivals_per_hour) + "," +
           format_number(r.departures_per_hour) + "\n";
  }
  return out;
}

std::vector<LotSpec> read_lots(const std::filesystem::path& path, const RoadGraph* g) {
  try {
    return parse_lots(read_file(path), g);
  } catch (const DataError& err) {
    throw DataError(path.string() + ": " + err.what());
  }
}

// ---------------------------------------------------------------------------

CombinedSurveys combine_surveys(std::span<const SurveyRecord> records, const RoadGraph* g) {
  constexpr std::int64_t kWindow = 30 * 60;
  CombinedSurveys out;
  std::map<std::pair<std::string, std::int64_t>, bool> windows;
  for (const auto& r : records) {
    if (g != nullptr && !g->has_edge(r.block_id)) throw DataError("survey references unknown block '" + r.block_id + "'");
    if (!r.timestamp) {
      ++out.discarded;
      continue;
    }
    const std::int64_t t = r.timestamp->time_since_epoch().count();
    const std::int64_t window = t - ((t % kWindow) + kWindow) % kWindow;
    auto [it, inserted] = windows.try_emplace({r.block_id, window}, false);
    it->second = it->second || r.free();
  }
  out.samples.reserve(windows.size());
  for (const auto& [key, available] : windows)
    out.samples.push_back({key.first, Timestamp{Seconds{key.second + kWindow / 2}}, available});
  return out;
}

std::map<std::string, std::map<Timestamp, double>> derive_departures(std::span<const LotEventRecord> events) {
  std::map<std::string, std::map<Timestamp, double>> out;
  for (const auto& e : events) {
    auto& lot = out[e.lot_id];
    for (double d : e.paid_durations_s) {
      if (d < 0.0 || !std::isfinite(d)) throw DataError("lot '" + e.lot_id + "': negative paid duration");
      const Timestamp leave = e.hour + Seconds{static_cast<std::int64_t>(std::floor(d))};
      lot[floor_to_hour(leave)] += 1.0;
    }
  }
  return out;
}

std::vector<double> left_half_gaussian_weights(const SmoothingConfig& cfg) {
  cfg.validate();
  std::vector<double> w(static_cast<std::size_t>(cfg.span_h));
  double sum = 0.0;
  for (int j = 1; j <= cfg.span_h; ++j) {
    const double z = j / cfg.sigma_h;
    sum += (w[static_cast<std::size_t>(j - 1)] = std::exp(-0.5 * z * z));
  }
  for (double& v : w) v /= sum;
  return w;
}

HourlySeries smooth_departures(const HourlySeries& series, const SmoothingConfig& cfg) {
  const auto weights = left_half_gaussian_weights(cfg);
  HourlySeries out = series;
  auto& c = out.counts;
  const auto n = static_cast<std::ptrdiff_t>(c.size());
  for (double v : c)
    if (std::isnan(v) || v < 0.0) throw DataError("departure series must be complete and nonnegative");

  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const int hod = hour_of_day(out.time_at(static_cast<std::size_t>(i)));
    if (std::find(cfg.peak_hours.begin(), cfg.peak_hours.end(), hod) == cfg.peak_hours.end()) continue;
    if (i < cfg.span_h)
      throw DataError("departure series too short: peak at " + format_timestamp(out.time_at(static_cast<std::size_t>(i))) +
                      " has fewer than " + std::to_string(cfg.span_h) + " hours before it");
    std::vector<double> neighbors;
    for (std::ptrdiff_t k = i - 3; k <= i + 3; ++k)
      if (k != i && k >= 0 && k < n) neighbors.push_back(c[static_cast<std::size_t>(k)]);
    const double excess = std::max(0.0, c[static_cast<std::size_t>(i)] - median(neighbors));
    if (excess == 0.0) continue;
    c[static_cast<std::size_t>(i)] -= excess;
    for (int j = 1; j <= cfg.span_h; ++j) c[static_cast<std::size_t>(i - j)] += excess * weights[static_cast<std::size_t>(j - 1)];
  }
  return out;
}

std::map<std::string, HourlySeries> entry_series(std::span<const LotEventRecord> events) {
  std::map<std::string, std::map<Timestamp, double>> by_lot;
  for (const auto& e : events) {
    auto [it, inserted] = by_lot[e.lot_id].try_emplace(e.hour, e.entries);
    if (!inserted) throw DataError("duplicate lot event for '" + e.lot_id + "' at " + format_timestamp(e.hour));
  }
  std::map<std::string, HourlySeries> out;
  for (const auto& [lot, hours] : by_lot) {
    HourlySeries s;
    s.start = floor_to_day(hours.begin()->first);
    const auto span = (hours.rbegin()->first - s.start).count() / kSecondsPerHour + 1;
    s.counts.assign(static_cast<std::size_t>(span), std::numeric_limits<double>::quiet_NaN());
    for (const auto& [t, v] : hours) s.counts[static_cast<std::size_t>((t - s.start).count() / kSecondsPerHour)] = v;
    out.emplace(lot, std::move(s));
  }
  return out;
}

HourlySeries departures_on(const std::map<Timestamp, double>& departures, const HourlySeries& range) {
  HourlySeries s{range.start, std::vector<double>(range.counts.size(), 0.0)};
  for (const auto& [t, v] : departures) {
    const auto offset = (t - range.start).count() / kSecondsPerHour;
    if (t < range.start || offset >= static_cast<std::int64_t>(s.counts.size())) continue;
    s.counts[static_cast<std::size_t>(offset)] += v;
  }
  return s;
}

LotRateTable estimate_rates(const std::map<std::string, HourlySeries>& entries,
                            const std::map<std::string, HourlySeries>& departures, int weeks) {
  if (weeks < 1) throw DataError("rate estimation needs at least one whole week");
  const auto hours = static_cast<std::size_t>(weeks) * kHoursPerWeek;
  LotRateTable table;
  for (const auto& [lot, in] : entries) {
    const auto dep = departures.find(lot);
    if (dep == departures.end()) throw DataError("no departure series for lot '" + lot + "'");
    const HourlySeries& out = dep->second;
    if (in.counts.size() < hours || out.counts.size() < hours)
      throw DataError("lot '" + lot + "': series shorter than " + std::to_string(weeks) + " weeks");
    if (in.start != out.start) throw DataError("lot '" + lot + "': entry and departure series start at different hours");

    double sum_a[7][24] = {};
    double sum_d[7][24] = {};
    std::string gaps;
    int gap_count = 0;
    for (std::size_t i = 0; i < hours; ++i) {
      const Timestamp t_in = in.time_at(i);
      const int day = day_of_week(t_in);
      const int hod = hour_of_day(t_in);
      const double a = in.counts[i];
      const double d = out.counts[i];
      if (std::isnan(a) || std::isnan(d)) {
        if (gap_count++ < 20) gaps += " " + format_timestamp(t_in);
        continue;
      }
      sum_a[day][hod] += a;
      sum_d[day][hod] += d;
    }
    if (gap_count > 0)
      throw DataError("lot '" + lot + "': " + std::to_string(gap_count) + " missing hourly slots:" + gaps +
                      (gap_count > 20 ? " ..." : ""));
    for (int day = 0; day < 7; ++day)
      for (int hod = 0; hod < 24; ++hod) table.set(lot, day, hod, {sum_a[day][hod] / weeks, sum_d[day][hod] / weeks});
  }
  return table;
}

}  // namespace parksim
