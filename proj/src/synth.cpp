#include "parksim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>

#include "json.hpp"
#include "parksim/csv.hpp"
#include "parksim/errors.hpp"
#include "parksim/random.hpp"

namespace parksim {
namespace {

constexpr double kMetersPerDegreeLat = 111320.0;
constexpr double kBaseLat = 49.28;
constexpr double kBaseLon = -123.12;

// Relative on-street demand by hour of day.
constexpr std::array<double, 24> kStreetProfile = {0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.10, 0.30,
                                                   0.60, 0.80, 0.90, 1.00, 1.00, 1.00, 0.95, 0.90,
                                                   0.90, 0.85, 0.75, 0.60, 0.45, 0.30, 0.15, 0.08};
// Relative road congestion by hour of day.
constexpr std::array<double, 24> kTrafficProfile = {0.0, 0.0, 0.0, 0.0, 0.0, 0.05, 0.2, 0.6,
                                                    1.0, 0.8, 0.6, 0.6, 0.7, 0.6, 0.6, 0.7,
                                                    0.9, 1.0, 0.8, 0.5, 0.3, 0.2, 0.1, 0.0};
// Relative lot arrivals by hour of day.
constexpr std::array<double, 24> kLotProfile = {0.02, 0.01, 0.01, 0.01, 0.01, 0.03, 0.10, 0.40,
                                                0.90, 1.00, 0.80, 0.70, 0.80, 0.70, 0.60, 0.50,
                                                0.45, 0.40, 0.35, 0.30, 0.25, 0.15, 0.08, 0.04};

std::string node_id(int r, int c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "n%02d_%02d", r, c);
  return buf;
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

int poisson(Rng& rng, double mean) { return mean > 0.0 ? std::poisson_distribution<int>(mean)(rng) : 0; }

struct GridGeometry {
  double center_r;
  double center_c;
  double falloff;

  // 1 at the grid center, decaying with distance in block units.
  double centrality(double r, double c) const {
    const double d2 = (r - center_r) * (r - center_r) + (c - center_c) * (c - center_c);
    return std::exp(-d2 / (2.0 * falloff * falloff));
  }
};

struct EdgeDraft {
  BlockFace face;
  double mid_r;
  double mid_c;
};

std::vector<EdgeDraft> build_edges(const SynthConfig& cfg, const GridGeometry& geo, Rng& rng) {
  std::vector<EdgeDraft> out;
  auto add_segment = [&](int r0, int c0, int r1, int c1) {
    const double length = cfg.block_length_m * (1.0 + uniform(rng, -cfg.length_jitter, cfg.length_jitter));
    const double mid_r = 0.5 * (r0 + r1);
    const double mid_c = 0.5 * (c0 + c1);
    const double central = geo.centrality(mid_r, mid_c);
    for (int dir = 0; dir < 2; ++dir) {
      const std::string a = dir == 0 ? node_id(r0, c0) : node_id(r1, c1);
      const std::string b = dir == 0 ? node_id(r1, c1) : node_id(r0, c0);
      BlockFace f;
      f.id = "b_" + a + "_" + b;
      f.from_node = a;
      f.to_node = b;
      f.length_m = std::round(length * 10.0) / 10.0;
      const bool metered = uniform01(rng) >= cfg.unmetered_fraction;
      f.meter_count = metered ? std::max(1, static_cast<int>(std::lround(f.length_m / cfg.meter_spacing_m))) : 0;
      f.walk_time_s = std::round(f.length_m / cfg.walk_speed_mps * 10.0) / 10.0;
      for (int h = 0; h < kHoursPerDay; ++h) {
        const double slowdown = 1.0 + (cfg.peak_slowdown - 1.0) * kTrafficProfile[static_cast<std::size_t>(h)] * central;
        f.drive_time_s[static_cast<std::size_t>(h)] = std::round(f.length_m / cfg.free_flow_speed_mps * slowdown * 10.0) / 10.0;
      }
      out.push_back({std::move(f), mid_r, mid_c});
    }
  };
  for (int r = 0; r < cfg.rows; ++r)
    for (int c = 0; c < cfg.cols; ++c) {
      if (c + 1 < cfg.cols) add_segment(r, c, r, c + 1);
      if (r + 1 < cfg.rows) add_segment(r, c, r + 1, c);
    }
  return out;
}

// Loss system per block: arrivals that find every meter taken drive on.
void simulate_block(const SynthConfig& cfg, const EdgeDraft& edge, double load_per_meter, Timestamp start, Rng& rng,
                    std::vector<PaymentRecord>& paid, GroundTruth::Block& truth) {
  const int meters = edge.face.meter_count;
  truth.meter_count = meters;
  if (meters == 0) return;
  constexpr double kMeanStayH = 1.5;
  std::priority_queue<std::int64_t, std::vector<std::int64_t>, std::greater<>> leaving;
  int occupied = 0;
  std::optional<Timestamp> full_since;

  auto record = [&](Timestamp t) {
    truth.occupancy_changes.emplace_back(t, occupied);
    if (occupied == meters && !full_since) full_since = t;
    if (occupied < meters && full_since) {
      if (*full_since < t) truth.full_intervals.emplace_back(*full_since, t);
      full_since.reset();
    }
  };
  auto release_until = [&](std::int64_t t) {
    while (!leaving.empty() && leaving.top() <= t) {
      const std::int64_t when = leaving.top();
      leaving.pop();
      --occupied;
      record(Timestamp{Seconds{when}});
    }
  };

  const std::int64_t t0 = start.time_since_epoch().count();
  for (int day = 0; day < cfg.onstreet_days; ++day) {
    for (int h = 0; h < kHoursPerDay; ++h) {
      const double rate = load_per_meter * kStreetProfile[static_cast<std::size_t>(h)] * meters / kMeanStayH;
      const int n = poisson(rng, rate);
      const std::int64_t hour_start = t0 + (day * 24 + h) * kSecondsPerHour;
      std::vector<std::int64_t> arrivals(static_cast<std::size_t>(n));
      for (auto& a : arrivals) a = hour_start + static_cast<std::int64_t>(uniform01(rng) * kSecondsPerHour);
      std::sort(arrivals.begin(), arrivals.end());
      for (std::int64_t a : arrivals) {
        release_until(a);
        if (occupied == meters) continue;
        const auto stay = static_cast<std::int64_t>(uniform(rng, 15.0, 165.0) * 60.0);
        ++occupied;
        leaving.push(a + stay);
        record(Timestamp{Seconds{a}});
        if (uniform01(rng) < cfg.unpaid_fraction) continue;
        const double paid_s = std::round(stay * uniform(rng, 0.6, 1.5) / 60.0) * 60.0;
        paid.push_back({edge.face.id, Timestamp{Seconds{a}}, std::max(60.0, paid_s)});
      }
    }
  }
  release_until(std::numeric_limits<std::int64_t>::max());
}

void sweep_surveys(const SynthConfig& cfg, const BlockFace& face, Timestamp start, const GroundTruth& truth, Rng& rng,
                   std::vector<SurveyRecord>& out) {
  if (face.meter_count == 0) return;
  constexpr int kCheckGapS = 20;
  const int windows_per_day = 23;  // half-hours from 08:00 to 19:30
  std::vector<int> used;
  for (int s = 0; s < cfg.survey_sweeps_per_block; ++s) {
    int slot = 0;
    do {
      slot = static_cast<int>(uniform01(rng) * cfg.onstreet_days * windows_per_day);
    } while (std::find(used.begin(), used.end(), slot) != used.end() &&
             static_cast<int>(used.size()) < cfg.onstreet_days * windows_per_day);
    used.push_back(slot);
    const int day = slot / windows_per_day;
    const int window = slot % windows_per_day;
    const int latest_offset = 1800 - face.meter_count * kCheckGapS - 1;
    const std::int64_t sweep_start = start.time_since_epoch().count() + day * kSecondsPerDay + 8 * kSecondsPerHour +
                                     window * 1800 + static_cast<std::int64_t>(uniform01(rng) * std::max(1, latest_offset));
    for (int m = 0; m < face.meter_count; ++m) {
      const Timestamp t{Seconds{sweep_start + m * kCheckGapS}};
      SurveyRecord r;
      char meter[16];
      std::snprintf(meter, sizeof meter, "%02d", m);
      r.meter_id = face.id + "_m" + meter;
      r.block_id = face.id;
      // Meter m is free iff fewer than m + 1 cars are parked.
      r.free_spots = truth.occupied_at(face.id, t) <= m ? 1 : 0;
      r.timestamp = t;
      if (uniform01(rng) < cfg.missing_timestamp_fraction) r.timestamp.reset();
      out.push_back(std::move(r));
    }
  }
}

void simulate_lot(const SynthConfig& cfg, const LotSpec& lot, Timestamp start, Rng& rng,
                  std::vector<LotEventRecord>& out) {
  const int days = cfg.lot_weeks * 7;
  for (int day = 0; day < days; ++day) {
    const Timestamp midnight = start + Seconds{day * kSecondsPerDay};
    const bool weekend = day_of_week(midnight) >= 5;
    for (int h = 0; h < kHoursPerDay; ++h) {
      const double rate = cfg.lot_peak_arrivals_per_hour * kLotProfile[static_cast<std::size_t>(h)] * (weekend ? 0.6 : 1.0);
      LotEventRecord rec;
      rec.lot_id = lot.id;
      rec.hour = midnight + Seconds{h * kSecondsPerHour};
      rec.entries = poisson(rng, rate);
      for (int k = 0; k < rec.entries; ++k) {
        double paid = 0.0;
        if (h < cfg.promo_hour && uniform01(rng) < cfg.promo_fraction) {
          paid = static_cast<double>((cfg.promo_hour - h) * kSecondsPerHour);
        } else {
          paid = std::round(uniform(rng, 0.5, 4.0) * 4.0) * 900.0;
        }
        rec.paid_durations_s.push_back(paid);
      }
      out.push_back(std::move(rec));
    }
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (rows < 2 || cols < 2) throw ConfigError("synth grid must be at least 2x2");
  if (!(block_length_m > 0.0) || !(meter_spacing_m > 0.0)) throw ConfigError("synth lengths must be positive");
  if (length_jitter < 0.0 || length_jitter >= 1.0) throw ConfigError("synth.length_jitter must lie in [0, 1)");
  for (double f : {unmetered_fraction, unpaid_fraction, missing_timestamp_fraction, promo_fraction})
    if (f < 0.0 || f > 1.0) throw ConfigError("synth fractions must lie in [0, 1]");
  if (!(observed_fraction > 0.0 && observed_fraction <= 1.0)) throw ConfigError("synth.observed_fraction must lie in (0, 1]");
  if (onstreet_days < 1 || lot_weeks < 1 || survey_sweeps_per_block < 0) throw ConfigError("synth durations must be positive");
  if (!(free_flow_speed_mps > 0.0) || !(walk_speed_mps > 0.0) || peak_slowdown < 1.0)
    throw ConfigError("synth speeds must be positive and peak_slowdown >= 1");
  if (central_load < 0.0 || edge_load < 0.0 || lot_peak_arrivals_per_hour < 0.0)
    throw ConfigError("synth demand must be nonnegative");
  if (promo_hour < 1 || promo_hour > 23) throw ConfigError("synth.promo_hour must lie in 1-23");
  for (const auto& l : lots)
    if (l.row < 0 || l.row >= rows || l.col < 0 || l.col >= cols || l.capacity < 1)
      throw ConfigError("synth lot outside the grid or with no capacity");
}

bool GroundTruth::is_full(const std::string& block_id, Timestamp t) const {
  const auto it = blocks.find(block_id);
  if (it == blocks.end()) throw DataError("ground truth has no block '" + block_id + "'");
  const auto& iv = it->second.full_intervals;
  auto pos = std::upper_bound(iv.begin(), iv.end(), t, [](Timestamp v, const auto& p) { return v < p.first; });
  if (pos == iv.begin()) return false;
  --pos;
  return pos->first <= t && t < pos->second;
}

int GroundTruth::occupied_at(const std::string& block_id, Timestamp t) const {
  const auto it = blocks.find(block_id);
  if (it == blocks.end()) throw DataError("ground truth has no block '" + block_id + "'");
  const auto& ch = it->second.occupancy_changes;
  auto pos = std::upper_bound(ch.begin(), ch.end(), t, [](Timestamp v, const auto& p) { return v < p.first; });
  return pos == ch.begin() ? 0 : std::prev(pos)->second;
}

SynthBundle synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  const Timestamp start = parse_date(cfg.start_date);
  const GridGeometry geo{(cfg.rows - 1) / 2.0, (cfg.cols - 1) / 2.0, std::max(cfg.rows, cfg.cols) / 4.0};

  Rng layout_rng = make_rng(cfg.seed, {stable_hash("layout")});
  std::vector<Intersection> nodes;
  const double lon_scale = kMetersPerDegreeLat * std::cos(kBaseLat * std::numbers::pi / 180.0);
  for (int r = 0; r < cfg.rows; ++r)
    for (int c = 0; c < cfg.cols; ++c)
      nodes.push_back({node_id(r, c), kBaseLat + r * cfg.block_length_m / kMetersPerDegreeLat,
                       kBaseLon + c * cfg.block_length_m / lon_scale});
  auto drafts = build_edges(cfg, geo, layout_rng);

  std::vector<PaymentRecord> all_paid;
  GroundTruth truth;
  for (const auto& d : drafts) {
    Rng rng = make_rng(cfg.seed, {stable_hash(d.face.id), 1});
    const double load = cfg.edge_load + (cfg.central_load - cfg.edge_load) * geo.centrality(d.mid_r, d.mid_c);
    simulate_block(cfg, d, load, start, rng, all_paid, truth.blocks[d.face.id]);
  }

  std::vector<BlockFace> faces;
  for (auto& d : drafts) faces.push_back(std::move(d.face));

  SynthBundle bundle{RoadGraph(std::move(nodes), std::move(faces)), {}, {}, {}, {}, std::move(truth), all_paid.size()};

  Rng observe_rng = make_rng(cfg.seed, {stable_hash("observe")});
  for (auto& p : all_paid)
    if (cfg.observed_fraction >= 1.0 || uniform01(observe_rng) < cfg.observed_fraction) bundle.payments.push_back(std::move(p));
  std::stable_sort(bundle.payments.begin(), bundle.payments.end(),
                   [](const PaymentRecord& a, const PaymentRecord& b) { return a.start < b.start; });

  for (const auto& face : bundle.graph.edges()) {
    Rng rng = make_rng(cfg.seed, {stable_hash(face.id), 2});
    sweep_surveys(cfg, face, start, bundle.truth, rng, bundle.surveys);
  }

  std::vector<SynthLot> lots = cfg.lots;
  if (lots.empty()) lots.push_back({cfg.rows / 2, cfg.cols / 2, 300});
  for (std::size_t i = 0; i < lots.size(); ++i) {
    bundle.lots.push_back({"lot" + std::to_string(i + 1), node_id(lots[i].row, lots[i].col), lots[i].capacity});
    Rng rng = make_rng(cfg.seed, {stable_hash(bundle.lots.back().id), 3});
    simulate_lot(cfg, bundle.lots.back(), start, rng, bundle.lot_events);
  }
  return bundle;
}

std::string serialize_ground_truth(const GroundTruth& truth) {
  nlohmann::ordered_json doc;
  doc["format_version"] = 1;
  doc["description"] = "intervals [start, end) during which every meter on the block was occupied";
  nlohmann::ordered_json blocks = nlohmann::ordered_json::object();
  for (const auto& [id, b] : truth.blocks) {
    nlohmann::ordered_json intervals = nlohmann::ordered_json::array();
    for (const auto& [s, e] : b.full_intervals) intervals.push_back({format_timestamp(s), format_timestamp(e)});
    blocks[id] = {{"meter_count", b.meter_count}, {"full_intervals", std::move(intervals)}};
  }
  doc["blocks"] = std::move(blocks);
  return doc.dump() + "\n";
}

void write_bundle(const SynthBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "graph.json", serialize_graph(bundle.graph));
  write_file_atomic(dir / "payments.csv", format_payments(bundle.payments));
  write_file_atomic(dir / "surveys.csv", format_surveys(bundle.surveys));
  write_file_atomic(dir / "lots.json", serialize_lots(bundle.lots));
  write_file_atomic(dir / "lot_events.csv", format_lot_events(bundle.lot_events));
  write_file_atomic(dir / "ground_truth.json", serialize_ground_truth(bundle.truth));
}

}  // namespace parksim
