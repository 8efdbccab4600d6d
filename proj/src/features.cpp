#include "parksim/features.hpp"

#include <algorithm>
#include <cmath>

#include "parksim/errors.hpp"

namespace parksim {
namespace {

std::int64_t secs(Timestamp t) { return t.time_since_epoch().count(); }

}  // namespace

PaymentIndex::PaymentIndex(std::span<const PaymentRecord> payments) {
  for (const auto& p : payments) {
    if (!(p.duration_s > 0.0) || !std::isfinite(p.duration_s))
      throw DataError("payment on '" + p.block_id + "' has non-positive duration");
    auto& block = blocks_[p.block_id];
    const auto start = secs(p.start);
    const auto duration = static_cast<std::int64_t>(std::llround(p.duration_s));
    block.by_start.push_back({start, start + duration});
    block.longest = std::max(block.longest, duration);
    ++count_;
  }
  for (auto& [id, block] : blocks_) {
    std::sort(block.by_start.begin(), block.by_start.end(),
              [](const Session& a, const Session& b) { return a.start != b.start ? a.start < b.start : a.end < b.end; });
  }
}

const PaymentIndex::BlockSessions* PaymentIndex::find(std::string_view block_id) const {
  const auto it = blocks_.find(std::string(block_id));
  return it == blocks_.end() ? nullptr : &it->second;
}

int PaymentIndex::active_at(std::string_view block_id, Timestamp t) const {
  const auto* block = find(block_id);
  if (block == nullptr) return 0;
  const auto now = secs(t);
  const auto& s = block->by_start;
  auto first = std::lower_bound(s.begin(), s.end(), now - block->longest,
                                [](const Session& a, std::int64_t v) { return a.start < v; });
  int count = 0;
  for (auto it = first; it != s.end() && it->start <= now; ++it) {
    if (now < it->end) ++count;
  }
  return count;
}

int PaymentIndex::started_in(std::string_view block_id, Timestamp from, Timestamp to) const {
  const auto* block = find(block_id);
  if (block == nullptr) return 0;
  const auto& s = block->by_start;
  const auto cmp = [](const Session& a, std::int64_t v) { return a.start < v; };
  const auto lo = std::lower_bound(s.begin(), s.end(), secs(from), cmp);
  const auto hi = std::lower_bound(s.begin(), s.end(), secs(to), cmp);
  return static_cast<int>(hi - lo);
}

FeatureVector extract_features(const PaymentIndex& payments, std::string_view block_id, Timestamp t, const RoadGraph& g) {
  const BlockFace& block = g.edge(g.edge_index(block_id));
  FeatureVector f;
  f.active_sessions = payments.active_at(block_id, t);
  f.popularity_3h = payments.started_in(block_id, t - Seconds{3 * kSecondsPerHour}, t);
  f.block_length_m = block.length_m;
  f.congestion_s_per_m = block.drive_time_s[hour_of_day(t)] / block.length_m;
  return f;
}

FeatureVector extract_features(std::span<const PaymentRecord> payments, std::string_view block_id, Timestamp t,
                               const RoadGraph& g) {
  return extract_features(PaymentIndex(payments), block_id, t, g);
}

std::vector<LabeledExample> build_dataset(std::span<const OccupancySample> samples, const PaymentIndex& payments,
                                          const RoadGraph& g) {
  std::vector<LabeledExample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({extract_features(payments, s.block_id, s.time, g), s.available});
  return out;
}

}  // namespace parksim
