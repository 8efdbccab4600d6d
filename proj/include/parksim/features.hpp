#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "parksim/road_graph.hpp"
#include "parksim/time.hpp"

namespace parksim {

inline constexpr int kFeatureCount = 4;

struct PaymentRecord {
  std::string block_id;
  Timestamp start;
  double duration_s = 0.0;
};

/// Network input for one (block, time).
struct FeatureVector {
  double active_sessions = 0.0;     // paid sessions covering t
  double popularity_3h = 0.0;       // sessions started in [t - 3h, t)
  double block_length_m = 0.0;
  double congestion_s_per_m = 0.0;  // drive seconds at hour(t) per meter

  Eigen::Matrix<double, kFeatureCount, 1> as_vector() const {
    return {active_sessions, popularity_3h, block_length_m, congestion_s_per_m};
  }
};

/// Block-level ground truth: 1 when at least one metered spot was free.
struct OccupancySample {
  std::string block_id;
  Timestamp time;
  bool available = false;
};

struct LabeledExample {
  FeatureVector x;
  bool available = false;
};

/// Payments grouped per block and sorted by start, for fast window counts.
class PaymentIndex {
 public:
  PaymentIndex() = default;
  explicit PaymentIndex(std::span<const PaymentRecord> payments);

  /// Sessions with start <= t < start + duration (half-open).
  int active_at(std::string_view block_id, Timestamp t) const;
  /// Sessions with start in [from, to).
  int started_in(std::string_view block_id, Timestamp from, Timestamp to) const;

  std::size_t size() const { return count_; }

 private:
  struct Session {
    std::int64_t start;
    std::int64_t end;
  };
  struct BlockSessions {
    std::vector<Session> by_start;
    std::int64_t longest = 0;
  };
  const BlockSessions* find(std::string_view block_id) const;

  std::unordered_map<std::string, BlockSessions> blocks_;
  std::size_t count_ = 0;
};

/// Throws DataError for unknown blocks or non-positive durations.
FeatureVector extract_features(const PaymentIndex& payments, std::string_view block_id, Timestamp t, const RoadGraph& g);
FeatureVector extract_features(std::span<const PaymentRecord> payments, std::string_view block_id, Timestamp t,
                               const RoadGraph& g);

/// Pairs each sample with its features. Samples on unknown blocks are a DataError.
std::vector<LabeledExample> build_dataset(std::span<const OccupancySample> samples, const PaymentIndex& payments,
                                          const RoadGraph& g);

}  // namespace parksim
