#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "parksim/random.hpp"
#include "parksim/road_graph.hpp"

namespace parksim {

/// Weights of the next-block score
///   Z = w_D * D + w_N * N + w_E * E + w_P / P.
///
/// Calibration note: the weights are unitless, so the units of each term set
/// the behavior. D is in hundreds of meters, N is a raw visit count, E is
/// minutes since the block was last checked (capped, and at the cap for
/// never-checked blocks), and P is floored at OnstreetConfig::p_floor.
struct PolicyWeights {
  double distance = -1.0;
  double visits = -15.0;
  double elapsed = 15.0;
  double availability = -1.0;

  void validate() const;
};

struct OnstreetConfig {
  double t_min_s = 210.0;       // park + pay
  double max_search_s = 1800.0;  // cruising cap; longer searches are censored
  int n_samples = 200;
  std::uint64_t seed = 0;
  double e_cap_s = 1800.0;
  double p_floor = 0.05;

  void validate() const;
};

/// Driver state during one search.
struct SearchState {
  NodeIndex current_node = 0;
  double elapsed_s = 0.0;
  std::vector<int> visits;                       // per edge
  std::vector<std::optional<double>> last_check_s;  // per edge, elapsed_s at last traversal

  static SearchState initial(const RoadGraph& g, NodeIndex start);
};

/// Destination-dependent lookups shared by every search toward `block`.
struct Destination {
  EdgeIndex block = 0;
  std::vector<double> distance_m;  // per edge, midpoint-to-midpoint walking distance
  std::vector<double> walk_s;      // per edge, midpoint-to-midpoint walk time

  static Destination make(const RoadGraph& g, EdgeIndex block);
};

struct SearchOutcome {
  EdgeIndex parked_block = 0;  // block the search ended on when censored
  double drive_s = 0.0;
  double walk_s = 0.0;
  double total_s = 0.0;
  bool censored = false;
  std::vector<EdgeIndex> trace;  // traversed blocks, starting with the destination
};

struct OnstreetEstimate {
  double mean_s = 0.0;
  double std_s = 0.0;
  double censored_fraction = 0.0;
  int n_samples = 0;
};

/// Scores for each candidate block leaving the current node.
std::vector<double> block_scores(const SearchState& state, std::span<const EdgeIndex> candidates,
                                 std::span<const double> probs, const Destination& dest, const PolicyWeights& w,
                                 const OnstreetConfig& cfg);

/// Softmax probabilities, shifted by the max score.
std::vector<double> softmax(std::span<const double> scores);

/// Samples an index with softmax probabilities. Throws NumericError on a
/// non-finite score and std::invalid_argument on an empty list.
std::size_t choose_block(std::span<const double> scores, Rng& rng);

/// One driver searching outward from the destination block. `probs` holds the
/// per-edge availability probability; one Bernoulli draw per traversal.
SearchOutcome simulate_single(const RoadGraph& g, std::span<const double> probs, const Destination& dest,
                              const OnstreetConfig& cfg, const PolicyWeights& w, int hour, Rng& rng);

/// cfg.n_samples searches from a stream keyed by (cfg.seed, destination id, hour).
/// Censored searches enter the mean at their capped total.
OnstreetEstimate estimate_onstreet_time(const RoadGraph& g, std::span<const double> probs, const Destination& dest,
                                        const OnstreetConfig& cfg, const PolicyWeights& w, int hour);
OnstreetEstimate estimate_onstreet_time(const RoadGraph& g, std::span<const double> probs, EdgeIndex dest,
                                        const OnstreetConfig& cfg, const PolicyWeights& w, int hour);

}  // namespace parksim
