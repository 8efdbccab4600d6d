#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "parksim/features.hpp"
#include "parksim/network.hpp"
#include "parksim/road_graph.hpp"

namespace parksim {

/// Plain mini-batch gradient descent over repeated random train/validation
/// splits. Split i draws from seed + i.
struct TrainConfig {
  int splits = 10;
  double validation_fraction = 0.20;
  int epochs = 150;
  double learning_rate = 0.01;
  int batch_size = 32;
  std::uint64_t seed = 0;
  // Multiplies the Glorot-uniform initial weights; near-zero values start the
  // network near the uniform prediction.
  double init_scale = 1.0;

  void validate() const;
};

struct SplitMetrics {
  double cross_entropy = 0.0;  // validation, nats
  double accuracy = 0.0;       // validation, threshold 0.5 on p_available
  double initial_train_loss = 0.0;
  double final_train_loss = 0.0;
};

struct EvalReport {
  double mean_val_cross_entropy = 0.0;
  double mean_val_accuracy = 0.0;
  std::vector<SplitMetrics> per_split;
};

template <typename M>
struct TrainResult {
  M model;  // lowest validation cross-entropy across splits
  EvalReport report;
};

inline constexpr std::size_t kMinTrainingSamples = 50;

/// Trains the 4-30-30-2 network. Requires >= 50 examples with both labels
/// present (DataError otherwise).
TrainResult<MlpModel> train(std::span<const LabeledExample> data, const TrainConfig& cfg);
TrainResult<MlpModel> train(std::span<const OccupancySample> samples, const PaymentIndex& payments, const RoadGraph& g,
                            const TrainConfig& cfg);

/// Same protocol and splits with the logistic-regression baseline.
TrainResult<LogisticModel> train_baseline(std::span<const LabeledExample> data, const TrainConfig& cfg);
TrainResult<LogisticModel> train_baseline(std::span<const OccupancySample> samples, const PaymentIndex& payments,
                                          const RoadGraph& g, const TrainConfig& cfg);

/// Mean/stddev per feature over `rows` of `data`. Zero spread maps to 1.
FeatureNorm<double> fit_feature_norm(std::span<const LabeledExample> data, std::span<const std::size_t> rows);

/// Validation cross-entropy and 0.5-threshold accuracy.
template <typename Params>
SplitMetrics evaluate(const Model<Params>& m, std::span<const LabeledExample> data) {
  SplitMetrics out;
  out.cross_entropy = loss(m, data);
  std::size_t correct = 0;
  for (const auto& ex : data) {
    const bool predicted = forward(m, ex.x).p_available >= 0.5;
    if (predicted == ex.available) ++correct;
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return out;
}

/// The random permutation of row indices used by split `split`; the first
/// round(validation_fraction * n) entries form the validation set.
std::vector<std::size_t> split_permutation(std::size_t n, const TrainConfig& cfg, int split);

/// P(available) for every block at (date, hour:30), indexed by edge. Blocks
/// without meters get 0.
std::vector<double> predict_block_probabilities(const MlpModel& m, const PaymentIndex& payments, const RoadGraph& g,
                                                int hour, Timestamp date);

}  // namespace parksim
