#include "parksim/training.hpp"

#include <cmath>
#include <limits>

#include "parksim/errors.hpp"
#include "parksim/random.hpp"

namespace parksim {
namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

template <typename Scalar, int Rows, int Cols>
void glorot_fill(Eigen::Matrix<Scalar, Rows, Cols>& w, double scale, Rng& rng) {
  const double limit = scale * std::sqrt(6.0 / static_cast<double>(Rows + Cols));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<Scalar>((2.0 * uniform01(rng) - 1.0) * limit);
}

MlpParams<double> initial_params(MlpParams<double> p, double scale, Rng& rng) {
  p = MlpParams<double>::Zero();
  glorot_fill(p.w1, scale, rng);
  glorot_fill(p.w2, scale, rng);
  glorot_fill(p.w3, scale, rng);
  return p;
}

LogisticParams<double> initial_params(LogisticParams<double> p, double scale, Rng& rng) {
  p = LogisticParams<double>::Zero();
  glorot_fill(p.w, scale, rng);
  return p;
}

void check_data(std::span<const LabeledExample> data) {
  if (data.size() < kMinTrainingSamples)
    throw DataError("insufficient training data: " + std::to_string(data.size()) + " samples, need " +
                    std::to_string(kMinTrainingSamples));
  bool any_available = false;
  bool any_full = false;
  for (const auto& ex : data) (ex.available ? any_available : any_full) = true;
  if (!(any_available && any_full)) throw DataError("training data contains a single class");
}

std::vector<LabeledExample> gather(std::span<const LabeledExample> data, std::span<const std::size_t> rows) {
  std::vector<LabeledExample> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(data[r]);
  return out;
}

template <typename Params>
TrainResult<Model<Params>> train_generic(std::span<const LabeledExample> data, const TrainConfig& cfg) {
  cfg.validate();
  check_data(data);

  TrainResult<Model<Params>> result;
  double best = std::numeric_limits<double>::infinity();

  for (int split = 0; split < cfg.splits; ++split) {
    const auto perm = split_permutation(data.size(), cfg, split);
    const auto n_val = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(data.size())));
    const std::span<const std::size_t> val_rows(perm.data(), n_val);
    const std::span<const std::size_t> train_rows(perm.data() + n_val, perm.size() - n_val);
    const auto validation = gather(data, val_rows);
    const auto training = gather(data, train_rows);

    Rng rng(static_cast<std::uint64_t>(cfg.seed + static_cast<std::uint64_t>(split)));
    rng.discard(1);  // decorrelate from the permutation stream
    Model<Params> model;
    model.norm = fit_feature_norm(data, train_rows);
    model.params = initial_params(model.params, cfg.init_scale, rng);

    SplitMetrics metrics;
    metrics.initial_train_loss = loss(model, std::span<const LabeledExample>(training));

    std::vector<std::size_t> order(training.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<LabeledExample> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      shuffle(order, rng);
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
        batch.clear();
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
        for (std::size_t i = start; i < end; ++i) batch.push_back(training[order[i]]);
        const Params g = gradient(model, std::span<const LabeledExample>(batch));
        axpy(model.params, -cfg.learning_rate, g);
      }
      if (!all_finite(model.params)) throw NumericError("training diverged (non-finite parameters)");
    }

    metrics.final_train_loss = loss(model, std::span<const LabeledExample>(training));
    const SplitMetrics val = evaluate(model, std::span<const LabeledExample>(validation));
    metrics.cross_entropy = val.cross_entropy;
    metrics.accuracy = val.accuracy;
    if (!std::isfinite(metrics.cross_entropy)) throw NumericError("non-finite validation loss");
    result.report.per_split.push_back(metrics);
    if (metrics.cross_entropy < best) {
      best = metrics.cross_entropy;
      result.model = model;
    }
  }

  double ce = 0.0;
  double acc = 0.0;
  for (const auto& s : result.report.per_split) {
    ce += s.cross_entropy;
    acc += s.accuracy;
  }
  result.report.mean_val_cross_entropy = ce / cfg.splits;
  result.report.mean_val_accuracy = acc / cfg.splits;
  return result;
}

}  // namespace

void TrainConfig::validate() const {
  if (splits < 1) throw ConfigError("train.splits must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("train.validation_fraction must lie in (0, 1)");
  if (epochs < 0) throw ConfigError("train.epochs must be nonnegative");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train.learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("train.batch_size must be positive");
  if (!(init_scale > 0.0) || !std::isfinite(init_scale)) throw ConfigError("train.init_scale must be positive");
}

std::vector<std::size_t> split_permutation(std::size_t n, const TrainConfig& cfg, int split) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(derive_seed(cfg.seed + static_cast<std::uint64_t>(split), {0x5a17}));
  shuffle(perm, rng);
  return perm;
}

FeatureNorm<double> fit_feature_norm(std::span<const LabeledExample> data, std::span<const std::size_t> rows) {
  FeatureNorm<double> norm;
  if (rows.empty()) return norm;
  FeatureColumn<double> sum = FeatureColumn<double>::Zero();
  for (std::size_t r : rows) sum += data[r].x.as_vector();
  norm.mean = sum / static_cast<double>(rows.size());
  FeatureColumn<double> sq = FeatureColumn<double>::Zero();
  for (std::size_t r : rows) sq += (data[r].x.as_vector() - norm.mean).cwiseAbs2();
  norm.stddev = (sq / static_cast<double>(rows.size())).cwiseSqrt();
  for (int i = 0; i < kFeatureCount; ++i)
    if (!(norm.stddev[i] > 1e-12)) norm.stddev[i] = 1.0;
  return norm;
}

TrainResult<MlpModel> train(std::span<const LabeledExample> data, const TrainConfig& cfg) {
  return train_generic<MlpParams<double>>(data, cfg);
}

TrainResult<MlpModel> train(std::span<const OccupancySample> samples, const PaymentIndex& payments, const RoadGraph& g,
                            const TrainConfig& cfg) {
  const auto data = build_dataset(samples, payments, g);
  return train(data, cfg);
}

TrainResult<LogisticModel> train_baseline(std::span<const LabeledExample> data, const TrainConfig& cfg) {
  return train_generic<LogisticParams<double>>(data, cfg);
}

TrainResult<LogisticModel> train_baseline(std::span<const OccupancySample> samples, const PaymentIndex& payments,
                                          const RoadGraph& g, const TrainConfig& cfg) {
  const auto data = build_dataset(samples, payments, g);
  return train_baseline(data, cfg);
}

std::vector<double> predict_block_probabilities(const MlpModel& m, const PaymentIndex& payments, const RoadGraph& g,
                                                int hour, Timestamp date) {
  if (hour < 0 || hour >= kHoursPerDay) throw DataError("hour out of range: " + std::to_string(hour));
  const Timestamp t = floor_to_day(date) + Seconds{hour * kSecondsPerHour + 30 * 60};
  std::vector<double> probs(g.edge_count(), 0.0);
  for (EdgeIndex e = 0; e < g.edge_count(); ++e) {
    const auto& block = g.edge(e);
    if (block.meter_count == 0) continue;
    probs[e] = forward(m, extract_features(payments, block.id, t, g)).p_available;
  }
  return probs;
}

}  // namespace parksim
