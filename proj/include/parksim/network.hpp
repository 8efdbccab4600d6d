#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "parksim/errors.hpp"
#include "parksim/features.hpp"

namespace parksim {

inline constexpr int kHiddenUnits = 30;
inline constexpr int kClassCount = 2;

// Output class 0 is "a spot is available", class 1 is "block full".
inline constexpr int kAvailableClass = 0;
inline constexpr int kFullClass = 1;

template <typename Scalar>
using FeatureColumn = Eigen::Matrix<Scalar, kFeatureCount, 1>;
template <typename Scalar>
using Logits = Eigen::Matrix<Scalar, kClassCount, 1>;

/// Per-feature standardization fitted on a training split.
template <typename Scalar>
struct FeatureNorm {
  FeatureColumn<Scalar> mean = FeatureColumn<Scalar>::Zero();
  FeatureColumn<Scalar> stddev = FeatureColumn<Scalar>::Ones();

  FeatureColumn<Scalar> apply(const FeatureColumn<Scalar>& x) const {
    return (x - mean).cwiseQuotient(stddev);
  }
};

/// Weights of the 4 -> 30 -> 30 -> 2 network. Matrices are stored input-major
/// (W1 is 4x30), so a layer computes W^T x + b.
template <typename Scalar>
struct MlpParams {
  Eigen::Matrix<Scalar, kFeatureCount, kHiddenUnits> w1;
  Eigen::Matrix<Scalar, kHiddenUnits, 1> b1;
  Eigen::Matrix<Scalar, kHiddenUnits, kHiddenUnits> w2;
  Eigen::Matrix<Scalar, kHiddenUnits, 1> b2;
  Eigen::Matrix<Scalar, kHiddenUnits, kClassCount> w3;
  Eigen::Matrix<Scalar, kClassCount, 1> b3;

  static constexpr int kParameterCount = kFeatureCount * kHiddenUnits + kHiddenUnits +
                                         kHiddenUnits * kHiddenUnits + kHiddenUnits +
                                         kHiddenUnits * kClassCount + kClassCount;

  static MlpParams Zero() {
    MlpParams p;
    p.for_each_tensor([](auto& t) { t.setZero(); });
    return p;
  }

  template <typename F>
  void for_each_tensor(F&& f) {
    f(w1), f(b1), f(w2), f(b2), f(w3), f(b3);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    f(w1), f(b1), f(w2), f(b2), f(w3), f(b3);
  }
  template <typename F>
  static void zip(MlpParams& a, const MlpParams& b, F&& f) {
    f(a.w1, b.w1), f(a.b1, b.b1), f(a.w2, b.w2), f(a.b2, b.b2), f(a.w3, b.w3), f(a.b3, b.b3);
  }
};

/// Single affine layer + softmax: multinomial logistic regression on the same
/// four features.
template <typename Scalar>
struct LogisticParams {
  Eigen::Matrix<Scalar, kFeatureCount, kClassCount> w;
  Eigen::Matrix<Scalar, kClassCount, 1> b;

  static constexpr int kParameterCount = kFeatureCount * kClassCount + kClassCount;

  static LogisticParams Zero() {
    LogisticParams p;
    p.for_each_tensor([](auto& t) { t.setZero(); });
    return p;
  }

  template <typename F>
  void for_each_tensor(F&& f) {
    f(w), f(b);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    f(w), f(b);
  }
  template <typename F>
  static void zip(LogisticParams& a, const LogisticParams& b, F&& f) {
    f(a.w, b.w), f(a.b, b.b);
  }
};

static_assert(MlpParams<double>::kParameterCount == 1142);

template <typename Params>
struct ScalarOf;
template <typename Scalar>
struct ScalarOf<MlpParams<Scalar>> {
  using type = Scalar;
};
template <typename Scalar>
struct ScalarOf<LogisticParams<Scalar>> {
  using type = Scalar;
};

template <typename Params>
struct Model {
  using Scalar = typename ScalarOf<Params>::type;
  using ParamsType = Params;

  Params params = Params::Zero();
  FeatureNorm<Scalar> norm;

  static constexpr int kParameterCount = Params::kParameterCount;
};

using MlpModel = Model<MlpParams<double>>;
using LogisticModel = Model<LogisticParams<double>>;

// ---------------------------------------------------------------------------
// Flat parameter views (gradient checks, serialization, counting).

template <typename Params>
int parameter_count(const Params& p) {
  int n = 0;
  p.for_each_tensor([&](const auto& t) { n += static_cast<int>(t.size()); });
  return n;
}

/// Column-major flattening of every tensor in declaration order.
template <typename Params>
Eigen::Matrix<typename ScalarOf<Params>::type, Eigen::Dynamic, 1> flatten(const Params& p) {
  Eigen::Matrix<typename ScalarOf<Params>::type, Eigen::Dynamic, 1> out(Params::kParameterCount);
  Eigen::Index at = 0;
  p.for_each_tensor([&](const auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) out[at++] = t.data()[i];
  });
  return out;
}

template <typename Params, typename Derived>
Params unflatten(const Eigen::MatrixBase<Derived>& flat) {
  if (flat.size() != Params::kParameterCount) throw std::invalid_argument("parameter vector has wrong length");
  Params p;
  Eigen::Index at = 0;
  p.for_each_tensor([&](auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = flat[at++];
  });
  return p;
}

template <typename Params>
bool all_finite(const Params& p) {
  bool ok = true;
  p.for_each_tensor([&](const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

/// a += scale * b, tensor by tensor.
template <typename Params>
void axpy(Params& a, typename ScalarOf<Params>::type scale, const Params& b) {
  Params::zip(a, b, [&](auto& x, const auto& y) { x += scale * y; });
}

// ---------------------------------------------------------------------------
// Forward pass.

template <typename Scalar>
Logits<Scalar> logits(const MlpParams<Scalar>& p, const FeatureColumn<Scalar>& z) {
  const Eigen::Matrix<Scalar, kHiddenUnits, 1> h1 = (p.w1.transpose() * z + p.b1).cwiseMax(Scalar(0));
  const Eigen::Matrix<Scalar, kHiddenUnits, 1> h2 = (p.w2.transpose() * h1 + p.b2).cwiseMax(Scalar(0));
  return p.w3.transpose() * h2 + p.b3;
}

template <typename Scalar>
Logits<Scalar> logits(const LogisticParams<Scalar>& p, const FeatureColumn<Scalar>& z) {
  return p.w.transpose() * z + p.b;
}

template <typename Scalar>
Scalar log_sum_exp(const Logits<Scalar>& o) {
  const Scalar m = o.maxCoeff();
  return m + std::log((o.array() - m).exp().sum());
}

struct Probabilities {
  double p_available = 0.5;
  double p_full = 0.5;
};

template <typename Params>
FeatureColumn<typename ScalarOf<Params>::type> standardized(const Model<Params>& m, const FeatureVector& x) {
  using Scalar = typename ScalarOf<Params>::type;
  const FeatureColumn<Scalar> raw = x.as_vector().template cast<Scalar>();
  if (!raw.allFinite()) throw NumericError("non-finite feature vector");
  return m.norm.apply(raw);
}

/// Softmax probabilities of the two classes. Both lie strictly inside (0, 1)
/// and sum to 1; extreme logits are clamped at 1e-15 from the boundary.
template <typename Params>
Probabilities forward(const Model<Params>& m, const FeatureVector& x) {
  const auto o = logits(m.params, standardized(m, x));
  // Two-class softmax written as a logistic of the logit gap.
  const double gap = static_cast<double>(o[kAvailableClass] - o[kFullClass]);
  if (!std::isfinite(gap)) throw NumericError("non-finite network output");
  constexpr double kEdge = 1e-15;
  double p_full = 1.0 / (1.0 + std::exp(gap));
  p_full = std::clamp(p_full, kEdge, 1.0 - kEdge);
  return {1.0 - p_full, p_full};
}

inline int label_class(bool available) { return available ? kAvailableClass : kFullClass; }

/// Mean cross-entropy in nats. Throws std::invalid_argument on an empty batch.
template <typename Params>
double loss(const Model<Params>& m, std::span<const LabeledExample> batch) {
  if (batch.empty()) throw std::invalid_argument("loss of an empty batch");
  double total = 0.0;
  for (const auto& ex : batch) {
    const auto o = logits(m.params, standardized(m, ex.x));
    total += static_cast<double>(log_sum_exp(o) - o[label_class(ex.available)]);
  }
  return total / static_cast<double>(batch.size());
}

// ---------------------------------------------------------------------------
// Backpropagation. ReLU'(0) is taken as 0.

template <typename Scalar>
void accumulate_gradient(const MlpParams<Scalar>& p, const FeatureColumn<Scalar>& z, int label, MlpParams<Scalar>& g) {
  const Eigen::Matrix<Scalar, kHiddenUnits, 1> a1 = p.w1.transpose() * z + p.b1;
  const Eigen::Matrix<Scalar, kHiddenUnits, 1> h1 = a1.cwiseMax(Scalar(0));
  const Eigen::Matrix<Scalar, kHiddenUnits, 1> a2 = p.w2.transpose() * h1 + p.b2;
  const Eigen::Matrix<Scalar, kHiddenUnits, 1> h2 = a2.cwiseMax(Scalar(0));
  const Logits<Scalar> o = p.w3.transpose() * h2 + p.b3;

  Logits<Scalar> d_o = (o.array() - log_sum_exp(o)).exp();
  d_o[label] -= Scalar(1);

  g.w3.noalias() += h2 * d_o.transpose();
  g.b3 += d_o;
  const Eigen::Matrix<Scalar, kHiddenUnits, 1> d_a2 =
      (p.w3 * d_o).cwiseProduct((a2.array() > Scalar(0)).matrix().template cast<Scalar>());
  g.w2.noalias() += h1 * d_a2.transpose();
  g.b2 += d_a2;
  const Eigen::Matrix<Scalar, kHiddenUnits, 1> d_a1 =
      (p.w2 * d_a2).cwiseProduct((a1.array() > Scalar(0)).matrix().template cast<Scalar>());
  g.w1.noalias() += z * d_a1.transpose();
  g.b1 += d_a1;
}

template <typename Scalar>
void accumulate_gradient(const LogisticParams<Scalar>& p, const FeatureColumn<Scalar>& z, int label,
                         LogisticParams<Scalar>& g) {
  const Logits<Scalar> o = p.w.transpose() * z + p.b;
  Logits<Scalar> d_o = (o.array() - log_sum_exp(o)).exp();
  d_o[label] -= Scalar(1);
  g.w.noalias() += z * d_o.transpose();
  g.b += d_o;
}

/// Exact gradient of `loss` with respect to every parameter (feature_norm is
/// held fixed).
template <typename Params>
Params gradient(const Model<Params>& m, std::span<const LabeledExample> batch) {
  if (batch.empty()) throw std::invalid_argument("gradient of an empty batch");
  using Scalar = typename ScalarOf<Params>::type;
  Params g = Params::Zero();
  for (const auto& ex : batch) accumulate_gradient(m.params, standardized(m, ex.x), label_class(ex.available), g);
  const Scalar inv = Scalar(1) / static_cast<Scalar>(batch.size());
  g.for_each_tensor([&](auto& t) { t *= inv; });
  return g;
}

}  // namespace parksim
