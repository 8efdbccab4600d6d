#include "parksim/model_io.hpp"

#include "json.hpp"
#include "parksim/csv.hpp"
#include "parksim/errors.hpp"

namespace parksim {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;


template <typename W, typename B>
ordered_json layer_json(const W& w, const B& b) {
  ordered_json layer;
  layer["rows"] = w.rows();
  layer["cols"] = w.cols();
  std::vector<double> weights;
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) weights.push_back(w(r, c));
  layer["weights"] = weights;
  layer["bias"] = std::vector<double>(b.data(), b.data() + b.size());
  return layer;
}

template <typename W, typename B>
void read_layer(const json& layer, W& w, B& b) {
  if (layer.at("rows").get<Eigen::Index>() != w.rows() || layer.at("cols").get<Eigen::Index>() != w.cols())
    throw DataError("model layer has shape " + layer.at("rows").dump() + "x" + layer.at("cols").dump() + ", expected " +
                    std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
  const auto weights = layer.at("weights").get<std::vector<double>>();
  const auto bias = layer.at("bias").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(weights.size()) != w.size() || static_cast<Eigen::Index>(bias.size()) != b.size())
    throw DataError("model layer has wrong number of values");
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = weights[static_cast<std::size_t>(r * w.cols() + c)];
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = bias[static_cast<std::size_t>(i)];
}

ordered_json norm_json(const FeatureNorm<double>& n) {
  return {{"mean", std::vector<double>(n.mean.data(), n.mean.data() + kFeatureCount)},
          {"std", std::vector<double>(n.stddev.data(), n.stddev.data() + kFeatureCount)}};
}

FeatureNorm<double> read_norm(const json& j) {
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto sd = j.at("std").get<std::vector<double>>();
  if (mean.size() != kFeatureCount || sd.size() != kFeatureCount) throw DataError("feature_norm must have 4 entries");
  FeatureNorm<double> n;
  for (int i = 0; i < kFeatureCount; ++i) {
    if (!(sd[static_cast<std::size_t>(i)] > 0.0)) throw DataError("feature_norm std must be positive");
    n.mean[i] = mean[static_cast<std::size_t>(i)];
    n.stddev[i] = sd[static_cast<std::size_t>(i)];
  }
  return n;
}

json parse_header(std::string_view text, const char* kind) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw DataError(std::string("model file: ") + err.what());
  }
  if (doc.value("format_version", -1) != kModelFormatVersion)
    throw DataError("model file: unsupported format_version");
  if (doc.value("kind", std::string()) != kind) throw DataError(std::string("model file: expected kind '") + kind + "'");
  return doc;
}

template <typename M>
void check_finite(const M& m) {
  if (!all_finite(m.params) || !m.norm.mean.allFinite() || !m.norm.stddev.allFinite())
    throw DataError("model file contains non-finite parameters");
}

}  // namespace

std::string serialize_model(const MlpModel& m) {
  ordered_json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["kind"] = "mlp";
  doc["parameter_count"] = MlpModel::kParameterCount;
  doc["layers"] = {layer_json(m.params.w1, m.params.b1), layer_json(m.params.w2, m.params.b2),
                   layer_json(m.params.w3, m.params.b3)};
  doc["feature_norm"] = norm_json(m.norm);
  return doc.dump(1) + "\n";
}

std::string serialize_model(const LogisticModel& m) {
  ordered_json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["kind"] = "logistic";
  doc["parameter_count"] = LogisticModel::kParameterCount;
  doc["layers"] = {layer_json(m.params.w, m.params.b)};
  doc["feature_norm"] = norm_json(m.norm);
  return doc.dump(1) + "\n";
}

MlpModel parse_mlp_model(std::string_view text) {
  const json doc = parse_header(text, "mlp");
  try {
    const auto& layers = doc.at("layers");
    if (layers.size() != 3) throw DataError("mlp model must have 3 layers");
    MlpModel m;
    read_layer(layers[0], m.params.w1, m.params.b1);
    read_layer(layers[1], m.params.w2, m.params.b2);
    read_layer(layers[2], m.params.w3, m.params.b3);
    m.norm = read_norm(doc.at("feature_norm"));
    check_finite(m);
    return m;
  } catch (const json::exception& err) {
    throw DataError(std::string("model file: ") + err.what());
  }
}

LogisticModel parse_logistic_model(std::string_view text) {
  const json doc = parse_header(text, "logistic");
  try {
    const auto& layers = doc.at("layers");
    if (layers.size() != 1) throw DataError("logistic model must have 1 layer");
    LogisticModel m;
    read_layer(layers[0], m.params.w, m.params.b);
    m.norm = read_norm(doc.at("feature_norm"));
    check_finite(m);
    return m;
  } catch (const json::exception& err) {
    throw DataError(std::string("model file: ") + err.what());
  }
}

MlpModel load_mlp_model(const std::filesystem::path& path) { return parse_mlp_model(read_file(path)); }
LogisticModel load_logistic_model(const std::filesystem::path& path) { return parse_logistic_model(read_file(path)); }

std::string serialize_report(const EvalReport& report) {
  ordered_json doc;
  doc["mean_val_cross_entropy"] = report.mean_val_cross_entropy;
  doc["mean_val_accuracy"] = report.mean_val_accuracy;
  doc["per_split"] = ordered_json::array();
  for (const auto& s : report.per_split) {
    doc["per_split"].push_back({{"cross_entropy", s.cross_entropy},
                                {"accuracy", s.accuracy},
                                {"initial_train_loss", s.initial_train_loss},
                                {"final_train_loss", s.final_train_loss}});
  }
  return doc.dump(1) + "\n";
}

EvalReport parse_report(std::string_view text) {
  try {
    const json doc = json::parse(text);
    EvalReport r;
    r.mean_val_cross_entropy = doc.at("mean_val_cross_entropy").get<double>();
    r.mean_val_accuracy = doc.at("mean_val_accuracy").get<double>();
    for (const auto& s : doc.at("per_split")) {
      r.per_split.push_back({s.at("cross_entropy").get<double>(), s.at("accuracy").get<double>(),
                             s.value("initial_train_loss", 0.0), s.value("final_train_loss", 0.0)});
    }
    return r;
  } catch (const json::exception& err) {
    throw DataError(std::string("report file: ") + err.what());
  }
}

}  // namespace parksim
