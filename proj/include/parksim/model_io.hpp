#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "parksim/network.hpp"
#include "parksim/training.hpp"

namespace parksim {

inline constexpr int kModelFormatVersion = 1;

// Model files are JSON: {"format_version", "kind" ("mlp" | "logistic"),
// "layers": [{"rows", "cols", "weights" (row-major rows x cols), "bias"}],
// "feature_norm": {"mean", "std"}}.

std::string serialize_model(const MlpModel& m);
std::string serialize_model(const LogisticModel& m);
MlpModel parse_mlp_model(std::string_view json_text);
LogisticModel parse_logistic_model(std::string_view json_text);

MlpModel load_mlp_model(const std::filesystem::path& path);
LogisticModel load_logistic_model(const std::filesystem::path& path);

std::string serialize_report(const EvalReport& report);
EvalReport parse_report(std::string_view json_text);

}  // namespace parksim
