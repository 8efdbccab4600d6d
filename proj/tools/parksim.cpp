// parksim: ingest city parking data, learn block availability, and compare
// on-street cruising against the nearest garage, block by block.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "parksim/errors.hpp"
#include "parksim/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kNumeric = 4 };

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> hours;
  std::optional<std::string> out;
};

parksim::RunConfig resolve_config(const Overrides& o) {
  parksim::RunConfig cfg = parksim::load_run_config(o.config);
  if (o.seed) cfg.set_seed(*o.seed);
  if (o.hours) cfg.hours = parksim::parse_hours(*o.hours);
  if (o.out) cfg.out_dir = *o.out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parksim: on-street vs. off-street parking time estimates"};
  app.require_subcommand(1);

  Overrides o;
  struct Stage {
    const char* name;
    const char* help;
    void (*run)(const parksim::RunConfig&);
  };
  const Stage stages[] = {
      {"synth", "generate a synthetic city bundle into the output directory", parksim::run_synth},
      {"ingest", "validate inputs; write graph, occupancy samples and lot rates", parksim::run_ingest},
      {"train", "train the availability network and the logistic baseline", parksim::run_train},
      {"eval", "score the trained models on all samples", parksim::run_eval},
      {"predict", "per-block availability probabilities for each hour", parksim::run_predict},
      {"sim-on", "on-street search time per block and hour", parksim::run_sim_on},
      {"sim-off", "garage time per block and hour", parksim::run_sim_off},
      {"diff", "join both estimates; write diff.csv and GeoJSON maps", parksim::run_diff},
      {"pipeline", "ingest through diff in one go", parksim::run_pipeline},
  };
  const Stage* chosen = nullptr;
  for (const auto& s : stages) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", o.config, "run configuration (JSON)")->required();
    sub->add_option("--seed", o.seed, "base seed for every random stream");
    sub->add_option("--hours", o.hours, "hours to evaluate, e.g. 8-18 or 7,12,17");
    sub->add_option("--out", o.out, "output directory");
    sub->callback([&chosen, &s] { chosen = &s; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    const parksim::RunConfig cfg = resolve_config(o);
    chosen->run(cfg);
  } catch (const parksim::ConfigError& e) {
    std::cerr << "parksim: config error: " << e.what() << "\n";
    return kConfig;
  } catch (const parksim::NumericError& e) {
    std::cerr << "parksim: numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const parksim::DataError& e) {
    std::cerr << "parksim: data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "parksim: error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
