// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "parksim/errors.hpp"
#include "parksim/ingest.hpp"
#include "parksim/network.hpp"
#include "parksim/offstreet_sim.hpp"
#include "parksim/onstreet_sim.hpp"
#include "parksim/pipeline.hpp"
#include "parksim/road_graph.hpp"
#include "parksim/training.hpp"
#include "path_oracle.hpp"
#include "random_models.hpp"
#include "synthetic_data.hpp"
#include "test_graphs.hpp"

using namespace parksim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome count_parameters() {
  const MlpModel m;
  const int n = parksim::parameter_count(m.params);
  return {n == 1142, "MlpModel has " + std::to_string(n) + " parameters"};
}

Outcome gradient_correctness() {
  Rng rng(make_rng(1, {stable_hash("gradient")}));
  double worst = 0.0;
  int checked = 0;
  while (checked < 20) {
    const auto m = testing::random_model<MlpParams<double>>(rng);
    const auto batch = testing::random_batch(rng, 8);
    // Finite differences are undefined on a ReLU kink.
    if (testing::min_abs_preactivation(m, batch) < 1e-4) continue;
    worst = std::max(worst, testing::gradient_check(m, batch));
    ++checked;
  }
  return {worst <= 1e-4, fmt("max relative error %.3g over 20 (model, batch) pairs", worst)};
}

Outcome forward_normalization() {
  Rng rng(make_rng(1, {stable_hash("normalization")}));
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto m = testing::random_model<MlpParams<double>>(rng, i % 2 ? 1.0 : 20.0);
    const auto p = forward(m, testing::random_features(rng));
    worst = std::max(worst, std::abs(p.p_available + p.p_full - 1.0));
  }
  return {worst <= 1e-12, fmt("max |sum - 1| = %.3g over 10000 inputs", worst)};
}

Outcome model_vs_baseline() {
  Rng rng(make_rng(1, {stable_hash("xor")}));
  const auto data = testing::xor_interaction(rng, 5000);
  TrainConfig cfg;
  cfg.seed = 1;
  const auto mlp = train(data, cfg);
  const auto base = train_baseline(data, cfg);
  const double a = mlp.report.mean_val_cross_entropy;
  const double b = base.report.mean_val_cross_entropy;
  return {a <= b - 0.02, fmt("validation cross-entropy %.4f (network) vs %.4f (baseline)", a, b)};
}

Outcome destination_parking() {
  const RoadGraph g = testing::make_graph(2, {{0, 1, 100, 70, 10}, {1, 0, 100, 70, 10}});
  const std::vector<double> probs{1.0, 1.0};
  Rng rng(5);
  const auto one = simulate_single(g, probs, Destination::make(g, 0), OnstreetConfig{}, PolicyWeights{}, 12, rng);
  const auto est = estimate_onstreet_time(g, probs, 0, OnstreetConfig{}, PolicyWeights{}, 12);
  return {one.total_s == 210.0 && est.mean_s == 210.0, fmt("single search %.17g s, mean %.17g s", one.total_s, est.mean_s)};
}

Outcome lot_wait_cases() {
  const LotSimConfig cfg;
  const double first = arrival_wait_time(1, 0, 0, cfg);
  const double third = arrival_wait_time(3, 2, 10, cfg);
  return {first == 60.0 && std::abs(third - 140.4) <= 1e-9, fmt("T(1,0,0) = %.17g s, T(3,2,10) = %.17g s", first, third)};
}

Outcome poisson_fidelity() {
  std::string detail;
  bool ok = true;
  for (double lambda : {0.5, 5.0, 50.0}) {
    const LotSimConfig cfg;
    Rng rng(make_rng(1, {stable_hash("poisson"), static_cast<std::uint64_t>(lambda * 10)}));
    // Matching departures keep a modest lot away from both bounds.
    LotState s = LotState::with_occupancy(4000, 2000);
    const int n = 10000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
      const auto r = sample_tick(s, lambda, lambda, cfg, rng);
      sum += r.arrivals;
      sq += static_cast<double>(r.arrivals) * r.arrivals;
    }
    const double mu = lambda * cfg.tick_s / 3600;
    const double mean = sum / n;
    const double var = (sq - n * mean * mean) / (n - 1);
    // Standard errors of the sample mean and variance of a Poisson count.
    const double mean_z = std::abs(mean - mu) / std::sqrt(mu / n);
    const double var_z = std::abs(var - mu) / std::sqrt((mu + 2 * mu * mu) / n);
    ok = ok && mean_z <= 3 && var_z <= 3;
    detail += fmt("lambda=%g: ", lambda) + fmt("mean %.2f sigma, var %.2f sigma; ", mean_z, var_z);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Outcome lot_conservation() {
  Rng rng(make_rng(1, {stable_hash("conservation")}));
  const LotSimConfig cfg;
  const int cap = 40;
  LotState s = LotState::with_occupancy(cap, 20);
  int violations = 0;
  for (int t = 0; t < 10000; ++t) {
    const int before = s.occupied_count();
    const double lambda_a = 200 * uniform01(rng);
    const double lambda_d = 200 * uniform01(rng);
    const auto r = sample_tick(s, lambda_a, lambda_d, cfg, rng);
    const int after = s.occupied_count();
    const bool ok = after >= 0 && after <= cap && r.departed == std::min(r.departures, before) &&
                    r.parked == std::min(r.arrivals, cap - before + r.departed) &&
                    r.overflow == r.arrivals - r.parked && after == before - r.departed + r.parked;
    violations += !ok;
  }
  return {violations == 0, std::to_string(violations) + " violations over 10000 ticks"};
}

Outcome shortest_paths() {
  Rng rng(make_rng(1, {stable_hash("paths")}));
  long compared = 0, mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const RoadGraph g = testing::make_graph(n, testing::random_specs(rng, n, static_cast<int>(rng() % 8)));
    const int hour = static_cast<int>(rng() % 24);
    for (EdgeIndex a = 0; a < g.edge_count(); ++a)
      for (EdgeIndex b = 0; b < g.edge_count(); ++b) {
        mismatches += shortest_drive_time(g, a, b, hour) != testing::oracle_drive(g, a, b, hour);
        mismatches += shortest_walk_time(g, a, b) != testing::oracle_walk(g, a, b);
        compared += 2;
      }
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in " + std::to_string(compared) + " queries"};
}

Outcome softmax_policy() {
  Rng rng(make_rng(1, {stable_hash("softmax")}));
  const int k = 5, n = 10000;
  const std::vector<double> equal(k, 3.25);
  std::vector<int> counts(k, 0);
  for (int i = 0; i < n; ++i) ++counts[choose_block(equal, rng)];
  const double p = 1.0 / k;
  const double sigma = std::sqrt(n * p * (1 - p));
  double worst_z = 0;
  for (int c : counts) worst_z = std::max(worst_z, std::abs(c - n * p) / sigma);

  bool invariant = true;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> z(2 + rng() % 8);
    for (double& v : z) v = std::ldexp(static_cast<double>(rng() % 4096) - 2048, -4);
    std::vector<double> shifted = z;
    // Both operands are dyadic with few bits, so the shift is exact.
    const double c = std::ldexp(static_cast<double>(rng() % 2048) - 1024, -2);
    for (double& v : shifted) v += c;
    invariant = invariant && softmax(z) == softmax(shifted);
    Rng a(trial), b(trial);
    for (int i = 0; i < 50; ++i) invariant = invariant && choose_block(z, a) == choose_block(shifted, b);
  }
  return {worst_z <= 3 && invariant,
          fmt("max deviation %.2f sigma", worst_z) + (invariant ? "; translation invariant" : "; NOT translation invariant")};
}

Outcome smoothing_conservation() {
  Rng rng(make_rng(1, {stable_hash("smoothing")}));
  SmoothingConfig cfg;
  cfg.peak_hours = {9, 18};
  double worst = 0;
  int negatives = 0;
  for (int trial = 0; trial < 100; ++trial) {
    // Start at 21:00 so the first 09:00 peak has a full window before it.
    HourlySeries s{parse_timestamp("2023-12-31T21:00:00"), std::vector<double>(24 * 14)};
    for (double& v : s.counts) v = static_cast<double>(rng() % 25);
    for (int k = 0; k < 12; ++k) s.counts[12 + rng() % (s.counts.size() - 12)] += static_cast<double>(rng() % 400);
    const auto out = smooth_departures(s, cfg);
    worst = std::max(worst, std::abs(out.total() - s.total()));
    for (double v : out.counts) negatives += v < 0;
  }
  return {worst <= 1e-6 && negatives == 0, fmt("max total drift %.3g, ", worst) + std::to_string(negatives) + " negative counts"};
}

struct CityRun {
  fs::path city;
  RunConfig cfg;
};

CityRun run_city(const fs::path& root) {
  fs::remove_all(root);
  fs::create_directories(root);
  RunConfig synth = parse_run_config(R"({"out_dir": "city"})", root);
  synth.set_seed(1);
  run_synth(synth);
  RunConfig cfg = load_run_config(root / "city" / "parksim.json");
  run_pipeline(cfg);
  return {root / "city", cfg};
}

std::map<std::string, std::string> tree_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
  return out;
}

Outcome determinism(const CityRun& a, const CityRun& b) {
  const auto ta = tree_contents(a.city);
  const auto tb = tree_contents(b.city);
  std::size_t differing = 0;
  for (const auto& [name, bytes] : ta) {
    const auto it = tb.find(name);
    differing += it == tb.end() || it->second != bytes;
  }
  differing += tb.size() > ta.size() ? tb.size() - ta.size() : 0;
  return {differing == 0 && !ta.empty(),
          std::to_string(ta.size()) + " files compared, " + std::to_string(differing) + " differ"};
}

Outcome lot_neighbourhood(const CityRun& run) {
  const RoadGraph g = load_graph(run.cfg.out_dir / files::kGraph);
  const auto lots = parse_lots(slurp(run.cfg.lots), &g);
  const auto& lot = g.node(g.node_index(lots.at(0).node));
  double clat = 0, clon = 0;
  for (const auto& n : g.nodes()) clat += n.lat, clon += n.lon;
  clat /= static_cast<double>(g.node_count());
  clon /= static_cast<double>(g.node_count());

  struct Mid {
    std::string id;
    double to_lot, to_center;
  };
  std::vector<Mid> mids;
  for (EdgeIndex e = 0; e < g.edge_count(); ++e) {
    const auto& a = g.node(g.tail(e));
    const auto& b = g.node(g.head(e));
    const double lat = (a.lat + b.lat) / 2, lon = (a.lon + b.lon) / 2;
    mids.push_back({g.edge(e).id, std::hypot(lat - lot.lat, lon - lot.lon), std::hypot(lat - clat, lon - clon)});
  }
  std::vector<std::string> near, corner;
  std::sort(mids.begin(), mids.end(), [](const Mid& x, const Mid& y) { return x.to_lot < y.to_lot; });
  for (int i = 0; i < 8; ++i) near.push_back(mids[i].id);
  std::sort(mids.begin(), mids.end(), [](const Mid& x, const Mid& y) { return x.to_center > y.to_center; });
  for (int i = 0; i < 8; ++i) corner.push_back(mids[i].id);

  std::map<int, std::map<std::string, double>> delta;
  for (const auto& r : join_estimates(slurp(run.cfg.out_dir / files::kOnstreet), slurp(run.cfg.out_dir / files::kOffstreet)))
    delta[r.hour][r.block_id] = r.delta_s;
  bool ok = !delta.empty();
  double worst_gap = INFINITY;
  int worst_hour = -1;
  double near_at = 0, corner_at = 0;
  for (auto& [hour, by_block] : delta) {
    double n = 0, c = 0;
    for (const auto& id : near) n += by_block.at(id) / 8;
    for (const auto& id : corner) c += by_block.at(id) / 8;
    ok = ok && n < c;
    if (c - n < worst_gap) worst_gap = c - n, worst_hour = hour, near_at = n, corner_at = c;
  }
  return {ok, "every hour holds; closest at hour " + std::to_string(worst_hour) +
                  fmt(": near-lot mean delta %.1f s vs corner %.1f s", near_at, corner_at)};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("%s %2d %-28s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  report(1, "parameter count", count_parameters);
  report(2, "gradient correctness", gradient_correctness);
  report(3, "forward normalization", forward_normalization);
  report(4, "network vs baseline", model_vs_baseline);
  report(5, "destination parking", destination_parking);
  report(6, "lot wait closed cases", lot_wait_cases);
  report(7, "Poisson fidelity", poisson_fidelity);
  report(8, "lot conservation", lot_conservation);
  report(9, "shortest-path oracle", shortest_paths);
  report(10, "softmax policy", softmax_policy);
  report(11, "smoothing conservation", smoothing_conservation);

  // Criteria 12 and 13 share the synthetic city runs. Stage logs go to a
  // buffer so the PASS/FAIL lines stay readable.
  const fs::path root = fs::temp_directory_path() / "parksim_acceptance";
  std::optional<CityRun> first, second;
  std::string city_error;
  const auto city_start = std::chrono::steady_clock::now();
  {
    std::ostringstream sink;
    auto* old = std::cout.rdbuf(sink.rdbuf());
    try {
      first = run_city(root / "a");
      second = run_city(root / "b");
    } catch (const std::exception& e) {
      city_error = e.what();
    }
    std::cout.rdbuf(old);
  }
  const double city_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - city_start).count();
  std::printf("     two synthetic city runs took %.1f s\n", city_secs);
  report(12, "end-to-end determinism", [&]() -> Outcome {
    if (!first || !second) return {false, "pipeline failed: " + city_error};
    return determinism(*first, *second);
  });
  report(13, "lot neighbourhood delta", [&]() -> Outcome {
    if (!first) return {false, "pipeline failed: " + city_error};
    return lot_neighbourhood(*first);
  });
  fs::remove_all(root);

  std::printf("%d of 13 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
