#include <cmath>
#include <numeric>

#include "doctest.h"
#include "parksim/errors.hpp"
#include "parksim/onstreet_sim.hpp"
#include "path_oracle.hpp"
#include "test_graphs.hpp"

using namespace parksim;
using testing::make_graph;

namespace {

// Straight-line evaluation of the total search time for a recorded trace:
// park-and-pay, half of the first block, every later block in full minus half
// of the last one, then the walk back.
double trace_total(const RoadGraph& g, const std::vector<EdgeIndex>& trace, EdgeIndex dest, int hour, double t_min) {
  double drive = 0.0;
  if (trace.size() > 1) {
    drive = g.edge(trace.front()).drive_time_s[hour] / 2;
    for (std::size_t i = 1; i < trace.size(); ++i) drive += g.edge(trace[i]).drive_time_s[hour];
    drive -= g.edge(trace.back()).drive_time_s[hour] / 2;
  }
  return t_min + drive + testing::oracle_walk(g, trace.back(), dest);
}

}  // namespace

TEST_CASE("score of an unvisited destination block with certain availability") {
  const RoadGraph g = make_graph(2, {{0, 1, 100, 70, 10}, {1, 0, 100, 70, 10}});
  const auto dest = Destination::make(g, 0);
  const std::vector<double> probs{1.0, 1.0};
  SearchState s = SearchState::initial(g, 0);
  const std::vector<EdgeIndex> cand{0};
  const auto z = block_scores(s, cand, probs, dest, PolicyWeights{}, OnstreetConfig{});
  CHECK(z[0] == 449.0);
  s.visits[0] = 1;
  CHECK(block_scores(s, cand, probs, dest, PolicyWeights{}, OnstreetConfig{})[0] == 449.0 - 15.0);
}

TEST_CASE("score terms use their documented units") {
  const RoadGraph g = make_graph(3, {{0, 1, 100, 70, 10}, {1, 2, 300, 200, 30}, {2, 0, 100, 70, 10}, {1, 0, 100, 70, 10}});
  const auto dest = Destination::make(g, 0);
  std::vector<double> probs{0.5, 0.01, 0.5, 0.25};
  SearchState s = SearchState::initial(g, 1);
  s.elapsed_s = 600;
  s.last_check_s[1] = 480.0;  // checked two minutes ago
  const std::vector<EdgeIndex> cand{1, 3};
  const auto z = block_scores(s, cand, probs, dest, PolicyWeights{}, OnstreetConfig{});
  // e1 starts where the destination ends: D = (150 + 50) / 100, E = 2 min, P floored at 0.05.
  CHECK(z[0] == doctest::Approx(-2.0 + 15.0 * 2.0 - 1.0 / 0.05).epsilon(1e-14));
  // e3: shares both endpoints with the destination, D = 50 + 50 m; never checked.
  CHECK(z[1] == doctest::Approx(-1.0 + 15.0 * 30.0 - 4.0).epsilon(1e-14));
}

TEST_CASE("identical candidates get identical scores") {
  // Two parallel blocks between the same intersections.
  const RoadGraph g = make_graph(3, {{0, 1, 100, 70, 10}, {0, 1, 100, 70, 10}, {1, 2, 100, 70, 10}, {2, 0, 100, 70, 10}});
  const auto dest = Destination::make(g, 2);
  const std::vector<double> probs{0.4, 0.4, 0.7, 0.7};
  const auto s = SearchState::initial(g, 0);
  const auto z = block_scores(s, g.outgoing(0), probs, dest, PolicyWeights{}, OnstreetConfig{});
  REQUIRE(z.size() == 2);
  CHECK(z[0] == z[1]);
}

TEST_CASE("softmax by hand") {
  const auto p = softmax(std::vector<double>{0.0, std::log(3.0)});
  CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-15));
  const auto wide = softmax(std::vector<double>{-800.0, 0.0, 800.0});
  CHECK(wide[2] == 1.0);
  CHECK(std::accumulate(wide.begin(), wide.end(), 0.0) == 1.0);
}

TEST_CASE("softmax is exactly translation invariant") {
  const std::vector<double> z{1.5, -3.0, 449.0, 448.5};
  std::vector<double> shifted = z;
  for (double& v : shifted) v += 1024.0;  // exact in binary floating point
  CHECK(softmax(z) == softmax(shifted));
  Rng a(8), b(8);
  for (int i = 0; i < 1000; ++i) CHECK(choose_block(z, a) == choose_block(shifted, b));
}

TEST_CASE("equal scores are chosen uniformly") {
  Rng rng(12);
  const std::vector<double> z(4, 17.0);
  int counts[4] = {0, 0, 0, 0};
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[choose_block(z, rng)];
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  for (int c : counts) CHECK(std::abs(c - n * 0.25) <= 3 * sigma);
}

TEST_CASE("invalid scores") {
  Rng rng(1);
  CHECK_THROWS_AS(choose_block(std::vector<double>{0.0, NAN}, rng), NumericError);
  CHECK_THROWS_AS(choose_block(std::vector<double>{0.0, INFINITY}, rng), NumericError);
  CHECK_THROWS_AS(choose_block(std::vector<double>{}, rng), std::invalid_argument);
}

TEST_CASE("parking on the destination block costs exactly the minimum") {
  const RoadGraph g = make_graph(2, {{0, 1, 100, 70, 10}, {1, 0, 100, 70, 10}});
  Rng rng(3);
  const std::vector<double> probs{1.0, 1.0};
  const auto out = simulate_single(g, probs, Destination::make(g, 0), OnstreetConfig{}, PolicyWeights{}, 9, rng);
  CHECK(out.total_s == 210.0);
  CHECK(out.drive_s == 0.0);
  CHECK(out.walk_s == 0.0);
  CHECK(out.trace.size() == 1);
  const auto est = estimate_onstreet_time(g, probs, 0, OnstreetConfig{}, PolicyWeights{}, 9);
  CHECK(est.mean_s == 210.0);
  CHECK(est.std_s == 0.0);
  CHECK(est.censored_fraction == 0.0);
}

TEST_CASE("two-block search: drive and walk terms") {
  const RoadGraph g = make_graph(2, {{0, 1, 100, 30, 10}, {1, 0, 100, 30, 20}});
  Rng rng(3);
  const std::vector<double> probs{0.0, 1.0};
  const auto out = simulate_single(g, probs, Destination::make(g, 0), OnstreetConfig{}, PolicyWeights{}, 9, rng);
  REQUIRE(out.trace == std::vector<EdgeIndex>{0, 1});
  CHECK(out.drive_s == 10.0 / 2 + 20 - 20.0 / 2);
  CHECK(out.walk_s == 30.0 / 2 + 30.0 / 2);
  CHECK(out.total_s == 210 + 15 + 30);
  CHECK(out.total_s == trace_total(g, out.trace, 0, 9, 210));
}

TEST_CASE("searches on random graphs agree with a straight-line evaluation of their trace") {
  Rng graphs(44);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(graphs() % 5);
    const RoadGraph g = make_graph(n, testing::random_specs(graphs, n, 6));
    std::vector<double> probs(g.edge_count());
    for (auto& p : probs) p = 0.05 + 0.5 * uniform01(graphs);
    OnstreetConfig cfg;
    cfg.max_search_s = 400;
    for (EdgeIndex d = 0; d < g.edge_count(); ++d) {
      const auto dest = Destination::make(g, d);
      Rng rng = make_rng(trial, {d});
      for (int k = 0; k < 20; ++k) {
        const auto out = simulate_single(g, probs, dest, cfg, PolicyWeights{}, 12, rng);
        CHECK(out.trace.front() == d);
        for (std::size_t i = 1; i < out.trace.size(); ++i) CHECK(g.head(out.trace[i - 1]) == g.tail(out.trace[i]));
        CHECK(out.drive_s >= 0.0);
        CHECK(out.walk_s >= 0.0);
        CHECK(out.walk_s == testing::oracle_walk(g, out.trace.back(), d));
        if (out.censored) {
          CHECK(out.total_s == cfg.t_min_s + cfg.max_search_s + out.walk_s);
        } else {
          CHECK(out.total_s == cfg.t_min_s + out.drive_s + out.walk_s);
          CHECK(out.total_s == doctest::Approx(trace_total(g, out.trace, d, 12, cfg.t_min_s)).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("a search that never finds a spot is censored at the cap") {
  const RoadGraph g = make_graph(3, {{0, 1, 100, 70, 10}, {1, 2, 100, 70, 10}, {2, 0, 100, 70, 10}});
  const std::vector<double> probs{0.0, 0.0, 0.0};
  OnstreetConfig cfg;
  cfg.max_search_s = 100;
  cfg.n_samples = 10;
  Rng rng(1);
  const auto out = simulate_single(g, probs, Destination::make(g, 0), cfg, PolicyWeights{}, 9, rng);
  CHECK(out.censored);
  CHECK(out.total_s == cfg.t_min_s + cfg.max_search_s + out.walk_s);
  // Elapsed 5, 15, ..., 105: the eleventh traversal crosses the cap.
  CHECK(out.trace.size() == 11);
  const auto est = estimate_onstreet_time(g, probs, 0, cfg, PolicyWeights{}, 9);
  CHECK(est.censored_fraction == 1.0);
}

TEST_CASE("single self-loop block: geometric number of laps") {
  // Each miss costs one more lap of d = 20 s; with P = 0.5 the number of
  // extra laps is geometric with mean 1 and variance 2.
  const RoadGraph g = make_graph(1, {{0, 0, 100, 70, 20}});
  const std::vector<double> probs{0.5};
  OnstreetConfig cfg;
  cfg.n_samples = 4000;
  cfg.seed = 21;
  const auto est = estimate_onstreet_time(g, probs, 0, cfg, PolicyWeights{}, 9);
  const double mean = 210 + 20 * 1.0;
  const double sd = 20 * std::sqrt(2.0);
  CHECK(std::abs(est.mean_s - mean) <= 3 * sd / std::sqrt(cfg.n_samples));
  CHECK(est.std_s == doctest::Approx(sd).epsilon(0.1));
}

TEST_CASE("estimates are deterministic for a seed and differ across seeds") {
  const RoadGraph g = make_graph(3, {{0, 1, 100, 70, 10}, {1, 2, 100, 70, 10}, {2, 0, 100, 70, 10}, {1, 0, 90, 60, 9}});
  const std::vector<double> probs{0.3, 0.2, 0.4, 0.1};
  OnstreetConfig cfg;
  cfg.seed = 4;
  const auto a = estimate_onstreet_time(g, probs, 1, cfg, PolicyWeights{}, 9);
  const auto b = estimate_onstreet_time(g, probs, 1, cfg, PolicyWeights{}, 9);
  CHECK(a.mean_s == b.mean_s);
  CHECK(a.std_s == b.std_s);
  cfg.seed = 5;
  CHECK(estimate_onstreet_time(g, probs, 1, cfg, PolicyWeights{}, 9).mean_s != a.mean_s);
  CHECK_THROWS_AS(estimate_onstreet_time(g, std::vector<double>{0.5}, 1, cfg, PolicyWeights{}, 9), DataError);
}
