#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "parksim/errors.hpp"
#include "parksim/offstreet_sim.hpp"
#include "path_oracle.hpp"
#include "test_graphs.hpp"

using namespace parksim;

namespace {

void add_constant_rates(LotRateTable& t, const std::string& lot, double arrivals, double departures) {
  for (int d = 0; d < 7; ++d)
    for (int h = 0; h < 24; ++h) t.set(lot, d, h, {arrivals, departures});
}

LotRateTable constant_rates(const std::string& lot, double arrivals, double departures) {
  LotRateTable t;
  add_constant_rates(t, lot, arrivals, departures);
  return t;
}

}  // namespace

TEST_CASE("three arrivals into an empty lot take the first three stalls") {
  LotState s = LotState::with_occupancy(10, 0);
  Rng rng(1);
  const auto r = apply_tick(s, 3, 0, LotSimConfig{}, rng);
  CHECK(r.stalls_passed == std::vector<int>{0, 1, 2});
  CHECK(r.parked == 3);
  CHECK(r.overflow == 0);
  CHECK(s.occupied_count() == 3);
  CHECK(s.occupied[0] == 1);
  CHECK(s.occupied[2] == 1);
  CHECK(s.occupied[3] == 0);
}

TEST_CASE("zero rates leave the lot untouched") {
  LotState s = LotState::with_occupancy(10, 4);
  const auto before = s.occupied;
  Rng rng(2);
  const auto r = sample_tick(s, 0.0, 0.0, LotSimConfig{}, rng);
  CHECK(r.arrivals == 0);
  CHECK(r.departures == 0);
  CHECK(s.occupied == before);
}

TEST_CASE("arrival wait time by hand") {
  const LotSimConfig cfg;
  CHECK(arrival_wait_time(1, 0, 0, cfg) == 60.0);
  CHECK(arrival_wait_time(3, 2, 10, cfg) == doctest::Approx(60 + 10 * 0.54 + (2.0 / 2) * 30 + (0.5 + 0.25) * 60).epsilon(1e-15));
  CHECK(std::abs(arrival_wait_time(3, 2, 10, cfg) - 140.4) <= 1e-9);
  CHECK(arrival_wait_time(60, 0, 0, cfg) == doctest::Approx(120.0).epsilon(1e-15));
  CHECK(arrival_wait_time(20, 0, 0, cfg) < 120.0);
  // Departures beyond the arrival index do not add waiting.
  CHECK(arrival_wait_time(1, 5, 0, cfg) == 60 + 0.5 * 30);
  LotSimConfig alt;
  alt.queue_uses_onstreet_minimum = true;
  CHECK(arrival_wait_time(3, 2, 10, alt) == doctest::Approx(60 + 5.4 + 30 + 0.75 * 210).epsilon(1e-15));
  CHECK_THROWS_AS(arrival_wait_time(0, 0, 0, cfg), std::invalid_argument);
}

TEST_CASE("per-tick counts have Poisson moments") {
  for (double lambda : {0.5, 5.0, 50.0}) {
    LotSimConfig cfg;
    Rng rng(static_cast<std::uint64_t>(lambda * 10));
    const int n = 10000;
    double sum = 0, sq = 0;
    LotState s = LotState::with_occupancy(100000, 0);
    for (int i = 0; i < n; ++i) {
      const auto r = sample_tick(s, lambda, 0.0, cfg, rng);
      sum += r.arrivals;
      sq += static_cast<double>(r.arrivals) * r.arrivals;
    }
    const double mu = lambda * cfg.tick_s / 3600;
    const double mean = sum / n;
    const double var = (sq - n * mean * mean) / (n - 1);
    CHECK(std::abs(mean - mu) <= 3 * std::sqrt(mu / n));
    CHECK(std::abs(var - mu) <= 3 * std::sqrt((mu + 2 * mu * mu) / n));
  }
}

TEST_CASE("ticks conserve cars and fill the lowest free stalls") {
  Rng rng(77);
  const LotSimConfig cfg;
  for (int lot = 0; lot < 20; ++lot) {
    const int cap = 1 + static_cast<int>(rng() % 30);
    LotState s = LotState::with_occupancy(cap, static_cast<int>(rng() % (cap + 1)));
    for (int t = 0; t < 500; ++t) {
      const int before = s.occupied_count();
      const auto snapshot = s.occupied;
      const int n_a = static_cast<int>(rng() % 6);
      const int n_d = static_cast<int>(rng() % 6);
      const auto r = apply_tick(s, n_a, n_d, cfg, rng);
      const int after = s.occupied_count();
      CHECK(after >= 0);
      CHECK(after <= cap);
      CHECK(r.departed == std::min(n_d, before));
      CHECK(r.parked == std::min(n_a, cap - before + r.departed));
      CHECK(r.overflow == n_a - r.parked);
      CHECK(after == before - r.departed + r.parked);
      REQUIRE(r.stalls_passed.size() == static_cast<std::size_t>(r.parked));
      CHECK(std::is_sorted(r.stalls_passed.begin(), r.stalls_passed.end()));
      // Below the last stall taken, every stall is now occupied.
      if (!r.stalls_passed.empty())
        for (int j = 0; j < r.stalls_passed.back(); ++j) CHECK(s.occupied[static_cast<std::size_t>(j)] == 1);
      // Freed stalls were occupied before.
      for (int j = 0; j < cap; ++j)
        if (snapshot[static_cast<std::size_t>(j)] == 0 && s.occupied[static_cast<std::size_t>(j)] == 1)
          CHECK(std::find(r.stalls_passed.begin(), r.stalls_passed.end(), j) != r.stalls_passed.end());
    }
  }
}

TEST_CASE("departures pick occupied stalls uniformly") {
  Rng rng(5);
  int freed[4] = {0, 0, 0, 0};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    LotState s = LotState::with_occupancy(4, 4);
    apply_tick(s, 0, 1, LotSimConfig{}, rng);
    for (int j = 0; j < 4; ++j)
      if (!s.occupied[static_cast<std::size_t>(j)]) ++freed[j];
  }
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  for (int c : freed) CHECK(std::abs(c - n / 4.0) <= 3 * sigma);
}

TEST_CASE("an hour with no arrivals has no wait samples") {
  const LotSpec lot{"L", "n0", 50};
  const auto rates = constant_rates("L", 0.0, 3.0);
  Rng rng(3);
  const auto stats = simulate_lot_hour(lot, rates, 2, 9, LotSimConfig{}, 10, rng);
  CHECK_FALSE(stats.mean_s.has_value());
  CHECK(stats.arrivals == 0);
}

TEST_CASE("lot hours are deterministic for a seed") {
  const LotSpec lot{"L", "n0", 30};
  const auto rates = constant_rates("L", 40.0, 30.0);
  Rng a(9), b(9);
  const auto x = simulate_lot_hour(lot, rates, 4, 12, LotSimConfig{}, 25, a);
  const auto y = simulate_lot_hour(lot, rates, 4, 12, LotSimConfig{}, 25, b);
  REQUIRE(x.mean_s.has_value());
  CHECK(*x.mean_s == *y.mean_s);
  CHECK(x.std_s == y.std_s);
  CHECK(x.arrivals == y.arrivals);
  CHECK(x.overflow > 0);  // 25 of 30 stalls start filled
  CHECK(*x.mean_s >= 60.0);
}

TEST_CASE("initial occupancy from cumulative flow") {
  CHECK(initial_occupancy({{0, 5}, {1, 3}}, {{0, 0}, {1, 2}}, 2, 100).count == 6);
  CHECK(initial_occupancy({{0, 0}, {1, 0}}, {{0, 0}, {1, 0}}, 2, 100).count == 0);
  CHECK(initial_occupancy({}, {}, 0, 10).count == 0);
  const auto full = initial_occupancy({{0, 8}, {1, 8}}, {{0, 0}, {1, 0}}, 2, 10);
  CHECK(full.count == 10);
  CHECK(full.clamped);
  try {
    initial_occupancy({{0, 5}}, {{0, 0}, {1, 0}}, 3, 10);
    FAIL("expected a gap error");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("entries@1") != std::string::npos);
    CHECK(msg.find("entries@2") != std::string::npos);
    CHECK(msg.find("departures@2") != std::string::npos);
  }
}

TEST_CASE("a quiet lot at the end of the destination block") {
  const RoadGraph g = testing::make_graph(3, {{0, 1, 100, 70, 10}, {1, 2, 100, 80, 20}, {2, 0, 100, 90, 30}});
  const std::vector<LotSpec> lots{{"L", "n1", 40}};
  const auto rates = constant_rates("L", 0.0, 0.0);
  const auto est = estimate_offstreet_time(g, lots, rates, 0, 0, 9, LotSimConfig{});
  CHECK(est.lot_id == "L");
  CHECK(est.drive_s == 5.0);
  CHECK(est.lot_s == 60.0);
  CHECK(est.walk_s == 35.0);
  CHECK(est.total_s == 5.0 + 60.0 + 35.0);
}

TEST_CASE("the lot with the shortest drive is chosen") {
  const RoadGraph g = testing::make_graph(4, {{0, 1, 100, 70, 10}, {1, 2, 100, 70, 10}, {2, 3, 100, 70, 10}, {3, 0, 100, 70, 10}});
  std::vector<LotSpec> lots{{"far", "n3", 40}, {"near", "n2", 40}};
  LotRateTable rates = constant_rates("far", 5.0, 5.0);
  add_constant_rates(rates, "near", 5.0, 5.0);
  for (int hour : {0, 9, 17}) {
    const auto est = estimate_offstreet_time(g, lots, rates, 0, 1, hour, LotSimConfig{});
    CHECK(est.lot_id == "near");
    CHECK(est.drive_s == 5.0 + 10.0);
    CHECK(est.walk_s == testing::min_simple_path(g, {g.node_index("n2")}, {0, 1}, false,
                                                 [&](EdgeIndex e) { return g.edge(e).walk_time_s; }) + 35.0);
  }
  // Ties go to the smaller id.
  lots = {{"b", "n2", 40}, {"a", "n2", 40}};
  add_constant_rates(rates, "a", 5.0, 5.0);
  add_constant_rates(rates, "b", 5.0, 5.0);
  CHECK(estimate_offstreet_time(g, lots, rates, 0, 1, 9, LotSimConfig{}).lot_id == "a");
}

TEST_CASE("off-street estimates are deterministic") {
  const RoadGraph g = testing::make_graph(3, {{0, 1, 100, 70, 10}, {1, 2, 100, 80, 20}, {2, 0, 100, 90, 30}});
  const std::vector<LotSpec> lots{{"L", "n2", 25}};
  const auto rates = constant_rates("L", 20.0, 18.0);
  LotSimConfig cfg;
  cfg.seed = 12;
  const auto a = estimate_offstreet_time(g, lots, rates, 1, 3, 14, cfg);
  const auto b = estimate_offstreet_time(g, lots, rates, 1, 3, 14, cfg);
  CHECK(a.total_s == b.total_s);
  CHECK(a.lot_std_s == b.lot_std_s);
}

TEST_CASE("lots files are validated") {
  const RoadGraph g = testing::make_graph(2, {{0, 1, 100, 70, 10}, {1, 0, 100, 70, 10}});
  const auto lots = parse_lots(R"([{"id": "A", "node": "n1", "capacity": 12}])", &g);
  REQUIRE(lots.size() == 1);
  CHECK(lots[0].capacity == 12);
  CHECK(parse_lots(serialize_lots(lots), &g)[0].node == "n1");
  CHECK_THROWS_AS(parse_lots(R"([{"id": "A", "node": "n9", "capacity": 12}])", &g), DataError);
  CHECK_THROWS_AS(parse_lots(R"([{"id": "A", "node": "n1", "capacity": 0}])", &g), DataError);
  CHECK_THROWS_AS(parse_lots(R"([{"id": "A", "node": "n1", "capacity": 3}, {"id": "A", "node": "n0", "capacity": 3}])", &g),
                  DataError);
  CHECK_THROWS_AS(parse_lots(R"({"id": "A"})", &g), DataError);
}
