#include "parksim/onstreet_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "parksim/errors.hpp"

namespace parksim {

void PolicyWeights::validate() const {
  for (double v : {distance, visits, elapsed, availability})
    if (!std::isfinite(v)) throw ConfigError("policy weights must be finite");
}

void OnstreetConfig::validate() const {
  for (double v : {t_min_s, max_search_s, e_cap_s, p_floor})
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("onstreet config values must be positive");
  if (n_samples < 1) throw ConfigError("onstreet.n_samples must be positive");
  if (p_floor > 1.0) throw ConfigError("onstreet.p_floor must not exceed 1");
}

SearchState SearchState::initial(const RoadGraph& g, NodeIndex start) {
  SearchState s;
  s.current_node = start;
  s.visits.assign(g.edge_count(), 0);
  s.last_check_s.assign(g.edge_count(), std::nullopt);
  return s;
}

Destination Destination::make(const RoadGraph& g, EdgeIndex block) {
  return {block, distances_to_block_m(g, block), walk_times_to_block(g, block)};
}

std::vector<double> block_scores(const SearchState& state, std::span<const EdgeIndex> candidates,
                                 std::span<const double> probs, const Destination& dest, const PolicyWeights& w,
                                 const OnstreetConfig& cfg) {
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (EdgeIndex e : candidates) {
    const double d = dest.distance_m[e] / 100.0;
    const double n = state.visits[e];
    const auto& last = state.last_check_s[e];
    const double since = last ? std::min(state.elapsed_s - *last, cfg.e_cap_s) : cfg.e_cap_s;
    const double p = std::max(probs[e], cfg.p_floor);
    scores.push_back(w.distance * d + w.visits * n + w.elapsed * (since / 60.0) + w.availability / p);
  }
  return scores;
}

std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("softmax of an empty score list");
  for (double z : scores)
    if (!std::isfinite(z)) throw NumericError("non-finite block score");
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) sum += (p[i] = std::exp(scores[i] - top));
  for (double& v : p) v /= sum;
  return p;
}

std::size_t choose_block(std::span<const double> scores, Rng& rng) {
  const auto p = softmax(scores);
  double u = uniform01(rng);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    if (u < p[i]) return i;
    u -= p[i];
  }
  return p.size() - 1;
}

SearchOutcome simulate_single(const RoadGraph& g, std::span<const double> probs, const Destination& dest,
                              const OnstreetConfig& cfg, const PolicyWeights& w, int hour, Rng& rng) {
  if (probs.size() != g.edge_count()) throw DataError("probability table does not cover every block");
  SearchOutcome out;
  SearchState state = SearchState::initial(g, g.tail(dest.block));
  EdgeIndex block = dest.block;
  out.trace.push_back(block);

  while (true) {
    ++state.visits[block];
    state.last_check_s[block] = state.elapsed_s;

    if (uniform01(rng) < probs[block]) {
      const std::size_t n = out.trace.size();
      double drive = 0.0;
      if (n > 1) {
        drive = g.edge(out.trace.front()).drive_time_s[hour] / 2.0;
        for (std::size_t i = 1; i < n; ++i) drive += g.edge(out.trace[i]).drive_time_s[hour];
        drive -= g.edge(out.trace.back()).drive_time_s[hour] / 2.0;
      }
      out.parked_block = block;
      out.drive_s = drive;
      out.walk_s = dest.walk_s[block];
      out.total_s = cfg.t_min_s + out.drive_s + out.walk_s;
      return out;
    }

    const double d = g.edge(block).drive_time_s[hour];
    state.elapsed_s += out.trace.size() == 1 ? d / 2.0 : d;
    state.current_node = g.head(block);
    if (state.elapsed_s > cfg.max_search_s) {
      out.parked_block = block;
      out.censored = true;
      out.drive_s = cfg.max_search_s;
      out.walk_s = dest.walk_s[block];
      out.total_s = cfg.t_min_s + cfg.max_search_s + out.walk_s;
      return out;
    }

    const auto candidates = g.outgoing(state.current_node);
    const auto scores = block_scores(state, candidates, probs, dest, w, cfg);
    block = candidates[choose_block(scores, rng)];
    out.trace.push_back(block);
  }
}

OnstreetEstimate estimate_onstreet_time(const RoadGraph& g, std::span<const double> probs, const Destination& dest,
                                        const OnstreetConfig& cfg, const PolicyWeights& w, int hour) {
  cfg.validate();
  Rng rng = make_rng(cfg.seed, {stable_hash(g.edge(dest.block).id), static_cast<std::uint64_t>(hour)});
  double sum = 0.0;
  double sum_sq = 0.0;
  int censored = 0;
  std::vector<double> totals;
  totals.reserve(static_cast<std::size_t>(cfg.n_samples));
  for (int i = 0; i < cfg.n_samples; ++i) {
    const auto outcome = simulate_single(g, probs, dest, cfg, w, hour, rng);
    totals.push_back(outcome.total_s);
    sum += outcome.total_s;
    if (outcome.censored) ++censored;
  }
  OnstreetEstimate est;
  est.n_samples = cfg.n_samples;
  est.mean_s = sum / cfg.n_samples;
  for (double t : totals) sum_sq += (t - est.mean_s) * (t - est.mean_s);
  est.std_s = cfg.n_samples > 1 ? std::sqrt(sum_sq / (cfg.n_samples - 1)) : 0.0;
  est.censored_fraction = static_cast<double>(censored) / cfg.n_samples;
  return est;
}

OnstreetEstimate estimate_onstreet_time(const RoadGraph& g, std::span<const double> probs, EdgeIndex dest,
                                        const OnstreetConfig& cfg, const PolicyWeights& w, int hour) {
  return estimate_onstreet_time(g, probs, Destination::make(g, dest), cfg, w, hour);
}

}  // namespace parksim
