#include "parksim/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "parksim/csv.hpp"
#include "parksim/errors.hpp"
#include "parksim/features.hpp"
#include "parksim/model_io.hpp"
#include "parksim/road_graph.hpp"
#include "parksim/time.hpp"
#include "parksim/travel_times.hpp"

namespace parksim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config reading. Unknown keys are rejected so typos do not silently fall back
// to defaults.

void check_keys(const json& obj, std::string_view section, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out, std::string_view section) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(section) + "." + key + ": " + e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() ? base / path : path;
}

void read_train(const json& j, TrainConfig& c) {
  check_keys(j, "train", {"splits", "validation_fraction", "epochs", "learning_rate", "batch_size", "init_scale"});
  read_opt(j, "splits", c.splits, "train");
  read_opt(j, "validation_fraction", c.validation_fraction, "train");
  read_opt(j, "epochs", c.epochs, "train");
  read_opt(j, "learning_rate", c.learning_rate, "train");
  read_opt(j, "batch_size", c.batch_size, "train");
  read_opt(j, "init_scale", c.init_scale, "train");
}

void read_onstreet(const json& j, OnstreetConfig& c) {
  check_keys(j, "onstreet", {"t_min_s", "max_search_s", "n_samples", "e_cap_s", "p_floor"});
  read_opt(j, "t_min_s", c.t_min_s, "onstreet");
  read_opt(j, "max_search_s", c.max_search_s, "onstreet");
  read_opt(j, "n_samples", c.n_samples, "onstreet");
  read_opt(j, "e_cap_s", c.e_cap_s, "onstreet");
  read_opt(j, "p_floor", c.p_floor, "onstreet");
}

void read_policy(const json& j, PolicyWeights& w) {
  check_keys(j, "policy", {"distance", "visits", "elapsed", "availability"});
  read_opt(j, "distance", w.distance, "policy");
  read_opt(j, "visits", w.visits, "policy");
  read_opt(j, "elapsed", w.elapsed, "policy");
  read_opt(j, "availability", w.availability, "policy");
}

void read_offstreet(const json& j, LotSimConfig& c) {
  check_keys(j, "offstreet",
             {"t_prime_min_s", "t_wait_s", "t_1_s", "tick_s", "reps", "queue_uses_onstreet_minimum"});
  read_opt(j, "t_prime_min_s", c.t_prime_min_s, "offstreet");
  read_opt(j, "t_wait_s", c.t_wait_s, "offstreet");
  read_opt(j, "t_1_s", c.t_1_s, "offstreet");
  read_opt(j, "tick_s", c.tick_s, "offstreet");
  read_opt(j, "reps", c.reps, "offstreet");
  read_opt(j, "queue_uses_onstreet_minimum", c.queue_uses_onstreet_minimum, "offstreet");
}

void read_smoothing(const json& j, SmoothingConfig& c) {
  check_keys(j, "smoothing", {"peak_hours", "sigma_h", "span_h"});
  read_opt(j, "peak_hours", c.peak_hours, "smoothing");
  read_opt(j, "sigma_h", c.sigma_h, "smoothing");
  read_opt(j, "span_h", c.span_h, "smoothing");
}

void read_synth(const json& j, SynthConfig& c) {
  check_keys(j, "synth",
             {"rows", "cols", "block_length_m", "length_jitter", "meter_spacing_m", "unmetered_fraction",
              "observed_fraction", "unpaid_fraction", "start_date", "onstreet_days", "survey_sweeps_per_block",
              "missing_timestamp_fraction", "free_flow_speed_mps", "walk_speed_mps", "peak_slowdown",
              "central_load", "edge_load", "lot_weeks", "lot_peak_arrivals_per_hour", "promo_fraction",
              "promo_hour", "lots"});
  read_opt(j, "rows", c.rows, "synth");
  read_opt(j, "cols", c.cols, "synth");
  read_opt(j, "block_length_m", c.block_length_m, "synth");
  read_opt(j, "length_jitter", c.length_jitter, "synth");
  read_opt(j, "meter_spacing_m", c.meter_spacing_m, "synth");
  read_opt(j, "unmetered_fraction", c.unmetered_fraction, "synth");
  read_opt(j, "observed_fraction", c.observed_fraction, "synth");
  read_opt(j, "unpaid_fraction", c.unpaid_fraction, "synth");
  read_opt(j, "start_date", c.start_date, "synth");
  read_opt(j, "onstreet_days", c.onstreet_days, "synth");
  read_opt(j, "survey_sweeps_per_block", c.survey_sweeps_per_block, "synth");
  read_opt(j, "missing_timestamp_fraction", c.missing_timestamp_fraction, "synth");
  read_opt(j, "free_flow_speed_mps", c.free_flow_speed_mps, "synth");
  read_opt(j, "walk_speed_mps", c.walk_speed_mps, "synth");
  read_opt(j, "peak_slowdown", c.peak_slowdown, "synth");
  read_opt(j, "central_load", c.central_load, "synth");
  read_opt(j, "edge_load", c.edge_load, "synth");
  read_opt(j, "lot_weeks", c.lot_weeks, "synth");
  read_opt(j, "lot_peak_arrivals_per_hour", c.lot_peak_arrivals_per_hour, "synth");
  read_opt(j, "promo_fraction", c.promo_fraction, "synth");
  read_opt(j, "promo_hour", c.promo_hour, "synth");
  if (j.contains("lots")) {
    const auto& lots = j.at("lots");
    if (!lots.is_array()) throw ConfigError("synth.lots: expected a list");
    c.lots.clear();
    for (const auto& l : lots) {
      check_keys(l, "synth.lots[]", {"row", "col", "capacity"});
      SynthLot s;
      read_opt(l, "row", s.row, "synth.lots[]");
      read_opt(l, "col", s.col, "synth.lots[]");
      read_opt(l, "capacity", s.capacity, "synth.lots[]");
      c.lots.push_back(s);
    }
  }
}

// ---------------------------------------------------------------------------
// Stage plumbing.

// Re-throws with the stage name prefixed, keeping the error category.
void in_stage(std::string_view stage, const std::function<void()>& body) {
  const auto msg = [&](const std::exception& e) { return std::string(stage) + ": " + e.what(); };
  try {
    body();
  } catch (const ConfigError& e) {
    throw ConfigError(msg(e));
  } catch (const NumericError& e) {
    throw NumericError(msg(e));
  } catch (const DataError& e) {
    throw DataError(msg(e));
  } catch (const fs::filesystem_error& e) {
    throw DataError(msg(e));
  } catch (const json::exception& e) {
    throw DataError(msg(e));
  }
}

const fs::path& require_input(const fs::path& p, std::string_view what) {
  if (p.empty()) throw ConfigError(std::string(what) + " path is not set");
  if (!fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
  return p;
}

fs::path require_output(const RunConfig& cfg, const char* name, std::string_view producer) {
  fs::path p = cfg.out_dir / name;
  if (!fs::exists(p)) throw DataError(p.string() + " is missing; run '" + std::string(producer) + "' first");
  return p;
}

Timestamp run_date(const RunConfig& cfg) {
  if (cfg.date.empty()) throw ConfigError("date is not set");
  try {
    return parse_date(cfg.date);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("date: ") + e.what());
  }
}

std::optional<fs::path> directions_cache_path(const RunConfig& cfg) {
  if (const char* env = std::getenv("PARKSIM_DIRECTIONS_CACHE"); env && *env) return fs::path(env);
  return cfg.directions_cache;
}

// Runs body(i) for i in [0, n) on all cores. Results must be written to
// per-index slots so output does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string report_json(const EvalReport& mlp, const EvalReport& baseline) {
  json j;
  j["mlp"] = json::parse(serialize_report(mlp));
  j["baseline"] = json::parse(serialize_report(baseline));
  return j.dump(2) + "\n";
}

// probabilities.csv -> hour -> per-edge p_available.
std::map<int, std::vector<double>> read_probabilities(const fs::path& path, const RoadGraph& g) {
  const auto table = read_csv(path, {"block_id", "hour", "p_available"});
  std::map<int, std::vector<double>> out;
  std::map<int, std::vector<bool>> seen;
  for (const auto& row : table.rows) {
    const EdgeIndex e = g.edge_index(row[0]);
    const int hour = static_cast<int>(parse_int(row[1], "hour"));
    if (hour < 0 || hour > 23) throw DataError(path.string() + ": hour out of range: " + row[1]);
    const double p = parse_double(row[2], "p_available");
    if (!(p >= 0.0 && p <= 1.0)) throw DataError(path.string() + ": probability outside [0,1]: " + row[2]);
    auto& v = out[hour];
    auto& s = seen[hour];
    if (v.empty()) {
      v.assign(g.edge_count(), 0.0);
      s.assign(g.edge_count(), false);
    }
    v[e] = p;
    s[e] = true;
  }
  for (const auto& [hour, s] : seen) {
    if (std::find(s.begin(), s.end(), false) != s.end())
      throw DataError(path.string() + ": hour " + std::to_string(hour) + " does not cover every block");
  }
  return out;
}

std::string rates_weeks_note(int weeks) { return std::to_string(weeks) + (weeks == 1 ? " week" : " weeks"); }

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  train.seed = s;
  onstreet.seed = s;
  offstreet.seed = s;
  synth.seed = s;
}

void RunConfig::validate() const {
  if (out_dir.empty()) throw ConfigError("out_dir is empty");
  if (hours.empty()) throw ConfigError("hours is empty");
  for (int h : hours)
    if (h < 0 || h > 23) throw ConfigError("hour out of range: " + std::to_string(h));
  if (rate_weeks && *rate_weeks < 1) throw ConfigError("rate_weeks must be >= 1");
  try {
    train.validate();
    onstreet.validate();
    policy.validate();
    offstreet.validate();
    smoothing.validate();
    synth.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<int> parse_hours(std::string_view spec) {
  std::set<int> hours;
  const auto to_hour = [&](std::string_view s) {
    long long v = 0;
    try {
      v = parse_int(s, "hour");
    } catch (const DataError& e) {
      throw ConfigError(std::string("hours: ") + e.what());
    }
    if (v < 0 || v > 23) throw ConfigError("hours: out of range: " + std::string(s));
    return static_cast<int>(v);
  };
  for (const auto& part : split(spec, ',')) {
    if (part.empty()) throw ConfigError("hours: empty entry in '" + std::string(spec) + "'");
    if (const auto dash = part.find('-'); dash != std::string::npos) {
      const int lo = to_hour(std::string_view(part).substr(0, dash));
      const int hi = to_hour(std::string_view(part).substr(dash + 1));
      if (lo > hi) throw ConfigError("hours: descending range '" + part + "'");
      for (int h = lo; h <= hi; ++h) hours.insert(h);
    } else {
      hours.insert(to_hour(part));
    }
  }
  return {hours.begin(), hours.end()};
}

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config",
             {"inputs", "out_dir", "hours", "date", "seed", "rate_weeks", "train", "onstreet", "policy", "offstreet",
              "smoothing", "synth"});
  RunConfig c;
  if (j.contains("inputs")) {
    const auto& in = j.at("inputs");
    check_keys(in, "inputs", {"graph", "payments", "surveys", "lots", "lot_events", "directions_cache"});
    const auto path_of = [&](const char* key, fs::path& out) {
      std::string s;
      read_opt(in, key, s, "inputs");
      if (!s.empty()) out = resolve(base_dir, s);
    };
    path_of("graph", c.graph);
    path_of("payments", c.payments);
    path_of("surveys", c.surveys);
    path_of("lots", c.lots);
    path_of("lot_events", c.lot_events);
    fs::path cache;
    path_of("directions_cache", cache);
    if (!cache.empty()) c.directions_cache = cache;
  }
  std::string out = "out";
  read_opt(j, "out_dir", out, "config");
  c.out_dir = resolve(base_dir, out);

  if (!j.contains("hours")) {
    c.hours = parse_hours("8-18");
  } else if (j.at("hours").is_string()) {
    c.hours = parse_hours(j.at("hours").get<std::string>());
  } else {
    std::vector<int> hs;
    read_opt(j, "hours", hs, "config");
    std::string joined;
    for (int h : hs) joined += (joined.empty() ? "" : ",") + std::to_string(h);
    c.hours = parse_hours(joined);
  }
  read_opt(j, "date", c.date, "config");
  std::uint64_t seed = 0;
  read_opt(j, "seed", seed, "config");
  if (j.contains("rate_weeks")) {
    int w = 0;
    read_opt(j, "rate_weeks", w, "config");
    c.rate_weeks = w;
  }
  if (j.contains("train")) read_train(j.at("train"), c.train);
  if (j.contains("onstreet")) read_onstreet(j.at("onstreet"), c.onstreet);
  if (j.contains("policy")) read_policy(j.at("policy"), c.policy);
  if (j.contains("offstreet")) read_offstreet(j.at("offstreet"), c.offstreet);
  if (j.contains("smoothing")) read_smoothing(j.at("smoothing"), c.smoothing);
  if (j.contains("synth")) read_synth(j.at("synth"), c.synth);
  c.offstreet.onstreet_t_min_s = c.onstreet.t_min_s;
  c.set_seed(seed);
  if (!c.date.empty()) (void)run_date(c);
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config not found: " + path.string());
  return parse_run_config(read_file(path), fs::absolute(path).parent_path());
}

std::string default_config_json(const RunConfig& base) {
  json j;
  j["inputs"] = {{"graph", "graph.json"},
                 {"payments", "payments.csv"},
                 {"surveys", "surveys.csv"},
                 {"lots", "lots.json"},
                 {"lot_events", "lot_events.csv"}};
  j["out_dir"] = "out";
  j["hours"] = "8-18";
  // A Friday inside the synthetic on-street week.
  const Timestamp start = parse_date(base.synth.start_date);
  Timestamp date = start;
  for (int d = 0; d < base.synth.onstreet_days; ++d) {
    const Timestamp t = start + Seconds{static_cast<std::int64_t>(d) * kSecondsPerDay};
    date = t;
    if (day_of_week(t) == 4) break;
  }
  j["date"] = format_date(date);
  j["seed"] = base.seed;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Stages

void run_synth(const RunConfig& cfg) {
  in_stage("synth", [&] {
    const SynthBundle bundle = synth_generate(cfg.synth);
    write_bundle(bundle, cfg.out_dir);
    write_file_atomic(cfg.out_dir / "parksim.json", default_config_json(cfg));
    std::cout << "synth: " << bundle.graph.node_count() << " intersections, " << bundle.graph.edge_count()
              << " blocks, " << bundle.payments.size() << " payments, " << bundle.surveys.size()
              << " meter checks, " << bundle.lot_events.size() << " lot hours -> " << cfg.out_dir.string() << "\n";
  });
}

void run_ingest(const RunConfig& cfg) {
  in_stage("ingest", [&] {
    RoadGraph g = load_graph(require_input(cfg.graph, "graph"));
    std::size_t cached_queries = 0;
    if (const auto cache = directions_cache_path(cfg)) {
      CachedDirections directions(*cache);
      g = apply_travel_times(g, fetch_travel_times(g, directions));
      cached_queries = directions.size();
    }

    const auto surveys = read_surveys(require_input(cfg.surveys, "surveys"));
    const CombinedSurveys combined = combine_surveys(surveys, &g);
    if (combined.samples.empty()) throw DataError("no usable survey samples");

    (void)read_lots(require_input(cfg.lots, "lots"), &g);
    const auto events = read_lot_events(require_input(cfg.lot_events, "lot events"));
    const auto entries = entry_series(events);
    const auto departures = derive_departures(events);
    std::map<std::string, HourlySeries> smoothed;
    for (const auto& [lot, series] : entries) {
      const auto it = departures.find(lot);
      const HourlySeries raw = departures_on(it == departures.end() ? std::map<Timestamp, double>{} : it->second, series);
      smoothed.emplace(lot, smooth_departures(raw, cfg.smoothing));
    }
    std::size_t shortest = std::numeric_limits<std::size_t>::max();
    for (const auto& [_, s] : entries) shortest = std::min(shortest, s.counts.size());
    const int available_weeks = static_cast<int>(shortest / kHoursPerWeek);
    const int weeks = cfg.rate_weeks.value_or(available_weeks);
    if (weeks < 1) throw DataError("lot events cover less than one whole week");
    if (weeks > available_weeks)
      throw DataError("rate_weeks=" + std::to_string(weeks) + " but lot events cover " +
                      rates_weeks_note(available_weeks));
    const LotRateTable rates = estimate_rates(entries, smoothed, weeks);

    fs::create_directories(cfg.out_dir);
    write_file_atomic(cfg.out_dir / files::kGraph, serialize_graph(g));
    write_file_atomic(cfg.out_dir / files::kSamples, format_samples(combined.samples));
    write_file_atomic(cfg.out_dir / files::kRates, format_rates(rates));

    json report;
    report["samples"] = combined.samples.size();
    report["discarded_checks"] = combined.discarded;
    report["lots"] = entries.size();
    report["rate_weeks"] = weeks;
    report["directions_cache_entries"] = cached_queries;
    write_file_atomic(cfg.out_dir / files::kIngestReport, report.dump(2) + "\n");
    std::cout << "ingest: " << combined.samples.size() << " samples (" << combined.discarded
              << " checks without timestamp discarded), rates for " << entries.size() << " lot(s) over "
              << rates_weeks_note(weeks) << "\n";
  });
}

void run_train(const RunConfig& cfg) {
  in_stage("train", [&] {
    const RoadGraph g = load_graph(require_output(cfg, files::kGraph, "ingest"));
    const auto samples = read_samples(require_output(cfg, files::kSamples, "ingest"));
    const auto payments = read_payments(require_input(cfg.payments, "payments"));
    const PaymentIndex index(payments);
    const auto mlp = train(samples, index, g, cfg.train);
    const auto baseline = train_baseline(samples, index, g, cfg.train);
    write_file_atomic(cfg.out_dir / files::kModel, serialize_model(mlp.model));
    write_file_atomic(cfg.out_dir / files::kBaseline, serialize_model(baseline.model));
    write_file_atomic(cfg.out_dir / files::kTrainingReport, report_json(mlp.report, baseline.report));
    std::cout << "train: validation cross-entropy " << format_number(mlp.report.mean_val_cross_entropy)
              << " nats (baseline " << format_number(baseline.report.mean_val_cross_entropy) << "), accuracy "
              << format_number(mlp.report.mean_val_accuracy) << " (baseline "
              << format_number(baseline.report.mean_val_accuracy) << ")\n";
  });
}

void run_eval(const RunConfig& cfg) {
  in_stage("eval", [&] {
    const RoadGraph g = load_graph(require_output(cfg, files::kGraph, "ingest"));
    const auto samples = read_samples(require_output(cfg, files::kSamples, "ingest"));
    const PaymentIndex index(read_payments(require_input(cfg.payments, "payments")));
    const MlpModel mlp = load_mlp_model(require_output(cfg, files::kModel, "train"));
    const LogisticModel baseline = load_logistic_model(require_output(cfg, files::kBaseline, "train"));
    const auto data = build_dataset(samples, index, g);
    if (data.empty()) throw DataError("no samples to evaluate");
    const SplitMetrics m = evaluate(mlp, data);
    const SplitMetrics b = evaluate(baseline, data);

    json j;
    j["n"] = data.size();
    j["mlp"] = {{"cross_entropy", m.cross_entropy}, {"accuracy", m.accuracy}};
    j["baseline"] = {{"cross_entropy", b.cross_entropy}, {"accuracy", b.accuracy}};
    const fs::path report_path = cfg.out_dir / files::kTrainingReport;
    if (fs::exists(report_path)) j["training"] = json::parse(read_file(report_path));
    write_file_atomic(cfg.out_dir / files::kEvalReport, j.dump(2) + "\n");
    std::cout << "eval: " << data.size() << " samples, cross-entropy " << format_number(m.cross_entropy)
              << " (baseline " << format_number(b.cross_entropy) << "), accuracy " << format_number(m.accuracy)
              << " (baseline " << format_number(b.accuracy) << ")\n";
  });
}

void run_predict(const RunConfig& cfg) {
  in_stage("predict", [&] {
    const Timestamp date = run_date(cfg);
    const RoadGraph g = load_graph(require_output(cfg, files::kGraph, "ingest"));
    const PaymentIndex index(read_payments(require_input(cfg.payments, "payments")));
    const MlpModel mlp = load_mlp_model(require_output(cfg, files::kModel, "train"));
    std::string out = "block_id,hour,p_available\n";
    for (int hour : cfg.hours) {
      const auto probs = predict_block_probabilities(mlp, index, g, hour, date);
      for (EdgeIndex e = 0; e < g.edge_count(); ++e)
        out += g.edge(e).id + "," + std::to_string(hour) + "," + format_number(probs[e]) + "\n";
    }
    write_file_atomic(cfg.out_dir / files::kProbabilities, out);
    std::cout << "predict: " << g.edge_count() << " blocks x " << cfg.hours.size() << " hours on " << cfg.date
              << "\n";
  });
}

void run_sim_on(const RunConfig& cfg) {
  in_stage("sim-on", [&] {
    const RoadGraph g = load_graph(require_output(cfg, files::kGraph, "ingest"));
    const auto probs = read_probabilities(require_output(cfg, files::kProbabilities, "predict"), g);
    for (int hour : cfg.hours)
      if (!probs.count(hour)) throw DataError("no probabilities for hour " + std::to_string(hour));

    const std::size_t n_edges = g.edge_count();
    std::vector<Destination> dests(n_edges);
    parallel_for(n_edges, [&](std::size_t e) { dests[e] = Destination::make(g, e); });

    const std::size_t n_tasks = n_edges * cfg.hours.size();
    std::vector<OnstreetEstimate> results(n_tasks);
    parallel_for(n_tasks, [&](std::size_t i) {
      const int hour = cfg.hours[i / n_edges];
      results[i] = estimate_onstreet_time(g, probs.at(hour), dests[i % n_edges], cfg.onstreet, cfg.policy, hour);
    });

    std::string out = "block_id,hour,mean_onstreet_s,std_onstreet_s,censored_fraction,n_samples\n";
    double censored = 0.0;
    for (std::size_t i = 0; i < n_tasks; ++i) {
      const auto& r = results[i];
      censored += r.censored_fraction;
      out += g.edge(i % n_edges).id + "," + std::to_string(cfg.hours[i / n_edges]) + "," + format_number(r.mean_s) +
             "," + format_number(r.std_s) + "," + format_number(r.censored_fraction) + "," +
             std::to_string(r.n_samples) + "\n";
    }
    write_file_atomic(cfg.out_dir / files::kOnstreet, out);
    std::cout << "sim-on: " << n_tasks << " block-hours, mean censored fraction "
              << format_number(censored / static_cast<double>(n_tasks)) << "\n";
  });
}

void run_sim_off(const RunConfig& cfg) {
  in_stage("sim-off", [&] {
    const Timestamp date = run_date(cfg);
    const int day = day_of_week(date);
    const RoadGraph g = load_graph(require_output(cfg, files::kGraph, "ingest"));
    const auto lots = read_lots(require_input(cfg.lots, "lots"), &g);
    if (lots.empty()) throw DataError("no parking lots configured");
    const LotRateTable rates = read_rates(require_output(cfg, files::kRates, "ingest"));

    const std::size_t n_edges = g.edge_count();
    const std::size_t n_tasks = n_edges * cfg.hours.size();
    std::vector<OffstreetEstimate> results(n_tasks);
    parallel_for(n_tasks, [&](std::size_t i) {
      results[i] = estimate_offstreet_time(g, lots, rates, i % n_edges, day, cfg.hours[i / n_edges], cfg.offstreet);
    });

    std::string out = "block_id,hour,mean_offstreet_s,std_offstreet_s,lot_id,drive_s,lot_s,walk_s\n";
    for (std::size_t i = 0; i < n_tasks; ++i) {
      const auto& r = results[i];
      out += g.edge(i % n_edges).id + "," + std::to_string(cfg.hours[i / n_edges]) + "," + format_number(r.total_s) +
             "," + format_number(r.lot_std_s) + "," + r.lot_id + "," + format_number(r.drive_s) + "," +
             format_number(r.lot_s) + "," + format_number(r.walk_s) + "\n";
    }
    write_file_atomic(cfg.out_dir / files::kOffstreet, out);
    std::cout << "sim-off: " << n_tasks << " block-hours on " << cfg.date << " across " << lots.size()
              << " lot(s)\n";
  });
}

std::vector<TimeEstimate> join_estimates(std::string_view onstreet_csv, std::string_view offstreet_csv) {
  const auto on = parse_csv(onstreet_csv,
                            {"block_id", "hour", "mean_onstreet_s", "std_onstreet_s", "censored_fraction", "n_samples"},
                            files::kOnstreet);
  const auto off = parse_csv(
      offstreet_csv, {"block_id", "hour", "mean_offstreet_s", "std_offstreet_s", "lot_id", "drive_s", "lot_s", "walk_s"},
      files::kOffstreet);
  std::map<std::pair<std::string, int>, double> off_by_key;
  for (const auto& row : off.rows) {
    const int hour = static_cast<int>(parse_int(row[1], "hour"));
    if (!off_by_key.emplace(std::pair{row[0], hour}, parse_double(row[2], "mean_offstreet_s")).second)
      throw DataError(std::string(files::kOffstreet) + ": duplicate row for " + row[0] + " hour " + row[1]);
  }
  std::vector<TimeEstimate> out;
  out.reserve(on.rows.size());
  for (const auto& row : on.rows) {
    TimeEstimate t;
    t.block_id = row[0];
    t.hour = static_cast<int>(parse_int(row[1], "hour"));
    t.mean_onstreet_s = parse_double(row[2], "mean_onstreet_s");
    const auto it = off_by_key.find({t.block_id, t.hour});
    if (it == off_by_key.end())
      throw DataError("no off-street estimate for " + t.block_id + " hour " + std::to_string(t.hour));
    t.mean_offstreet_s = it->second;
    t.delta_s = t.mean_offstreet_s - t.mean_onstreet_s;
    off_by_key.erase(it);
    out.push_back(std::move(t));
  }
  if (!off_by_key.empty())
    throw DataError("no on-street estimate for " + off_by_key.begin()->first.first + " hour " +
                    std::to_string(off_by_key.begin()->first.second));
  return out;
}

std::string geojson_map(const RoadGraph& g, std::span<const TimeEstimate> rows, int hour, std::string_view map_name,
                        std::string_view value_property) {
  json features = json::array();
  for (const auto& r : rows) {
    if (r.hour != hour) continue;
    const auto& e = g.edge(g.edge_index(r.block_id));
    const auto& a = g.node(g.node_index(e.from_node));
    const auto& b = g.node(g.node_index(e.to_node));
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "LineString"}, {"coordinates", {{a.lon, a.lat}, {b.lon, b.lat}}}}},
                        {"properties",
                         {{"block_id", r.block_id},
                          {"hour", r.hour},
                          {"t_on_s", r.mean_onstreet_s},
                          {"t_off_s", r.mean_offstreet_s},
                          {"delta_s", r.delta_s}}}});
  }
  json fc = {{"type", "FeatureCollection"},
             {"name", std::string(map_name)},
             {"value_property", std::string(value_property)},
             {"features", std::move(features)}};
  return fc.dump(1) + "\n";
}

void run_diff(const RunConfig& cfg) {
  in_stage("diff", [&] {
    const RoadGraph g = load_graph(require_output(cfg, files::kGraph, "ingest"));
    const auto rows = join_estimates(read_file(require_output(cfg, files::kOnstreet, "sim-on")),
                                     read_file(require_output(cfg, files::kOffstreet, "sim-off")));
    std::string out = "block_id,hour,mean_onstreet_s,mean_offstreet_s,delta_s\n";
    std::set<int> hours;
    std::size_t lot_faster = 0;
    for (const auto& r : rows) {
      out += r.block_id + "," + std::to_string(r.hour) + "," + format_number(r.mean_onstreet_s) + "," +
             format_number(r.mean_offstreet_s) + "," + format_number(r.delta_s) + "\n";
      hours.insert(r.hour);
      if (r.delta_s < 0.0) ++lot_faster;
    }
    write_file_atomic(cfg.out_dir / files::kDiff, out);
    const fs::path maps = cfg.out_dir / files::kMaps;
    for (int hour : hours) {
      char suffix[8];
      std::snprintf(suffix, sizeof suffix, "_h%02d", hour);
      for (const auto& [name, prop] : {std::pair{"onstreet", "t_on_s"}, std::pair{"offstreet", "t_off_s"},
                                       std::pair{"diff", "delta_s"}}) {
        const std::string map_name = std::string(name) + suffix;
        write_file_atomic(maps / (map_name + ".geojson"), geojson_map(g, rows, hour, map_name, prop));
      }
    }
    std::cout << "diff: " << rows.size() << " block-hours, lot faster in " << lot_faster << ", maps in "
              << maps.string() << "\n";
  });
}

void run_pipeline(const RunConfig& cfg) {
  run_ingest(cfg);
  run_train(cfg);
  run_eval(cfg);
  run_predict(cfg);
  run_sim_on(cfg);
  run_sim_off(cfg);
  run_diff(cfg);
}

}  // namespace parksim
