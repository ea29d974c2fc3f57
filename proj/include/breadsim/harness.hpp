#pragma once

/**
 * Config-driven experiment runner.
 *
 * Configs are flat key = value text with optional [sweep <key>] sections
 * declaring per-axis value lists. A run fans out over (sweep grid x
 * seeds), one CSV per grid point with one row per (seed, eval point),
 * plus a JSON sidecar holding the config, its hash and the timestamp.
 * Workers only fill preassigned slots and rows are emitted in (seed,
 * iteration) order, so the CSV bytes never depend on the worker count.
 */

#include <cctype>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "breadsim/chain.hpp"
#include "breadsim/errors.hpp"
#include "breadsim/flops.hpp"
#include "breadsim/stitching.hpp"
#include "breadsim/trainers.hpp"

namespace breadsim {

enum class Method { Sft, Grpo, GrpoEt, Bread, BreadMarkov };

inline const char* method_name(Method method) {
  switch (method) {
    case Method::Sft: return "sft";
    case Method::Grpo: return "grpo";
    case Method::GrpoEt: return "grpo_et";
    case Method::Bread: return "bread";
    case Method::BreadMarkov: return "bread_markov";
  }
  return "unknown";
}

inline Method parse_method(const std::string& name) {
  if (name == "sft") return Method::Sft;
  if (name == "grpo") return Method::Grpo;
  if (name == "grpo_et") return Method::GrpoEt;
  if (name == "bread") return Method::Bread;
  if (name == "bread_markov") return Method::BreadMarkov;
  throw ConfigInvalid("unknown method '" + name + "'");
}

struct ExperimentConfig {
  Method method = Method::Grpo;
  std::string model = "defa1";  // defa1 | symmetric
  int k = 30;
  int d = 2;
  double eps = 0.05;
  std::optional<int> lower_bound;  // defaults: defa1 -> 0, symmetric -> -k
  int expert_jump = 3;
  TrainHyper hyper;
  int iterations = 1000;
  int eval_every = 50;
  int mc_samples = 1000;
  double reward_threshold = 0.9;  // round-based variant only
  int round_cap = 1000;
  double anchor_trigger = 0.0;
  std::vector<std::uint64_t> seeds{0};
  std::string output = "results";
};

struct ResultRow {
  int iteration = 0;
  std::string method;
  std::uint64_t seed = 0;
  double mc_success = 0.0;
  double dp_success = 0.0;
  double mean_traj_len = 0.0;
  double mean_hint_len = 0.0;
  double kl_to_ref = 0.0;
  long degenerate_groups = 0;
  double flops_estimate = 0.0;
};

// --------------------------------------------------------------------------
// Config text parsing
// --------------------------------------------------------------------------

struct ParsedConfig {
  std::map<std::string, std::string> base;
  std::vector<std::pair<std::string, std::vector<std::string>>> sweeps;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_tokens(const std::string& value) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : value) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "method",         "model",       "k",
      "d",              "eps",         "lower_bound",
      "expert_jump",    "max_len",     "group_size",
      "clip_eps",       "kl_beta",     "learning_rate",
      "updates_per_batch", "iterations", "eval_every",
      "mc_samples",     "reward_threshold", "round_cap",
      "anchor_trigger", "sample_std",  "seeds",
      "output"};
  return keys;
}

inline bool key_known(const std::string& key) {
  for (const auto& k : known_keys())
    if (k == key) return true;
  return false;
}

inline long to_long(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigInvalid("key '" + key + "': expected an integer, got '" + value + "'");
  }
}

inline double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigInvalid("key '" + key + "': expected a number, got '" + value + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigInvalid("key '" + key + "': expected true/false, got '" + value + "'");
}

}  // namespace detail

inline ParsedConfig parse_config_text(const std::string& text) {
  ParsedConfig parsed;
  std::string current_sweep;  // empty = base section
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos)
      raw.erase(hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigInvalid("line " + std::to_string(line_no) + ": unterminated section");
      const std::string inner = detail::trim(line.substr(1, line.size() - 2));
      const auto space = inner.find(' ');
      if (space == std::string::npos || detail::trim(inner.substr(0, space)) != "sweep")
        throw ConfigInvalid("line " + std::to_string(line_no) +
                            ": only [sweep <key>] sections are supported");
      current_sweep = detail::trim(inner.substr(space + 1));
      if (!detail::key_known(current_sweep) || current_sweep == "seeds" ||
          current_sweep == "output")
        throw ConfigInvalid("line " + std::to_string(line_no) +
                            ": cannot sweep over '" + current_sweep + "'");
      for (const auto& [axis, values] : parsed.sweeps)
        if (axis == current_sweep)
          throw ConfigInvalid("line " + std::to_string(line_no) +
                              ": duplicate sweep over '" + current_sweep + "'");
      parsed.sweeps.emplace_back(current_sweep, std::vector<std::string>{});
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigInvalid("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (current_sweep.empty()) {
      if (!detail::key_known(key))
        throw ConfigInvalid("line " + std::to_string(line_no) + ": unknown key '" +
                            key + "'");
      if (parsed.base.count(key))
        throw ConfigInvalid("line " + std::to_string(line_no) + ": duplicate key '" +
                            key + "'");
      parsed.base[key] = value;
    } else {
      if (key != "values")
        throw ConfigInvalid("line " + std::to_string(line_no) +
                            ": sweep sections take a single 'values' key");
      auto& axis = parsed.sweeps.back().second;
      for (auto& token : detail::split_tokens(value)) axis.push_back(std::move(token));
    }
  }
  for (const auto& [axis, values] : parsed.sweeps)
    if (values.empty())
      throw ConfigInvalid("sweep over '" + axis + "' declares no values");
  return parsed;
}

inline ParsedConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

inline ExperimentConfig materialize_config(const std::map<std::string, std::string>& kv) {
  ExperimentConfig config;
  for (const auto& [key, value] : kv) {
    if (key == "method") config.method = parse_method(value);
    else if (key == "model") {
      if (value != "defa1" && value != "symmetric")
        throw ConfigInvalid("model must be defa1 or symmetric");
      config.model = value;
    } else if (key == "k") config.k = static_cast<int>(detail::to_long(key, value));
    else if (key == "d") config.d = static_cast<int>(detail::to_long(key, value));
    else if (key == "eps") config.eps = detail::to_double(key, value);
    else if (key == "lower_bound")
      config.lower_bound = static_cast<int>(detail::to_long(key, value));
    else if (key == "expert_jump")
      config.expert_jump = static_cast<int>(detail::to_long(key, value));
    else if (key == "max_len")
      config.hyper.max_len = static_cast<int>(detail::to_long(key, value));
    else if (key == "group_size")
      config.hyper.group_size = static_cast<int>(detail::to_long(key, value));
    else if (key == "clip_eps") config.hyper.clip_eps = detail::to_double(key, value);
    else if (key == "kl_beta") config.hyper.kl_beta = detail::to_double(key, value);
    else if (key == "learning_rate")
      config.hyper.learning_rate = detail::to_double(key, value);
    else if (key == "updates_per_batch")
      config.hyper.updates_per_batch = static_cast<int>(detail::to_long(key, value));
    else if (key == "iterations")
      config.iterations = static_cast<int>(detail::to_long(key, value));
    else if (key == "eval_every")
      config.eval_every = static_cast<int>(detail::to_long(key, value));
    else if (key == "mc_samples")
      config.mc_samples = static_cast<int>(detail::to_long(key, value));
    else if (key == "reward_threshold")
      config.reward_threshold = detail::to_double(key, value);
    else if (key == "round_cap")
      config.round_cap = static_cast<int>(detail::to_long(key, value));
    else if (key == "anchor_trigger")
      config.anchor_trigger = detail::to_double(key, value);
    else if (key == "sample_std")
      config.hyper.sample_std = detail::to_bool(key, value);
    else if (key == "seeds") {
      config.seeds.clear();
      for (const auto& token : detail::split_tokens(value))
        config.seeds.push_back(
            static_cast<std::uint64_t>(detail::to_long(key, token)));
      if (config.seeds.empty()) throw ConfigInvalid("seeds list is empty");
    } else if (key == "output") config.output = value;
    else throw ConfigInvalid("unknown key '" + key + "'");
  }
  if (config.iterations < 0) throw ConfigInvalid("iterations must be >= 0");
  if (config.eval_every < 1) throw ConfigInvalid("eval_every must be >= 1");
  if (config.mc_samples < 0) throw ConfigInvalid("mc_samples must be >= 0");
  if (!kv.count("max_len")) config.hyper.max_len = 2 * config.k;
  return config;
}

// --------------------------------------------------------------------------
// Running experiments
// --------------------------------------------------------------------------

namespace detail {

inline PolicyTable build_model(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.model == "symmetric")
    return build_symmetric_walker(config.k, config.lower_bound.value_or(-config.k));
  SmallModelConfig model;
  model.num_states = config.k;
  model.max_jump = config.d;
  model.weak_prob = config.eps;
  model.lower_bound = config.lower_bound.value_or(0);
  model.seed = seed;
  return build_small_model(model);
}

inline ExpertTrace build_trace(const ExperimentConfig& config) {
  return make_expert_trace(config.k, config.expert_jump);
}

inline double flops_for_point(const ExperimentConfig& config, long params,
                              const EvalPoint& point) {
  if (point.iteration == 0) return 0.0;
  FlopsQuery query;
  query.params_n = static_cast<double>(params);
  query.steps = point.iteration;
  const double it = static_cast<double>(point.iteration);
  switch (config.method) {
    case Method::Sft:
      query.method = FlopsMethod::Sft;
      query.d_sample = static_cast<double>(config.k / config.expert_jump);
      break;
    case Method::Grpo:
      query.method = FlopsMethod::Grpo;
      query.n_rollout = config.hyper.group_size;
      query.d_sample = point.used_tokens / (it * query.n_rollout);
      break;
    case Method::GrpoEt:
      query.method = FlopsMethod::GrpoEt;
      query.n_rollout = config.hyper.group_size - 1;
      query.d_sample = point.used_tokens / (it * query.n_rollout);
      break;
    case Method::Bread:
      query.method = FlopsMethod::Bread;
      query.n_rollout = config.hyper.group_size;
      query.d_sample = point.used_tokens / (it * query.n_rollout);
      query.d_additional = point.extra_tokens / it;
      break;
    case Method::BreadMarkov:
      // No search probes; the cost model reduces to the group formula.
      query.method = FlopsMethod::Bread;
      query.n_rollout = config.hyper.group_size;
      query.d_sample = point.used_tokens / (it * query.n_rollout);
      query.d_additional = 0.0;
      break;
  }
  return estimate_flops(query);
}

inline std::vector<ResultRow> rows_from_log(const ExperimentConfig& config,
                                            std::uint64_t seed, long params,
                                            const TrainingLog& log) {
  std::vector<ResultRow> rows;
  rows.reserve(log.points.size());
  for (const auto& point : log.points) {
    ResultRow row;
    row.iteration = point.iteration;
    row.method = method_name(config.method);
    row.seed = seed;
    row.mc_success = point.mc_success;
    row.dp_success = point.dp_success;
    row.mean_traj_len = point.mean_traj_len;
    row.mean_hint_len = point.mean_hint_len;
    row.kl_to_ref = point.kl_to_ref;
    row.degenerate_groups = point.degenerate_groups;
    row.flops_estimate = flops_for_point(config, params, point);
    rows.push_back(std::move(row));
  }
  return rows;
}

// Supervised runs reuse the shared log/eval shape, one gradient pass per
// iteration.
inline TrainResult sft_train(const PolicyTable& initial, const ExpertTrace& trace,
                             const ExperimentConfig& config, std::uint64_t seed) {
  PolicyTable policy = initial;
  const PolicyTable reference = initial;
  TrainingLog log;
  auto emit_eval = [&](int iteration) {
    const EvalPair rates = evaluate_policy(policy, config.hyper.max_len,
                                           config.mc_samples, seed,
                                           static_cast<std::uint64_t>(iteration));
    EvalPoint point;
    point.iteration = iteration;
    point.mc_success = rates.mc_rate;
    point.dp_success = rates.dp_rate;
    point.mean_traj_len = static_cast<double>(trace.length());
    point.kl_to_ref = mean_kl_to_reference(policy, reference);
    log.points.push_back(point);
  };
  if (config.iterations > 0) emit_eval(0);
  for (int it = 1; it <= config.iterations; ++it) {
    policy = sft_update(policy, trace, config.hyper.learning_rate, 1).policy;
    if (it % config.eval_every == 0 || it == config.iterations) emit_eval(it);
  }
  return {std::move(policy), std::move(log)};
}

}  // namespace detail

/// One (config, seed) run; rows ordered by iteration.
inline std::vector<ResultRow> run_seed(const ExperimentConfig& config,
                                       std::uint64_t seed) {
  const PolicyTable initial = detail::build_model(config, seed);
  const long params = initial.parameter_count();
  TrainOptions options;
  options.eval_every = config.eval_every;
  options.mc_samples = config.mc_samples;
  AnchorOptions anchor;
  anchor.trigger_threshold = config.anchor_trigger;

  TrainResult result{initial, {}};
  switch (config.method) {
    case Method::Sft:
      result = detail::sft_train(initial, detail::build_trace(config), config, seed);
      break;
    case Method::Grpo:
      result = grpo_train(initial, config.hyper, config.iterations, seed, options);
      break;
    case Method::GrpoEt: {
      const Trajectory expert = trace_as_trajectory(detail::build_trace(config),
                                                    config.hyper.max_len);
      result = grpo_et_train(initial, expert, config.hyper, config.iterations, seed,
                             options);
      break;
    }
    case Method::Bread:
      result = bread_train(initial, detail::build_trace(config), config.hyper,
                           config.iterations, seed, options, anchor);
      break;
    case Method::BreadMarkov:
      result = bread_markov_train(initial, detail::build_trace(config),
                                  config.reward_threshold, config.hyper.group_size,
                                  config.hyper.max_len, config.hyper, seed,
                                  config.round_cap, options);
      break;
  }
  return detail::rows_from_log(config, seed, params, result.log);
}

/// All seeds, optionally in parallel. Row order is (seed, iteration)
/// regardless of the worker count.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& config,
                                             int threads = 1) {
  std::vector<std::vector<ResultRow>> per_seed(config.seeds.size());
  if (threads <= 1 || config.seeds.size() <= 1) {
    for (std::size_t i = 0; i < config.seeds.size(); ++i)
      per_seed[i] = run_seed(config, config.seeds[i]);
  } else {
    std::vector<std::thread> pool;
    std::mutex next_mutex;
    std::size_t next = 0;
    std::exception_ptr failure;
    const int workers =
        std::min<int>(threads, static_cast<int>(config.seeds.size()));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t job;
          {
            std::lock_guard<std::mutex> lock(next_mutex);
            if (next >= config.seeds.size() || failure) return;
            job = next++;
          }
          try {
            per_seed[job] = run_seed(config, config.seeds[job]);
          } catch (...) {
            std::lock_guard<std::mutex> lock(next_mutex);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  std::vector<ResultRow> rows;
  for (auto& seed_rows : per_seed)
    rows.insert(rows.end(), seed_rows.begin(), seed_rows.end());
  return rows;
}

// --------------------------------------------------------------------------
// CSV + sidecar persistence
// --------------------------------------------------------------------------

inline std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

inline constexpr const char* kCsvHeader =
    "iteration,method,seed,mc_success,dp_success,mean_traj_len,mean_hint_len,"
    "kl_to_ref,degenerate_groups,flops_estimate";

inline void write_rows_csv(const std::filesystem::path& path,
                           const std::vector<ResultRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << kCsvHeader << '\n';
  for (const auto& row : rows) {
    out << row.iteration << ',' << row.method << ',' << row.seed << ','
        << format_double(row.mc_success) << ',' << format_double(row.dp_success) << ','
        << format_double(row.mean_traj_len) << ',' << format_double(row.mean_hint_len)
        << ',' << format_double(row.kl_to_ref) << ',' << row.degenerate_groups << ','
        << format_double(row.flops_estimate) << '\n';
  }
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

inline std::string config_hash(const std::map<std::string, std::string>& kv) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [key, value] : kv) {
    mix(key);
    mix("=");
    mix(value);
    mix("\n");
  }
  char buffer[20];
  std::snprintf(buffer, sizeof(buffer), "%016" PRIx64, h);
  return buffer;
}

/// Timestamps and other non-deterministic metadata live here, never in
/// the CSV.
inline void write_sidecar(const std::filesystem::path& csv_path,
                          const std::map<std::string, std::string>& kv,
                          const std::map<std::string, std::string>& sweep_assignment) {
  nlohmann::json meta;
  meta["artifact_version"] = "0.1.0";
  meta["config_hash"] = config_hash(kv);
  meta["config"] = kv;
  meta["sweep_assignment"] = sweep_assignment;
  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  meta["created_at"] = stamp;
  std::filesystem::path path = csv_path;
  path += ".meta.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << meta.dump(2) << '\n';
}

struct SweepRun {
  std::map<std::string, std::string> assignment;  // axis -> value
  std::map<std::string, std::string> kv;          // full materialized key set
  std::filesystem::path csv_path;
};

inline std::vector<SweepRun> expand_sweep(const ParsedConfig& parsed) {
  std::vector<SweepRun> runs;
  SweepRun base;
  base.kv = parsed.base;
  runs.push_back(base);
  for (const auto& [axis, values] : parsed.sweeps) {
    std::vector<SweepRun> expanded;
    expanded.reserve(runs.size() * values.size());
    for (const auto& run : runs) {
      for (const auto& value : values) {
        SweepRun next = run;
        next.kv[axis] = value;
        next.assignment[axis] = value;
        expanded.push_back(std::move(next));
      }
    }
    runs = std::move(expanded);
  }
  const std::string stem = parsed.base.count("output") ? parsed.base.at("output")
                                                       : std::string("results");
  for (auto& run : runs) {
    std::string name = stem;
    for (const auto& [axis, values] : parsed.sweeps) {
      (void)values;
      name += "__" + axis + "=" + run.assignment.at(axis);
    }
    run.csv_path = name + ".csv";
  }
  return runs;
}

/// Fans out (grid x seeds) with a bounded worker pool and writes one CSV
/// plus sidecar per grid point.
inline std::vector<std::filesystem::path> run_sweep(const ParsedConfig& parsed,
                                                    int threads = 1) {
  const std::vector<SweepRun> runs = expand_sweep(parsed);

  struct Job {
    std::size_t run_index;
    std::size_t seed_index;
  };
  std::vector<ExperimentConfig> configs;
  configs.reserve(runs.size());
  std::vector<Job> jobs;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    configs.push_back(materialize_config(runs[r].kv));
    for (std::size_t s = 0; s < configs.back().seeds.size(); ++s)
      jobs.push_back({r, s});
  }
  std::vector<std::vector<std::vector<ResultRow>>> results(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r)
    results[r].resize(configs[r].seeds.size());

  std::mutex next_mutex;
  std::size_t next = 0;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      std::size_t index;
      {
        std::lock_guard<std::mutex> lock(next_mutex);
        if (next >= jobs.size() || failure) return;
        index = next++;
      }
      const Job job = jobs[index];
      try {
        results[job.run_index][job.seed_index] =
            run_seed(configs[job.run_index], configs[job.run_index].seeds[job.seed_index]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(next_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<std::filesystem::path> written;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    std::vector<ResultRow> rows;
    for (auto& seed_rows : results[r])
      rows.insert(rows.end(), seed_rows.begin(), seed_rows.end());
    write_rows_csv(runs[r].csv_path, rows);
    write_sidecar(runs[r].csv_path, runs[r].kv, runs[r].assignment);
    written.push_back(runs[r].csv_path);
  }
  return written;
}

// --------------------------------------------------------------------------
// Tail-bound verification
// --------------------------------------------------------------------------

struct HittingBoundCase {
  int k = 0;
  int budget = 0;
};

struct StitchBoundCase {
  int k = 0;
  int budget = 0;
  int episodes = 0;  // T; expert jump = k / T
  int rollouts_per_round = 0;
  int trials = 0;
};

struct BoundsSpec {
  std::vector<HittingBoundCase> upper_cases;  // walk stays under 2e^{-K^2/2L}
  std::vector<HittingBoundCase> lower_cases;  // walk clears 1 - 0.8K/sqrt(L)
  std::vector<StitchBoundCase> stitch_cases;  // memorization beats 1 - Te^{-t}
};

struct BoundsCheck {
  std::string name;
  double bound_value = 0.0;
  double measured_value = 0.0;
  bool satisfied = false;
};

struct BoundsReport {
  std::vector<BoundsCheck> checks;
  bool all_satisfied() const {
    for (const auto& c : checks)
      if (!c.satisfied) return false;
    return true;
  }
};

inline BoundsSpec default_bounds_spec() {
  BoundsSpec spec;
  spec.upper_cases = {{30, 60}, {20, 40}, {40, 80}, {30, 120}};
  spec.lower_cases = {{3, 15}, {2, 10}, {4, 30}, {5, 60}};
  spec.stitch_cases = {{30, 450, 10, 8, 1000}, {20, 200, 10, 8, 400}};
  return spec;
}

/// Checks the hitting-probability tail bounds against the exact DP value
/// and the stitching success bound against seeded simulation. Failures
/// are recorded, not thrown.
inline BoundsReport verify_bounds(const BoundsSpec& spec = default_bounds_spec()) {
  BoundsReport report;
  char name[128];
  for (const auto& c : spec.upper_cases) {
    // The lower boundary sits out of reach of the budget, so the DP value
    // equals the unbounded-walk probability.
    const PolicyTable walker = build_symmetric_walker(c.k, -c.budget);
    const double dp = hitting_probability_dp(walker, 0, c.k, c.budget);
    const double bound = 2.0 * std::exp(-static_cast<double>(c.k) * c.k / (2.0 * c.budget));
    std::snprintf(name, sizeof(name), "hit_upper_2exp(K=%d,L=%d)", c.k, c.budget);
    report.checks.push_back({name, bound, dp, dp <= bound});
  }
  for (const auto& c : spec.lower_cases) {
    const PolicyTable walker = build_symmetric_walker(c.k, -c.budget);
    const double dp = hitting_probability_dp(walker, 0, c.k, c.budget);
    const double bound = 1.0 - 0.8 * c.k / std::sqrt(static_cast<double>(c.budget));
    std::snprintf(name, sizeof(name), "hit_lower_0.8(K=%d,L=%d)", c.k, c.budget);
    report.checks.push_back({name, bound, dp, dp >= bound});
  }
  for (const auto& c : spec.stitch_cases) {
    const PolicyTable walker = build_symmetric_walker(c.k, -c.k);
    const ExpertTrace trace = make_uniform_expert_trace(c.k, c.k / c.episodes);
    int wins = 0;
    for (int trial = 0; trial < c.trials; ++trial) {
      const StitchResult result = stitching_bread(
          walker, trace, c.budget, c.rollouts_per_round,
          derive_seed(static_cast<std::uint64_t>(trial), StreamPurpose::Stitch));
      if (result.success() && stitch_path_valid(result, c.k, c.budget)) ++wins;
    }
    const double rate = static_cast<double>(wins) / c.trials;
    const double bound = 1.0 - c.episodes * std::exp(-static_cast<double>(c.rollouts_per_round));
    const double sigma = std::sqrt(std::max(bound * (1.0 - bound), 1e-12) / c.trials);
    std::snprintf(name, sizeof(name), "stitch_success(K=%d,L=%d,T=%d,t=%d)", c.k,
                  c.budget, c.episodes, c.rollouts_per_round);
    report.checks.push_back({name, bound - 3.0 * sigma, rate, rate >= bound - 3.0 * sigma});
  }
  return report;
}

/// Bounds spec files are flat key = value text with the keys
/// upper_cases / lower_cases (K:L tokens) and stitch_cases
/// (K:L:T:t:trials tokens).
inline std::map<std::string, std::string> parse_bounds_file(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read bounds spec '" + path.string() + "'");
  std::map<std::string, std::string> kv;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigInvalid("bounds spec line " + std::to_string(line_no) +
                          ": expected key = value");
    kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  return kv;
}

inline BoundsSpec parse_bounds_spec(const std::map<std::string, std::string>& kv) {
  BoundsSpec spec;
  auto parse_ints = [](const std::string& token) {
    std::vector<int> out;
    std::string current;
    for (char ch : token + ":") {
      if (ch == ':') {
        if (!current.empty())
          out.push_back(static_cast<int>(detail::to_long("bounds case", current)));
        current.clear();
      } else {
        current.push_back(ch);
      }
    }
    return out;
  };
  for (const auto& [key, value] : kv) {
    if (key == "upper_cases" || key == "lower_cases") {
      for (const auto& token : detail::split_tokens(value)) {
        const auto v = parse_ints(token);
        if (v.size() != 2)
          throw ConfigInvalid("bounds case '" + token + "' must be K:L");
        ((key == "upper_cases") ? spec.upper_cases : spec.lower_cases)
            .push_back({v[0], v[1]});
      }
    } else if (key == "stitch_cases") {
      for (const auto& token : detail::split_tokens(value)) {
        const auto v = parse_ints(token);
        if (v.size() != 5)
          throw ConfigInvalid("stitch case '" + token + "' must be K:L:T:t:trials");
        if (v[2] < 1 || v[0] % v[2] != 0)
          throw ConfigInvalid("stitch case '" + token + "': T must divide K");
        spec.stitch_cases.push_back({v[0], v[1], v[2], v[3], v[4]});
      }
    } else {
      throw ConfigInvalid("unknown bounds key '" + key + "'");
    }
  }
  return spec;
}

}  // namespace breadsim
