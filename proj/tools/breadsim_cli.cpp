// breadsim command-line interface: experiment runner, bound checks, the
// exact hitting-probability oracle, text-trace splitting, plotting and
// the training-cost model.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <breadsim/chain.hpp>
#include <breadsim/errors.hpp>
#include <breadsim/flops.hpp>
#include <breadsim/harness.hpp>
#include <breadsim/svg_plot.hpp>
#include <breadsim/text_episodes.hpp>

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitBounds = 4;

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  int threads = 0;  // 0 = hardware default
  bool quiet = false;

  int worker_count() const {
    if (threads > 0) return threads;
    if (const char* env = std::getenv("BREADSIM_THREADS")) {
      const int n = std::atoi(env);
      if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
  }
};

std::string decode_escapes(const std::string& raw) {
  std::string out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '\\' || i + 1 >= raw.size()) {
      out.push_back(raw[i]);
      continue;
    }
    switch (raw[++i]) {
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 'r': out.push_back('\r'); break;
      case '0': out.push_back('\0'); break;
      case '\\': out.push_back('\\'); break;
      default:
        out.push_back('\\');
        out.push_back(raw[i]);
    }
  }
  return out;
}

void apply_seed_override(breadsim::ParsedConfig& parsed, const GlobalFlags& flags) {
  if (flags.seed) parsed.base["seeds"] = std::to_string(*flags.seed);
}

int cmd_run(const std::string& config_path, const GlobalFlags& flags) {
  breadsim::ParsedConfig parsed = breadsim::parse_config_file(config_path);
  if (!parsed.sweeps.empty())
    throw breadsim::ConfigInvalid(
        "config declares sweep sections; use the sweep subcommand");
  apply_seed_override(parsed, flags);
  const breadsim::ExperimentConfig config = breadsim::materialize_config(parsed.base);
  const auto rows = breadsim::run_experiment(config, flags.worker_count());
  const std::filesystem::path csv_path = config.output + ".csv";
  breadsim::write_rows_csv(csv_path, rows);
  breadsim::write_sidecar(csv_path, parsed.base, {});
  if (!flags.quiet) std::cout << csv_path.string() << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const GlobalFlags& flags) {
  breadsim::ParsedConfig parsed = breadsim::parse_config_file(config_path);
  apply_seed_override(parsed, flags);
  const auto written = breadsim::run_sweep(parsed, flags.worker_count());
  if (!flags.quiet)
    for (const auto& path : written) std::cout << path.string() << "\n";
  return 0;
}

int cmd_bounds(const std::string& spec_path, const GlobalFlags& flags) {
  breadsim::BoundsSpec spec;
  if (spec_path.empty() || spec_path == "default") {
    spec = breadsim::default_bounds_spec();
  } else {
    spec = breadsim::parse_bounds_spec(breadsim::parse_bounds_file(spec_path));
  }
  const breadsim::BoundsReport report = breadsim::verify_bounds(spec);
  for (const auto& check : report.checks) {
    std::printf("%s %s bound=%.6g measured=%.6g\n",
                check.satisfied ? "PASS" : "FAIL", check.name.c_str(),
                check.bound_value, check.measured_value);
  }
  if (!report.all_satisfied()) {
    std::cerr << "error[bounds]: at least one inequality failed\n";
    return kExitBounds;
  }
  (void)flags;
  return 0;
}

int cmd_oracle(int k, int budget, int start, std::optional<int> target,
               const std::string& model, int d, double eps,
               std::optional<int> lower_bound, std::uint64_t model_seed) {
  breadsim::PolicyTable table = [&] {
    if (model == "symmetric")
      return breadsim::build_symmetric_walker(k, lower_bound.value_or(-k));
    if (model == "defa1") {
      breadsim::SmallModelConfig config;
      config.num_states = k;
      config.max_jump = d;
      config.weak_prob = eps;
      config.lower_bound = lower_bound.value_or(0);
      config.seed = model_seed;
      return breadsim::build_small_model(config);
    }
    throw breadsim::ConfigInvalid("--model must be symmetric or defa1");
  }();
  const double p =
      breadsim::hitting_probability_dp(table, start, target.value_or(k), budget);
  std::printf("%.12g\n", p);
  return 0;
}

int cmd_split(const std::string& input, std::vector<std::string> separators,
              int episodes) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw breadsim::IoError("cannot read '" + input + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  for (auto& sep : separators) sep = decode_escapes(sep);
  const auto steps = breadsim::split_steps(buffer.str(), separators);
  const auto split = breadsim::aggregate_episodes(steps, episodes);
  nlohmann::json out = nlohmann::json::array();
  for (int e = 0; e < split.episode_count(); ++e) out.push_back(split.episode_text(e));
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_plot(const std::vector<std::string>& csv_paths, const std::string& out,
             const std::string& metric, const GlobalFlags& flags) {
  std::vector<std::filesystem::path> paths(csv_paths.begin(), csv_paths.end());
  breadsim::write_success_svg(paths, out, metric);
  if (!flags.quiet) std::cout << out << "\n";
  return 0;
}

int cmd_flops(const std::string& method, double n, double d_sample, int n_rollout,
              double d_additional, int steps) {
  breadsim::FlopsQuery query;
  if (method == "sft") query.method = breadsim::FlopsMethod::Sft;
  else if (method == "grpo") query.method = breadsim::FlopsMethod::Grpo;
  else if (method == "bread") query.method = breadsim::FlopsMethod::Bread;
  else if (method == "grpo_et") query.method = breadsim::FlopsMethod::GrpoEt;
  else throw breadsim::ConfigInvalid("--method must be sft, grpo, bread or grpo_et");
  query.params_n = n;
  query.d_sample = d_sample;
  query.n_rollout = n_rollout;
  query.d_additional = d_additional;
  query.steps = steps;
  std::printf("%.12g\n", breadsim::estimate_flops(query));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov-chain navigation testbed: anchored-rollout trainers, "
               "exact hitting-probability oracle and experiment harness"};
  app.set_version_flag("--version", "breadsim 0.1.0");
  app.require_subcommand(1);

  GlobalFlags flags;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value,
                                  "Override the config seed list with one seed");
  app.add_option("--threads", flags.threads, "Worker threads (default: hardware)");
  app.add_flag("--quiet", flags.quiet, "Suppress informational output");

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("config", run_config, "Config file")->required();

  std::string sweep_config;
  auto* sweep = app.add_subcommand("sweep", "Fan an experiment out over sweep axes");
  sweep->add_option("config", sweep_config, "Config file with [sweep] sections")
      ->required();

  std::string bounds_spec = "default";
  auto* bounds = app.add_subcommand("bounds", "Verify the walk and stitching tail bounds");
  bounds->add_option("spec", bounds_spec, "Bounds spec file or 'default'");

  int oracle_k = 0, oracle_l = 0, oracle_start = 0, oracle_d = 2;
  std::optional<int> oracle_target, oracle_lower;
  double oracle_eps = 0.05;
  std::string oracle_model = "symmetric";
  std::uint64_t oracle_model_seed = 0;
  auto* oracle = app.add_subcommand("oracle", "Exact hitting probability via DP");
  oracle->add_option("--k", oracle_k, "Goal state")->required();
  oracle->add_option("--l", oracle_l, "Step budget")->required();
  oracle->add_option("--start", oracle_start, "Start state (default 0)");
  oracle->add_option("--target", oracle_target, "Target state (default: goal)");
  oracle->add_option("--model", oracle_model, "symmetric | defa1");
  oracle->add_option("--d", oracle_d, "Jump capacity (defa1)");
  oracle->add_option("--eps", oracle_eps, "Weak transition probability (defa1)");
  oracle->add_option("--lower-bound", oracle_lower, "Lowest state");
  oracle->add_option("--model-seed", oracle_model_seed, "Seed for the defa1 build");

  std::string split_input;
  std::vector<std::string> split_separators;
  int split_episodes = 10;
  auto* split = app.add_subcommand("split", "Split a text trace into episodes");
  split->add_option("--input", split_input, "Text file")->required();
  split->add_option("--separators", split_separators,
                    "Separator strings; \\n etc. are decoded")
      ->required();
  split->add_option("--episodes", split_episodes, "Target episode count");

  std::vector<std::string> plot_inputs;
  std::string plot_out, plot_metric = "dp_success";
  auto* plot = app.add_subcommand("plot", "Render success-vs-iteration SVG");
  plot->add_option("csv", plot_inputs, "Result CSV files")->required();
  plot->add_option("--out", plot_out, "Output SVG path")->required();
  plot->add_option("--metric", plot_metric, "dp_success | mc_success");

  std::string flops_method;
  double flops_n = 0, flops_d_sample = 0, flops_d_additional = 0;
  int flops_rollouts = 0, flops_steps = 1;
  auto* flops = app.add_subcommand("flops", "Training-cost estimate");
  flops->add_option("--method", flops_method, "sft | grpo | bread | grpo_et")
      ->required();
  flops->add_option("--n", flops_n, "Model parameter count")->required();
  flops->add_option("--d-sample", flops_d_sample, "Tokens per sample pass")
      ->required();
  flops->add_option("--n-rollout", flops_rollouts, "Rollouts per step");
  flops->add_option("--d-additional", flops_d_additional,
                    "Recorded extra generation tokens");
  flops->add_option("--steps", flops_steps, "Training steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "error[usage]: " << e.what() << "\n";
    return kExitUsage;
  }
  if (seed_opt->count() > 0) flags.seed = seed_value;

  try {
    if (run->parsed()) return cmd_run(run_config, flags);
    if (sweep->parsed()) return cmd_sweep(sweep_config, flags);
    if (bounds->parsed()) return cmd_bounds(bounds_spec, flags);
    if (oracle->parsed())
      return cmd_oracle(oracle_k, oracle_l, oracle_start, oracle_target, oracle_model,
                        oracle_d, oracle_eps, oracle_lower, oracle_model_seed);
    if (split->parsed()) return cmd_split(split_input, split_separators, split_episodes);
    if (plot->parsed()) return cmd_plot(plot_inputs, plot_out, plot_metric, flags);
    if (flops->parsed())
      return cmd_flops(flops_method, flops_n, flops_d_sample, flops_rollouts,
                       flops_d_additional, flops_steps);
    std::cerr << "error[usage]: no subcommand given\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error[config]: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error[runtime]: " << e.what() << "\n";
    return kExitRuntime;
  }
}
