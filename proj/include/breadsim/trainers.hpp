#pragma once

/**
 * Training procedures over the chain environment.
 *
 * All trainers are deterministic functions of (inputs, master seed):
 * every rollout, probe and evaluation draws from a stream derived from
 * (seed, purpose, iteration, index). Groups whose rewards are all equal
 * carry no learning signal and skip the update, leaving the policy
 * bit-identical for that iteration.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "breadsim/anchor_search.hpp"
#include "breadsim/chain.hpp"
#include "breadsim/errors.hpp"
#include "breadsim/objectives.hpp"
#include "breadsim/rng.hpp"

namespace breadsim {

struct EvalPoint {
  int iteration = 0;
  double mc_success = 0.0;
  double dp_success = 0.0;  // exact, from the hitting-probability DP
  double mean_traj_len = 0.0;
  double mean_hint_len = 0.0;
  double kl_to_ref = 0.0;
  long degenerate_groups = 0;  // cumulative
  double used_tokens = 0.0;    // cumulative transitions in training groups
  double extra_tokens = 0.0;   // cumulative probe transitions not trained on
};

struct MarkovRoundLog {
  int anchor_index = 0;  // expert episode the round branches from
  int iterations = 0;
  double final_rate = 0.0;
};

struct TrainingLog {
  std::vector<EvalPoint> points;
  std::vector<MarkovRoundLog> rounds;
  long degenerate_groups = 0;
  long full_hint_failures = 0;
  long dropped_expert_tokens = 0;
  long updates_applied = 0;
  long successful_rollouts = 0;  // reward-1 rollouts sampled, probes included
  double used_tokens = 0.0;
  double extra_tokens = 0.0;
};

struct TrainOptions {
  int eval_every = 50;
  int mc_samples = 1000;
};

struct TrainResult {
  PolicyTable policy;
  TrainingLog log;
};

struct EvalPair {
  double mc_rate = 0.0;
  double dp_rate = 0.0;
};

/// Monte-Carlo and DP-exact success rate of the full task (state 0 to the
/// goal) under the given budget.
inline EvalPair evaluate_policy(const PolicyTable& policy, int budget,
                                int samples = 1000, std::uint64_t seed = 0,
                                std::uint64_t eval_id = 0) {
  EvalPair out;
  out.dp_rate = hitting_probability_dp(policy, 0, policy.goal_state(), budget);
  long wins = 0;
  for (int i = 0; i < samples; ++i) {
    RngStream rng(derive_seed(seed, StreamPurpose::Eval, eval_id,
                              static_cast<std::uint64_t>(i)));
    wins += sample_rollout(policy, 0, budget, policy.goal_state(), rng).reward;
  }
  out.mc_rate = samples > 0 ? static_cast<double>(wins) / samples : 0.0;
  return out;
}

struct SftReport {
  int applied_per_step = 0;  // feasible transitions per pass
  int masked_per_step = 0;   // transitions outside the student's reach
  int steps = 0;
};

struct SftResult {
  PolicyTable policy;
  SftReport report;
};

/// Gradient ascent on the log-likelihood of the trace's feasible
/// transitions. Infeasible transitions are skipped and counted; if every
/// transition is infeasible the returned table is bit-identical to the
/// input.
inline SftResult sft_update(const PolicyTable& policy, const ExpertTrace& trace,
                            double learning_rate, int steps) {
  check_trace_shape(trace, policy.goal_state());
  SftReport report;
  report.steps = steps;
  std::vector<std::pair<int, int>> feasible;  // (state, offset)
  for (std::size_t t = 0; t + 1 < trace.states.size(); ++t) {
    const int s = trace.states[t];
    const int offset = trace.states[t + 1] - s;
    if (offset <= policy.max_jump() && policy.usable(s, offset)) {
      feasible.emplace_back(s, offset);
      ++report.applied_per_step;
    } else {
      ++report.masked_per_step;
    }
  }
  if (feasible.empty() || steps <= 0) return {policy, report};

  PolicyTable out = policy;
  const int d = out.max_jump();
  std::vector<double> grad(out.table_size());
  for (int step = 0; step < steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& [s, offset] : feasible) {
      const auto row = out.row(s);
      const auto mask = out.row_mask(s);
      const std::size_t base = out.cell(s, -d);
      for (std::size_t o = 0; o < row.size(); ++o) {
        if (!mask[o]) continue;
        const double indicator = (static_cast<int>(o) == offset + d) ? 1.0 : 0.0;
        grad[base + o] += indicator - row[o];
      }
    }
    out.apply_logit_step(grad, learning_rate);
  }
  return {std::move(out), report};
}

namespace detail {

struct WindowStats {
  double traj_len_sum = 0.0;
  long traj_count = 0;
  double hint_sum = 0.0;
  long iterations = 0;

  void add_iteration(double hint_len) {
    hint_sum += hint_len;
    ++iterations;
  }
  void add_group(const std::vector<Trajectory>& trajectories) {
    for (const auto& t : trajectories) traj_len_sum += t.total_length();
    traj_count += static_cast<long>(trajectories.size());
  }
  double mean_traj() const { return traj_count ? traj_len_sum / traj_count : 0.0; }
  double mean_hint() const { return iterations ? hint_sum / iterations : 0.0; }
  void reset() { *this = WindowStats{}; }
};

/// updates_per_batch ascent steps on the surrogate; the sampling policy
/// snapshot is the ratio denominator throughout.
inline void apply_updates(PolicyTable& policy, const PolicyTable& reference,
                          const RolloutGroup& group, const TrainHyper& hyper,
                          TrainingLog& log) {
  const PolicyTable sampling = policy;
  for (int u = 0; u < hyper.updates_per_batch; ++u) {
    const ObjectiveEval eval =
        objective_gradient(policy, sampling, reference, group, hyper);
    if (u == 0) log.dropped_expert_tokens += eval.dropped_expert_tokens;
    policy.apply_logit_step(eval.gradient, hyper.learning_rate);
    ++log.updates_applied;
  }
}

template <typename IterateFn>
TrainResult run_training(const PolicyTable& initial, const TrainHyper& hyper,
                         int iterations, std::uint64_t seed,
                         const TrainOptions& options, IterateFn&& iterate) {
  hyper.validate();
  PolicyTable policy = initial;
  const PolicyTable reference = initial;
  TrainingLog log;
  WindowStats window;

  auto emit_eval = [&](int iteration) {
    const EvalPair rates = evaluate_policy(policy, hyper.max_len, options.mc_samples,
                                           seed, static_cast<std::uint64_t>(iteration));
    EvalPoint point;
    point.iteration = iteration;
    point.mc_success = rates.mc_rate;
    point.dp_success = rates.dp_rate;
    point.mean_traj_len = window.mean_traj();
    point.mean_hint_len = window.mean_hint();
    point.kl_to_ref = mean_kl_to_reference(policy, reference);
    point.degenerate_groups = log.degenerate_groups;
    point.used_tokens = log.used_tokens;
    point.extra_tokens = log.extra_tokens;
    log.points.push_back(point);
    window.reset();
  };

  if (iterations > 0) emit_eval(0);
  for (int it = 1; it <= iterations; ++it) {
    iterate(it, policy, reference, log, window);
    if (it % options.eval_every == 0 || it == iterations) emit_eval(it);
  }
  return {std::move(policy), std::move(log)};
}

inline double group_steps(const std::vector<Trajectory>& trajectories) {
  double total = 0.0;
  for (const auto& t : trajectories) total += t.steps();
  return total;
}

}  // namespace detail

/// Vanilla group-relative training: G rollouts from state 0 per
/// iteration, update skipped when the group is degenerate.
inline TrainResult grpo_train(const PolicyTable& initial, const TrainHyper& hyper,
                              int iterations, std::uint64_t seed,
                              const TrainOptions& options = {}) {
  return detail::run_training(
      initial, hyper, iterations, seed, options,
      [&](int it, PolicyTable& policy, const PolicyTable& reference,
          TrainingLog& log, detail::WindowStats& window) {
        std::vector<Trajectory> rollouts;
        rollouts.reserve(static_cast<std::size_t>(hyper.group_size));
        for (int g = 0; g < hyper.group_size; ++g) {
          RngStream rng(derive_seed(seed, StreamPurpose::Rollout,
                                    static_cast<std::uint64_t>(it),
                                    static_cast<std::uint64_t>(g)));
          rollouts.push_back(sample_rollout(policy, 0, hyper.max_len,
                                            policy.goal_state(), rng));
          log.successful_rollouts += rollouts.back().reward;
        }
        log.used_tokens += detail::group_steps(rollouts);
        window.add_iteration(0.0);
        window.add_group(rollouts);
        const RolloutGroup group =
            make_rollout_group(std::move(rollouts), 0, hyper.sample_std);
        if (group.degenerate) {
          ++log.degenerate_groups;
          return;
        }
        detail::apply_updates(policy, reference, group, hyper, log);
      });
}

/// Group-relative training with the expert trajectory injected as the
/// G-th member of every group. Expert transitions the student mask
/// forbids carry no learnable mass and are dropped (counted in the log).
inline TrainResult grpo_et_train(const PolicyTable& initial,
                                 const Trajectory& expert_trajectory,
                                 const TrainHyper& hyper, int iterations,
                                 std::uint64_t seed,
                                 const TrainOptions& options = {}) {
  if (expert_trajectory.reward != 1)
    throw ExpertNotSuccessful("grpo_et_train: expert trajectory must carry reward 1");
  return detail::run_training(
      initial, hyper, iterations, seed, options,
      [&](int it, PolicyTable& policy, const PolicyTable& reference,
          TrainingLog& log, detail::WindowStats& window) {
        std::vector<Trajectory> rollouts;
        rollouts.reserve(static_cast<std::size_t>(hyper.group_size));
        for (int g = 0; g + 1 < hyper.group_size; ++g) {
          RngStream rng(derive_seed(seed, StreamPurpose::Rollout,
                                    static_cast<std::uint64_t>(it),
                                    static_cast<std::uint64_t>(g)));
          rollouts.push_back(sample_rollout(policy, 0, hyper.max_len,
                                            policy.goal_state(), rng));
          log.successful_rollouts += rollouts.back().reward;
        }
        log.used_tokens += detail::group_steps(rollouts);
        window.add_iteration(0.0);
        window.add_group(rollouts);
        const RolloutGroup group = build_grpo_et_group(
            std::move(rollouts), expert_trajectory, hyper.sample_std);
        if (group.degenerate) {
          ++log.degenerate_groups;
          return;
        }
        detail::apply_updates(policy, reference, group, hyper, log);
      });
}

/// Anchor-search training: each iteration finds an expert-prefix length
/// whose branched rollout group has a mixed success rate, then updates on
/// that group. The hint consumes episode budget, so rollouts anchored at
/// x_M sample at most max_len - M transitions. Iterations where even the
/// full hint fails are logged and skipped.
inline TrainResult bread_train(const PolicyTable& initial, const ExpertTrace& trace,
                               const TrainHyper& hyper, int iterations,
                               std::uint64_t seed, const TrainOptions& options = {},
                               const AnchorOptions& anchor_options = {}) {
  check_trace_shape(trace, initial.goal_state());
  const int num_episodes = trace.length();
  return detail::run_training(
      initial, hyper, iterations, seed, options,
      [&](int it, PolicyTable& policy, const PolicyTable& reference,
          TrainingLog& log, detail::WindowStats& window) {
        std::unordered_map<int, std::vector<Trajectory>> sampled;
        double probe_tokens = 0.0;
        auto oracle = [&](int m) {
          auto& rollouts = sampled[m];
          rollouts.reserve(static_cast<std::size_t>(hyper.group_size));
          const int start = trace.states[static_cast<std::size_t>(m)];
          const int budget = std::max(0, hyper.max_len - m);
          int wins = 0;
          for (int g = 0; g < hyper.group_size; ++g) {
            RngStream rng(derive_seed(seed, StreamPurpose::Probe,
                                      static_cast<std::uint64_t>(it),
                                      (static_cast<std::uint64_t>(m) << 32) |
                                          static_cast<std::uint64_t>(g)));
            Trajectory t =
                sample_rollout(policy, start, budget, policy.goal_state(), rng);
            t.start_offset = m;
            wins += t.reward;
            log.successful_rollouts += t.reward;
            probe_tokens += t.steps();
            rollouts.push_back(std::move(t));
          }
          return static_cast<double>(wins) / hyper.group_size;
        };

        const AnchorResult anchor =
            episode_anchor_search(oracle, num_episodes, anchor_options);
        if (anchor.status == AnchorStatus::FullHintFails) {
          ++log.full_hint_failures;
          log.extra_tokens += probe_tokens;
          window.add_iteration(static_cast<double>(num_episodes));
          return;
        }
        auto& used = sampled[anchor.prefix_len];
        log.used_tokens += detail::group_steps(used);
        log.extra_tokens += probe_tokens - detail::group_steps(used);
        window.add_iteration(static_cast<double>(anchor.prefix_len));
        window.add_group(used);
        const RolloutGroup group = make_rollout_group(
            std::move(used), anchor.prefix_len, hyper.sample_std);
        if (group.degenerate) {
          ++log.degenerate_groups;
          return;
        }
        detail::apply_updates(policy, reference, group, hyper, log);
      });
}

/// Round-based variant: walk the expert anchors from the goal end to the
/// start, training at each anchor until the sampled success rate clears
/// the threshold, then move one anchor earlier. Rounds that exceed the
/// iteration cap raise RoundBudgetExceeded.
inline TrainResult bread_markov_train(const PolicyTable& initial,
                                      const ExpertTrace& trace,
                                      double reward_threshold,
                                      int rollouts_per_iter, int max_len,
                                      const TrainHyper& hyper, std::uint64_t seed,
                                      int round_iteration_cap = 1000,
                                      const TrainOptions& options = {}) {
  check_trace_shape(trace, initial.goal_state());
  if (reward_threshold < 0.0 || reward_threshold > 1.0)
    throw ConfigInvalid("bread_markov_train: reward_threshold must lie in [0, 1]");
  if (rollouts_per_iter < 2)
    throw GroupTooSmall("bread_markov_train: need at least 2 rollouts per iteration");
  if (round_iteration_cap < 1)
    throw ConfigInvalid("bread_markov_train: round_iteration_cap must be >= 1");
  hyper.validate();

  PolicyTable policy = initial;
  const PolicyTable reference = initial;
  TrainingLog log;
  detail::WindowStats window;
  int global_it = 0;

  auto emit_eval = [&](int iteration) {
    const EvalPair rates = evaluate_policy(policy, max_len, options.mc_samples, seed,
                                           static_cast<std::uint64_t>(iteration));
    EvalPoint point;
    point.iteration = iteration;
    point.mc_success = rates.mc_rate;
    point.dp_success = rates.dp_rate;
    point.mean_traj_len = window.mean_traj();
    point.mean_hint_len = window.mean_hint();
    point.kl_to_ref = mean_kl_to_reference(policy, reference);
    point.degenerate_groups = log.degenerate_groups;
    point.used_tokens = log.used_tokens;
    point.extra_tokens = log.extra_tokens;
    log.points.push_back(point);
    window.reset();
  };

  emit_eval(0);
  const int total_episodes = trace.length();
  for (int anchor = total_episodes; anchor >= 1; --anchor) {
    const int start = trace.states[static_cast<std::size_t>(anchor)];
    const int budget = std::max(0, max_len - anchor);
    MarkovRoundLog round;
    round.anchor_index = anchor;
    double rate = 0.0;
    do {
      ++global_it;
      ++round.iterations;
      if (round.iterations > round_iteration_cap)
        throw RoundBudgetExceeded(anchor,
                                  "bread_markov_train: round iteration cap exceeded");
      std::vector<Trajectory> rollouts;
      rollouts.reserve(static_cast<std::size_t>(rollouts_per_iter));
      int wins = 0;
      for (int g = 0; g < rollouts_per_iter; ++g) {
        RngStream rng(derive_seed(seed, StreamPurpose::Rollout,
                                  static_cast<std::uint64_t>(global_it),
                                  static_cast<std::uint64_t>(g)));
        Trajectory t =
            sample_rollout(policy, start, budget, policy.goal_state(), rng);
        t.start_offset = anchor;
        wins += t.reward;
        log.successful_rollouts += t.reward;
        rollouts.push_back(std::move(t));
      }
      rate = static_cast<double>(wins) / rollouts_per_iter;
      log.used_tokens += detail::group_steps(rollouts);
      window.add_iteration(static_cast<double>(anchor));
      window.add_group(rollouts);
      const RolloutGroup group =
          make_rollout_group(std::move(rollouts), anchor, hyper.sample_std);
      if (group.degenerate) {
        ++log.degenerate_groups;
      } else {
        detail::apply_updates(policy, reference, group, hyper, log);
      }
      if (global_it % options.eval_every == 0) emit_eval(global_it);
    } while (rate < reward_threshold);
    round.final_rate = rate;
    log.rounds.push_back(round);
  }
  if (log.points.empty() || log.points.back().iteration != global_it)
    emit_eval(global_it);
  return {std::move(policy), std::move(log)};
}

}  // namespace breadsim
