#pragma once

/**
 * Group-relative objective for tabular policies.
 *
 * A rollout group is G trajectories with terminal 0/1 rewards. Advantages
 * are the group-normalized rewards (population std by default); since the
 * reward is terminal, the advantage is one scalar per trajectory,
 * broadcast over its transitions. The surrogate is the clipped ratio
 * objective with an exact per-state KL penalty against a reference
 * policy, averaged 1/G over trajectories and 1/|o_i| over self-generated
 * transitions. Groups whose rewards are all equal are degenerate and
 * carry no signal; callers skip the update.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "breadsim/chain.hpp"
#include "breadsim/errors.hpp"

namespace breadsim {

struct TrainHyper {
  int group_size = 8;        // G
  double clip_eps = 0.2;
  double kl_beta = 0.001;
  double learning_rate = 0.5;
  int max_len = 64;          // episode budget L
  int updates_per_batch = 1;
  bool sample_std = false;   // population std unless set

  void validate() const {
    if (group_size < 2) throw GroupTooSmall("group_size must be >= 2");
    if (!(clip_eps > 0.0 && clip_eps < 1.0))
      throw ConfigInvalid("clip_eps must lie in (0, 1)");
    if (kl_beta < 0.0) throw ConfigInvalid("kl_beta must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigInvalid("learning_rate must be > 0");
    if (max_len < 0) throw ConfigInvalid("max_len must be >= 0");
    if (updates_per_batch < 1) throw ConfigInvalid("updates_per_batch must be >= 1");
  }
};

struct RolloutGroup {
  int prompt_prefix_len = 0;  // 0 when no hint was used
  std::vector<Trajectory> trajectories;
  std::vector<double> rewards;
  std::vector<double> advantages;  // empty when degenerate
  bool degenerate = false;
  int expert_index = -1;  // member injected from an expert trace, if any

  int size() const { return static_cast<int>(trajectories.size()); }
};

/// Group-normalized advantages: (R_i - mean) / std. Returns nullopt when
/// the rewards have zero variance (degenerate group).
inline std::optional<std::vector<double>> group_advantages(
    const std::vector<double>& rewards, bool sample_std = false) {
  const std::size_t n = rewards.size();
  if (n < 2) throw GroupTooSmall("group_advantages needs at least 2 rewards");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(sample_std ? n - 1 : n);
  if (var == 0.0) return std::nullopt;
  const double inv_std = 1.0 / std::sqrt(var);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (rewards[i] - mean) * inv_std;
  return out;
}

inline RolloutGroup make_rollout_group(std::vector<Trajectory> trajectories,
                                       int prompt_prefix_len = 0,
                                       bool sample_std = false) {
  RolloutGroup group;
  group.prompt_prefix_len = prompt_prefix_len;
  group.trajectories = std::move(trajectories);
  group.rewards.reserve(group.trajectories.size());
  for (const auto& t : group.trajectories)
    group.rewards.push_back(static_cast<double>(t.reward));
  auto adv = group_advantages(group.rewards, sample_std);
  if (adv) {
    group.advantages = std::move(*adv);
  } else {
    group.degenerate = true;
  }
  return group;
}

/// Group of size G whose last member is a successful expert trajectory.
/// Never degenerate while at least one self-rollout fails.
inline RolloutGroup build_grpo_et_group(std::vector<Trajectory> self_rollouts,
                                        Trajectory expert_trajectory,
                                        bool sample_std = false) {
  if (expert_trajectory.reward != 1)
    throw ExpertNotSuccessful("expert trajectory must carry reward 1");
  const int expert = static_cast<int>(self_rollouts.size());
  self_rollouts.push_back(std::move(expert_trajectory));
  RolloutGroup group = make_rollout_group(std::move(self_rollouts), 0, sample_std);
  group.expert_index = expert;
  return group;
}

/// Exact KL divergence of the two categorical rows at one state. Offsets
/// masked on both sides are excluded (0 ln 0 = 0).
inline double kl_reference(const PolicyTable& policy, const PolicyTable& reference,
                           int state) {
  if (policy.lower_bound() != reference.lower_bound() ||
      policy.goal_state() != reference.goal_state() ||
      policy.max_jump() != reference.max_jump() ||
      policy.row_mask(state).size() != reference.row_mask(state).size())
    throw MaskMismatch("kl_reference: policies have different shapes");
  const auto mp = policy.row_mask(state);
  const auto mr = reference.row_mask(state);
  for (std::size_t o = 0; o < mp.size(); ++o)
    if (mp[o] != mr[o]) throw MaskMismatch("kl_reference: mask structure differs");
  const auto p = policy.row(state);
  const auto q = reference.row(state);
  double kl = 0.0;
  for (std::size_t o = 0; o < p.size(); ++o)
    if (mp[o]) kl += p[o] * std::log(p[o] / q[o]);
  return kl;
}

/// Mean exact KL(policy || reference) over all states.
inline double mean_kl_to_reference(const PolicyTable& policy,
                                   const PolicyTable& reference) {
  double total = 0.0;
  for (int s = policy.lower_bound(); s <= policy.goal_state(); ++s)
    total += kl_reference(policy, reference, s);
  return total / policy.num_states();
}

struct ObjectiveEval {
  double value = 0.0;
  std::vector<double> gradient;       // same layout as the policy table
  long dropped_expert_tokens = 0;     // expert transitions outside the mask
};

/// Clipped-surrogate value with exact KL penalty. Ratios run over
/// self-generated transitions only; the hint prefix is conditioning
/// context. Expert-member transitions that the policy mask forbids carry
/// no learnable parameter and are dropped from the sum.
inline ObjectiveEval evaluate_objective(const PolicyTable& policy_new,
                                        const PolicyTable& policy_old,
                                        const PolicyTable& policy_ref,
                                        const RolloutGroup& group,
                                        const TrainHyper& hyper,
                                        bool want_gradient) {
  if (group.degenerate)
    throw ConfigInvalid("evaluate_objective: degenerate group, caller must skip");
  const int g = group.size();
  const int d = policy_new.max_jump();
  const double lo = 1.0 - hyper.clip_eps;
  const double hi = 1.0 + hyper.clip_eps;

  ObjectiveEval out;
  if (want_gradient) out.gradient.assign(policy_new.table_size(), 0.0);

  // KL and its row gradient depend only on the state; cache per state.
  std::vector<double> kl_cache(static_cast<std::size_t>(policy_new.num_states()),
                               std::numeric_limits<double>::quiet_NaN());
  auto kl_at = [&](int state) {
    auto& slot = kl_cache[static_cast<std::size_t>(state - policy_new.lower_bound())];
    if (std::isnan(slot)) slot = kl_reference(policy_new, policy_ref, state);
    return slot;
  };

  double value = 0.0;
  for (int i = 0; i < g; ++i) {
    const Trajectory& traj = group.trajectories[i];
    const double adv = group.advantages[static_cast<std::size_t>(i)];
    const bool is_expert = (i == group.expert_index);
    const int steps = traj.steps();
    if (steps <= 0) continue;

    // First pass: count usable tokens so 1/|o_i| reflects what is summed.
    int usable_tokens = 0;
    for (int t = 0; t < steps; ++t) {
      const int s = traj.states[static_cast<std::size_t>(t)];
      const int offset = traj.states[static_cast<std::size_t>(t) + 1] - s;
      if (std::abs(offset) > d || !policy_old.usable(s, offset)) {
        if (!is_expert)
          throw RatioUndefined("sampling policy assigns probability 0 to a taken transition");
        ++out.dropped_expert_tokens;
        continue;
      }
      ++usable_tokens;
    }
    if (usable_tokens == 0) continue;
    const double w = 1.0 / usable_tokens;

    double traj_sum = 0.0;
    for (int t = 0; t < steps; ++t) {
      const int s = traj.states[static_cast<std::size_t>(t)];
      const int offset = traj.states[static_cast<std::size_t>(t) + 1] - s;
      if (std::abs(offset) > d || !policy_old.usable(s, offset)) continue;
      const double p_new = policy_new.prob(s, offset);
      const double p_old = policy_old.prob(s, offset);
      const double ratio = p_new / p_old;
      const double clipped = std::clamp(ratio, lo, hi);
      const double kl = hyper.kl_beta > 0.0 ? kl_at(s) : 0.0;
      traj_sum += std::min(ratio * adv, clipped * adv) - hyper.kl_beta * kl;

      if (!want_gradient) continue;
      // The min keeps the unclipped branch unless clipping is active on
      // the advantage's bad side; active clipping freezes the token.
      const bool contributes =
          (adv > 0.0 && ratio <= hi) || (adv < 0.0 && ratio >= lo);
      const double scale = w / g;
      const auto row_new = policy_new.row(s);
      const auto row_ref = policy_ref.row(s);
      const auto mask = policy_new.row_mask(s);
      const std::size_t base = policy_new.cell(s, -d);
      if (contributes) {
        const double c = scale * adv * ratio;
        for (std::size_t o = 0; o < row_new.size(); ++o) {
          if (!mask[o]) continue;
          const double indicator = (static_cast<int>(o) == offset + d) ? 1.0 : 0.0;
          out.gradient[base + o] += c * (indicator - row_new[o]);
        }
      }
      if (hyper.kl_beta > 0.0) {
        const double bscale = scale * hyper.kl_beta;
        for (std::size_t o = 0; o < row_new.size(); ++o) {
          if (!mask[o]) continue;
          out.gradient[base + o] -=
              bscale * row_new[o] * (std::log(row_new[o] / row_ref[o]) - kl);
        }
      }
    }
    value += w * traj_sum;
  }
  out.value = value / g;
  return out;
}

inline double surrogate_objective(const PolicyTable& policy_new,
                                  const PolicyTable& policy_old,
                                  const PolicyTable& policy_ref,
                                  const RolloutGroup& group,
                                  const TrainHyper& hyper) {
  return evaluate_objective(policy_new, policy_old, policy_ref, group, hyper,
                            /*want_gradient=*/false)
      .value;
}

/// Exact gradient of the surrogate with respect to every unmasked logit.
inline ObjectiveEval objective_gradient(const PolicyTable& policy_new,
                                        const PolicyTable& policy_old,
                                        const PolicyTable& policy_ref,
                                        const RolloutGroup& group,
                                        const TrainHyper& hyper) {
  return evaluate_objective(policy_new, policy_old, policy_ref, group, hyper,
                            /*want_gradient=*/true);
}

}  // namespace breadsim
