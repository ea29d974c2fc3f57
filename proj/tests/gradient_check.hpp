#pragma once

// Shared finite-difference oracle for the surrogate gradient: random
// small instances (K <= 6, G <= 4, trajectory length <= 8) with mixed
// rewards, plus the central-difference sweep over every unmasked logit.

#include <algorithm>
#include <breadsim/chain.hpp>
#include <breadsim/objectives.hpp>
#include <breadsim/rng.hpp>
#include <cmath>
#include <vector>

namespace breadsim::testing {

inline PolicyTable perturbed(const PolicyTable& base, std::uint64_t seed, double scale) {
  PolicyTable out = base;
  RngStream rng(seed);
  for (int s = out.lower_bound(); s <= out.goal_state(); ++s)
    for (int o = -out.max_jump(); o <= out.max_jump(); ++o)
      if (out.usable(s, o))
        out.set_logit(s, o, out.logit(s, o) + scale * (rng.next_double() - 0.5));
  return out;
}

struct GradCheckInstance {
  PolicyTable policy_new;
  PolicyTable policy_old;
  PolicyTable policy_ref;
  RolloutGroup group;
  TrainHyper hyper;
};

inline GradCheckInstance make_gradcheck_instance(std::uint64_t seed) {
  RngStream rng(derive_seed(seed, 11));
  const int k = 3 + static_cast<int>(rng.next_below(4));  // 3..6
  const int d = std::min(1 + static_cast<int>(rng.next_below(2)), k - 1);

  SmallModelConfig config;
  config.num_states = k;
  config.max_jump = d;
  config.weak_prob = 0.1;
  config.seed = seed;
  const PolicyTable base = build_small_model(config);

  TrainHyper hyper;
  hyper.group_size = 2 + static_cast<int>(rng.next_below(3));  // 2..4
  hyper.clip_eps = 0.2;
  hyper.kl_beta = (seed % 2 == 0) ? 0.0 : 0.05;

  GradCheckInstance inst{perturbed(base, derive_seed(seed, 21), 0.15),
                         base,
                         perturbed(base, derive_seed(seed, 22), 0.3),
                         {},
                         hyper};

  std::vector<Trajectory> rollouts;
  const int len = 2 + static_cast<int>(rng.next_below(7));  // 2..8 steps
  for (int g = 0; g < hyper.group_size; ++g) {
    RngStream stream(derive_seed(seed, 31, static_cast<std::uint64_t>(g)));
    Trajectory t = sample_rollout(inst.policy_old, 0, len, k, stream);
    t.reward = g % 2;  // mixed rewards, never degenerate
    rollouts.push_back(std::move(t));
  }
  inst.group = make_rollout_group(std::move(rollouts), 0, hyper.sample_std);
  return inst;
}

inline bool ratios_clear_of_clip(const GradCheckInstance& inst, double margin) {
  for (const auto& traj : inst.group.trajectories) {
    for (int t = 0; t < traj.steps(); ++t) {
      const int s = traj.states[static_cast<std::size_t>(t)];
      const int offset = traj.states[static_cast<std::size_t>(t) + 1] - s;
      const double ratio =
          inst.policy_new.prob(s, offset) / inst.policy_old.prob(s, offset);
      if (std::abs(ratio - (1.0 - inst.hyper.clip_eps)) < margin) return false;
      if (std::abs(ratio - (1.0 + inst.hyper.clip_eps)) < margin) return false;
    }
  }
  return true;
}

/// Central differences over every unmasked logit of policy_new; returns
/// the worst relative error against the analytic gradient.
inline double max_fd_relative_error(const GradCheckInstance& inst, double h = 1e-6) {
  const ObjectiveEval eval = objective_gradient(inst.policy_new, inst.policy_old,
                                                inst.policy_ref, inst.group, inst.hyper);
  double worst = 0.0;
  for (int s = inst.policy_new.lower_bound(); s <= inst.policy_new.goal_state(); ++s) {
    for (int o = -inst.policy_new.max_jump(); o <= inst.policy_new.max_jump(); ++o) {
      if (!inst.policy_new.usable(s, o)) continue;
      PolicyTable plus = inst.policy_new;
      plus.set_logit(s, o, plus.logit(s, o) + h);
      PolicyTable minus = inst.policy_new;
      minus.set_logit(s, o, minus.logit(s, o) - h);
      const double fd =
          (surrogate_objective(plus, inst.policy_old, inst.policy_ref, inst.group,
                               inst.hyper) -
           surrogate_objective(minus, inst.policy_old, inst.policy_ref, inst.group,
                               inst.hyper)) /
          (2 * h);
      const double analytic = eval.gradient[inst.policy_new.cell(s, o)];
      const double rel = std::abs(analytic - fd) /
                         std::max({std::abs(analytic), std::abs(fd), 1e-4});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace breadsim::testing
