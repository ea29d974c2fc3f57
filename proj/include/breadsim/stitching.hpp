#pragma once

/**
 * Memorization-based stitching variant.
 *
 * Round 1 rolls out from the next-to-last expert anchor until the goal is
 * hit; round tau rolls out from one anchor earlier, terminates as soon as
 * the walk touches any state of the remembered suffix, and completes the
 * trace by replaying that suffix. A round succeeds when the replayed
 * prefix + walk + remembered tail fits the total length budget; the
 * winning path becomes the new memory. After the last round the memory is
 * a full start-to-goal student path.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "breadsim/chain.hpp"
#include "breadsim/errors.hpp"
#include "breadsim/rng.hpp"

namespace breadsim {

struct StitchMemory {
  std::vector<int> suffix;   // remembered path, always ending at the goal
  int round = 0;             // rounds completed so far
  int rollouts_per_round = 0;
  int max_total_len = 0;
};

enum class StitchStatus { Success, RoundFailed };

struct StitchResult {
  StitchStatus status = StitchStatus::RoundFailed;
  int failed_round = -1;  // 1-based round index when status == RoundFailed
  StitchMemory memory;    // final suffix; on success a full 0 -> goal path
  std::vector<int> rollouts_used_per_round;
  long total_sampled_steps = 0;

  bool success() const { return status == StitchStatus::Success; }
  const std::vector<int>& path() const { return memory.suffix; }
};

inline StitchResult stitching_bread(const PolicyTable& student,
                                    const ExpertTrace& trace, int max_total_len,
                                    int rollouts_per_round, std::uint64_t seed) {
  if (student.max_jump() != 1)
    throw ConfigInvalid("stitching_bread: student must have jump capacity 1");
  if (rollouts_per_round < 1)
    throw ConfigInvalid("stitching_bread: need at least one rollout per round");
  if (max_total_len < 1)
    throw ConfigInvalid("stitching_bread: max_total_len must be >= 1");
  check_trace_shape(trace, student.goal_state());

  const int total_rounds = trace.length();
  const int lower = student.lower_bound();
  const int goal = student.goal_state();

  StitchResult result;
  result.memory.rollouts_per_round = rollouts_per_round;
  result.memory.max_total_len = max_total_len;
  result.memory.suffix = {goal};  // round 0: the goal itself

  // Position of each state's last occurrence in the current suffix, so a
  // hit replays the shortest remaining tail.
  std::vector<int> suffix_pos(static_cast<std::size_t>(student.num_states()), -1);
  suffix_pos[static_cast<std::size_t>(goal - lower)] = 0;

  for (int round = 1; round <= total_rounds; ++round) {
    const int start = trace.states[static_cast<std::size_t>(total_rounds - round)];
    const int prefix_steps = total_rounds - round;
    const auto& suffix = result.memory.suffix;

    bool round_done = false;
    int rollouts_used = 0;
    for (int attempt = 0; attempt < rollouts_per_round && !round_done; ++attempt) {
      ++rollouts_used;
      RngStream rng(derive_seed(seed, StreamPurpose::Stitch,
                                static_cast<std::uint64_t>(round),
                                static_cast<std::uint64_t>(attempt)));
      std::vector<int> walk{start};
      int s = start;
      int hit_pos = suffix_pos[static_cast<std::size_t>(s - lower)];
      // Walk until the remembered suffix is touched or the budget makes
      // success impossible even with an empty tail.
      while (hit_pos < 0 &&
             prefix_steps + static_cast<int>(walk.size()) - 1 < max_total_len) {
        s = sample_transition(student, s, rng);
        walk.push_back(s);
        ++result.total_sampled_steps;
        hit_pos = suffix_pos[static_cast<std::size_t>(s - lower)];
      }
      if (hit_pos < 0) continue;
      const int walk_steps = static_cast<int>(walk.size()) - 1;
      const int tail_steps = static_cast<int>(suffix.size()) - 1 - hit_pos;
      if (prefix_steps + walk_steps + tail_steps > max_total_len) continue;

      std::vector<int> stitched(walk.begin(), walk.end());
      stitched.insert(stitched.end(), suffix.begin() + hit_pos + 1, suffix.end());
      result.memory.suffix = std::move(stitched);
      result.memory.round = round;
      round_done = true;
    }
    result.rollouts_used_per_round.push_back(rollouts_used);
    if (!round_done) {
      result.status = StitchStatus::RoundFailed;
      result.failed_round = round;
      return result;
    }
    std::fill(suffix_pos.begin(), suffix_pos.end(), -1);
    for (std::size_t i = 0; i < result.memory.suffix.size(); ++i)
      suffix_pos[static_cast<std::size_t>(result.memory.suffix[i] - lower)] =
          static_cast<int>(i);
  }
  result.status = StitchStatus::Success;
  result.failed_round = -1;
  return result;
}

/// Path-validity invariant for a completed stitch: starts at 0, ends at
/// the goal, unit steps, and fits the length budget.
inline bool stitch_path_valid(const StitchResult& result, int goal_state,
                              int max_total_len) {
  if (!result.success()) return false;
  const auto& path = result.path();
  if (path.empty() || path.front() != 0 || path.back() != goal_state) return false;
  if (static_cast<int>(path.size()) - 1 > max_total_len) return false;
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    if (std::abs(path[i + 1] - path[i]) != 1) return false;
  return true;
}

}  // namespace breadsim
