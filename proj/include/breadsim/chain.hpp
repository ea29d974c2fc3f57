#pragma once

/**
 * Markov-chain navigation environment.
 *
 * A tabular softmax policy over integer states [lower_bound, K] with a
 * bounded jump capacity d. Rows are parameterized by logits over the
 * offsets {-d..+d}; offsets that would leave the state range, or that a
 * policy family forbids (the symmetric walker masks its self-loop), are
 * masked and carry probability exactly 0 forever. State K is the goal:
 * rollouts terminate on arrival.
 *
 * Two policy families:
 *  - DefA1: per state, one seeded, uniformly drawn non-self offset is
 *    favored with probability 1 - (u-1)*eps (u = unmasked offsets of the
 *    row); every other unmasked offset gets exactly eps. The favored mass
 *    is the normalization remainder, so rows sum to 1 exactly.
 *  - SymmetricWalk: d = 1, left/right each 0.5, self-loop masked,
 *    reflecting at the lower bound (the single in-range move gets
 *    probability 1).
 */

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "breadsim/errors.hpp"
#include "breadsim/rng.hpp"

namespace breadsim {

struct SmallModelConfig {
  int num_states = 2;       // K; states run 0..K
  int max_jump = 1;         // d
  double weak_prob = 0.05;  // eps, probability of each non-favored move
  int lower_bound = 0;      // B <= 0, used by the symmetric-walk family
  std::uint64_t seed = 0;
};

enum class PolicyKind { DefA1, SymmetricWalk };

class PolicyTable {
 public:
  PolicyTable(int lower_bound, int goal_state, int max_jump, PolicyKind kind)
      : lower_(lower_bound), goal_(goal_state), d_(max_jump), kind_(kind) {
    if (lower_ > 0 || goal_ <= lower_ || d_ < 1)
      throw ConfigInvalid("PolicyTable: need lower_bound <= 0 < goal and max_jump >= 1");
    const std::size_t cells =
        static_cast<std::size_t>(num_states()) * num_offsets();
    logits_.assign(cells, 0.0);
    probs_.assign(cells, 0.0);
    mask_.assign(cells, 0);
  }

  int lower_bound() const { return lower_; }
  int goal_state() const { return goal_; }
  int max_jump() const { return d_; }
  int num_states() const { return goal_ - lower_ + 1; }
  int num_offsets() const { return 2 * d_ + 1; }
  PolicyKind kind() const { return kind_; }
  std::size_t table_size() const { return logits_.size(); }

  bool in_range(int state) const { return state >= lower_ && state <= goal_; }

  std::size_t cell(int state, int offset) const {
    assert(in_range(state) && offset >= -d_ && offset <= d_);
    return static_cast<std::size_t>(state - lower_) * num_offsets() +
           static_cast<std::size_t>(offset + d_);
  }

  bool usable(int state, int offset) const { return mask_[cell(state, offset)] != 0; }

  double prob(int state, int offset) const { return probs_[cell(state, offset)]; }
  double logit(int state, int offset) const { return logits_[cell(state, offset)]; }

  /// Probability row for one state, indexed by offset + max_jump.
  std::span<const double> row(int state) const {
    return {probs_.data() + cell(state, -d_), static_cast<std::size_t>(num_offsets())};
  }
  std::span<const std::uint8_t> row_mask(int state) const {
    return {mask_.data() + cell(state, -d_), static_cast<std::size_t>(num_offsets())};
  }

  void set_usable(int state, int offset, bool usable) {
    mask_[cell(state, offset)] = usable ? 1 : 0;
  }

  void set_logit(int state, int offset, double value) {
    logits_[cell(state, offset)] = value;
    refresh_row(state - lower_);
  }

  /// Writes a row from explicit probabilities (logit = ln p on unmasked
  /// cells). Probabilities must be positive on unmasked cells.
  void set_row_probabilities(int state, std::span<const double> p) {
    const int n = num_offsets();
    for (int o = 0; o < n; ++o) {
      const std::size_t idx = cell(state, o - d_);
      if (mask_[idx]) logits_[idx] = std::log(p[static_cast<std::size_t>(o)]);
    }
    refresh_row(state - lower_);
  }

  /// logits += scale * step on unmasked cells, then recompute rows.
  void apply_logit_step(std::span<const double> step, double scale) {
    for (std::size_t i = 0; i < logits_.size(); ++i)
      if (mask_[i]) logits_[i] += scale * step[i];
    refresh_all();
  }

  void refresh_all() {
    for (int r = 0; r < num_states(); ++r) refresh_row(r);
  }

  bool identical_bits(const PolicyTable& other) const {
    return lower_ == other.lower_ && goal_ == other.goal_ && d_ == other.d_ &&
           kind_ == other.kind_ && mask_ == other.mask_ &&
           logits_ == other.logits_ && probs_ == other.probs_;
  }

  bool same_shape(const PolicyTable& other) const {
    return lower_ == other.lower_ && goal_ == other.goal_ && d_ == other.d_ &&
           mask_ == other.mask_;
  }

  /// Count of unmasked cells; the trainable parameter count.
  long parameter_count() const {
    long n = 0;
    for (auto m : mask_) n += m;
    return n;
  }

  double max_abs_logit_difference(const PolicyTable& other) const {
    double m = 0.0;
    for (std::size_t i = 0; i < logits_.size(); ++i)
      m = std::max(m, std::abs(logits_[i] - other.logits_[i]));
    return m;
  }

 private:
  void refresh_row(int r) {
    const int n = num_offsets();
    const std::size_t base = static_cast<std::size_t>(r) * n;
    double hi = -std::numeric_limits<double>::infinity();
    for (int o = 0; o < n; ++o)
      if (mask_[base + o]) hi = std::max(hi, logits_[base + o]);
    double total = 0.0;
    for (int o = 0; o < n; ++o) {
      if (mask_[base + o]) {
        probs_[base + o] = std::exp(logits_[base + o] - hi);
        total += probs_[base + o];
      } else {
        probs_[base + o] = 0.0;
      }
    }
    for (int o = 0; o < n; ++o)
      if (mask_[base + o]) probs_[base + o] /= total;
  }

  int lower_, goal_, d_;
  PolicyKind kind_;
  std::vector<double> logits_;
  std::vector<double> probs_;
  std::vector<std::uint8_t> mask_;
};

/// Expert state sequence x_0..x_T. jump_bound_c, when set, declares that
/// every jump lies in [K/(cT), cK/T].
struct ExpertTrace {
  std::vector<int> states;
  std::optional<double> jump_bound_c;

  int length() const { return static_cast<int>(states.size()) - 1; }
};

struct Trajectory {
  std::vector<int> states;  // sampled path, first element is the start state
  int start_offset = 0;     // expert-prefix steps consumed before sampling
  int reward = 0;
  bool truncated = false;

  int steps() const { return static_cast<int>(states.size()) - 1; }
  int total_length() const { return start_offset + steps(); }
};

struct FeasibilityReport {
  std::vector<std::uint8_t> transition_feasible;
  int feasible_count = 0;
  int infeasible_count = 0;
};

inline void check_trace_shape(const ExpertTrace& trace, int goal_state) {
  if (trace.states.size() < 2) throw MalformedTrace("expert trace needs at least two states");
  if (trace.states.front() != 0) throw MalformedTrace("expert trace must start at state 0");
  if (trace.states.back() != goal_state)
    throw MalformedTrace("expert trace must end at the goal state");
  for (std::size_t t = 0; t + 1 < trace.states.size(); ++t)
    if (trace.states[t + 1] <= trace.states[t])
      throw MalformedTrace("expert trace must be strictly increasing");
}

/// Uniform-jump expert trace [0, j, 2j, ..., K]; c = 1 exactly.
inline ExpertTrace make_uniform_expert_trace(int goal_state, int jump) {
  if (jump < 1 || goal_state < jump || goal_state % jump != 0)
    throw MalformedTrace("uniform expert trace needs jump >= 1 dividing the goal state");
  ExpertTrace trace;
  for (int s = 0; s <= goal_state; s += jump) trace.states.push_back(s);
  trace.jump_bound_c = 1.0;
  return trace;
}

/// Near-uniform trace for goals the jump does not divide: T = K / jump
/// transitions, the remainder spread one unit each over the earliest
/// jumps. Every jump stays >= the nominal one, so infeasibility for a
/// d < jump student is preserved.
inline ExpertTrace make_expert_trace(int goal_state, int jump) {
  if (jump < 1 || goal_state < jump)
    throw MalformedTrace("expert trace needs 1 <= jump <= goal state");
  const int length = goal_state / jump;
  const int remainder = goal_state - length * jump;
  ExpertTrace trace;
  trace.states.reserve(static_cast<std::size_t>(length) + 1);
  int state = 0;
  trace.states.push_back(state);
  for (int t = 0; t < length; ++t) {
    state += jump + (t < remainder ? 1 : 0);
    trace.states.push_back(state);
  }
  const double nominal = static_cast<double>(goal_state) / length;
  const double max_jump = jump + (remainder > 0 ? 1 : 0);
  trace.jump_bound_c = std::max(max_jump / nominal, nominal / jump);
  return trace;
}

inline PolicyTable build_symmetric_walker(int goal_state, int lower_bound) {
  if (lower_bound > 0 || goal_state <= 0)
    throw ConfigInvalid("build_symmetric_walker: need lower_bound <= 0 < goal_state");
  PolicyTable table(lower_bound, goal_state, 1, PolicyKind::SymmetricWalk);
  std::vector<double> p(3, 0.0);
  for (int s = lower_bound; s <= goal_state; ++s) {
    const bool can_left = s - 1 >= lower_bound;
    const bool can_right = s + 1 <= goal_state;
    table.set_usable(s, -1, can_left);
    table.set_usable(s, 0, false);  // self-loop excluded for this family
    table.set_usable(s, +1, can_right);
    if (can_left && can_right) {
      p[0] = 0.5;
      p[2] = 0.5;
    } else {
      // Reflecting boundary: the single legal move gets everything.
      p[0] = can_left ? 1.0 : 0.0;
      p[2] = can_right ? 1.0 : 0.0;
    }
    table.set_row_probabilities(s, p);
  }
  return table;
}

inline PolicyTable build_small_model(const SmallModelConfig& config) {
  const int k = config.num_states;
  const int d = config.max_jump;
  const double eps = config.weak_prob;
  if (k < 2) throw ConfigInvalid("build_small_model: num_states must be >= 2");
  if (d < 1 || d >= k) throw ConfigInvalid("build_small_model: need 1 <= max_jump < num_states");
  // Widest row has min(2d, k) non-favored offsets, each taking eps.
  const int widest = std::min(2 * d, k);
  if (!(eps > 0.0) || eps * widest >= 1.0)
    throw ConfigInvalid("build_small_model: weak_prob leaves no mass for the favored move");

  PolicyTable table(0, k, d, PolicyKind::DefA1);
  RngStream pick(derive_seed(config.seed, StreamPurpose::ModelBuild));
  std::vector<double> p(static_cast<std::size_t>(table.num_offsets()));
  std::vector<int> non_self;
  for (int s = 0; s <= k; ++s) {
    int unmasked = 0;
    non_self.clear();
    for (int o = -d; o <= d; ++o) {
      const bool ok = s + o >= 0 && s + o <= k;
      table.set_usable(s, o, ok);
      if (ok) {
        ++unmasked;
        if (o != 0) non_self.push_back(o);
      }
    }
    const int favored = non_self[pick.next_below(non_self.size())];
    for (int o = -d; o <= d; ++o)
      p[static_cast<std::size_t>(o + d)] = table.usable(s, o) ? eps : 0.0;
    p[static_cast<std::size_t>(favored + d)] = 1.0 - eps * (unmasked - 1);
    table.set_row_probabilities(s, p);
  }
  return table;
}

/// One policy step from `state`. Masked offsets carry probability 0 and
/// cannot be drawn.
inline int sample_transition(const PolicyTable& policy, int state, RngStream& rng) {
  const double u = rng.next_double();
  const auto row = policy.row(state);
  const int d = policy.max_jump();
  double acc = 0.0;
  for (int o = 0; o < policy.num_offsets(); ++o) {
    acc += row[static_cast<std::size_t>(o)];
    if (u < acc) return state + o - d;
  }
  // Round-off spill: fall back to the last unmasked offset.
  for (int o = policy.num_offsets() - 1; o >= 0; --o)
    if (policy.usable(state, o - d)) return state + o - d;
  throw OutOfRange("sample_transition: state has no unmasked offset");
}

/// Samples transitions until `target` is reached or `budget` steps are
/// spent. Reward 1 iff the target is reached within budget.
inline Trajectory sample_rollout(const PolicyTable& policy, int start, int budget,
                                 int target, RngStream& rng) {
  if (!policy.in_range(start) || !policy.in_range(target))
    throw OutOfRange("sample_rollout: start/target outside the state range");
  if (budget < 0) throw ConfigInvalid("sample_rollout: budget must be >= 0");
  Trajectory out;
  out.states.reserve(static_cast<std::size_t>(std::min(budget, 1 << 20)) + 1);
  out.states.push_back(start);
  int s = start;
  for (int step = 0; step < budget && s != target; ++step) {
    s = sample_transition(policy, s, rng);
    out.states.push_back(s);
  }
  out.reward = (s == target) ? 1 : 0;
  out.truncated = (s != target);
  return out;
}

/// Exact probability that a rollout from `start` reaches `target` within
/// `budget` steps: backward dynamic programming over state x remaining
/// steps with the target absorbing. The noise-free ground truth for every
/// Monte-Carlo success rate in this library.
inline double hitting_probability_dp(const PolicyTable& policy, int start,
                                     int target, int budget) {
  if (!policy.in_range(start) || !policy.in_range(target))
    throw OutOfRange("hitting_probability_dp: start/target outside the state range");
  if (budget < 0) throw ConfigInvalid("hitting_probability_dp: budget must be >= 0");
  const int n = policy.num_states();
  const int lower = policy.lower_bound();
  const int d = policy.max_jump();
  std::vector<double> value(static_cast<std::size_t>(n), 0.0);
  std::vector<double> next(static_cast<std::size_t>(n), 0.0);
  value[static_cast<std::size_t>(target - lower)] = 1.0;
  for (int b = 1; b <= budget; ++b) {
    for (int s = lower; s <= policy.goal_state(); ++s) {
      if (s == target) {
        next[static_cast<std::size_t>(s - lower)] = 1.0;
        continue;
      }
      const auto row = policy.row(s);
      double acc = 0.0;
      for (int o = 0; o < policy.num_offsets(); ++o) {
        const double p = row[static_cast<std::size_t>(o)];
        if (p > 0.0) acc += p * value[static_cast<std::size_t>(s + o - d - lower)];
      }
      next[static_cast<std::size_t>(s - lower)] = acc;
    }
    std::swap(value, next);
  }
  return value[static_cast<std::size_t>(start - lower)];
}

/// Per-transition feasibility of an expert trace for a student policy:
/// a transition is learnable iff its jump is within the student's reach.
inline FeasibilityReport validate_expert_trace(const ExpertTrace& trace,
                                               const PolicyTable& student) {
  check_trace_shape(trace, student.goal_state());
  FeasibilityReport report;
  report.transition_feasible.reserve(trace.states.size() - 1);
  for (std::size_t t = 0; t + 1 < trace.states.size(); ++t) {
    const int jump = trace.states[t + 1] - trace.states[t];
    const bool ok = jump <= student.max_jump() &&
                    student.usable(trace.states[t], jump);
    report.transition_feasible.push_back(ok ? 1 : 0);
    if (ok)
      ++report.feasible_count;
    else
      ++report.infeasible_count;
  }
  return report;
}

/// Replays an expert trace as a trajectory; reward 1 iff it fits the
/// episode budget. Feasibility for the student does not matter here, the
/// trace is the expert's own successful path.
inline Trajectory trace_as_trajectory(const ExpertTrace& trace, int budget) {
  Trajectory out;
  out.states = trace.states;
  out.start_offset = 0;
  out.reward = trace.length() <= budget ? 1 : 0;
  out.truncated = out.reward == 0;
  return out;
}

}  // namespace breadsim
