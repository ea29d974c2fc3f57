#include <doctest.h>

#include <algorithm>
#include <breadsim/chain.hpp>
#include <breadsim/rng.hpp>
#include <cmath>
#include <vector>

#include "test_helpers.hpp"

using namespace breadsim;

namespace {

double row_sum(const PolicyTable& table, int state) {
  double total = 0.0;
  for (double p : table.row(state)) total += p;
  return total;
}

void check_row_invariants(const PolicyTable& table) {
  for (int s = table.lower_bound(); s <= table.goal_state(); ++s) {
    CHECK(row_sum(table, s) == doctest::Approx(1.0).epsilon(1e-12));
    const auto row = table.row(s);
    const auto mask = table.row_mask(s);
    for (std::size_t o = 0; o < row.size(); ++o) {
      if (!mask[o]) CHECK(row[o] == 0.0);
    }
  }
}

}  // namespace

TEST_CASE("small model rows are normalized with one favored offset") {
  SmallModelConfig config;
  config.num_states = 30;
  config.max_jump = 2;
  config.weak_prob = 0.05;
  config.seed = 7;
  const PolicyTable table = build_small_model(config);

  CHECK(table.num_states() == 31);
  check_row_invariants(table);
  for (int s = 0; s <= 30; ++s) {
    int favored = 0;
    for (int o = -2; o <= 2; ++o)
      if (table.prob(s, o) >= 1.0 - 4 * 0.05) ++favored;
    CHECK(favored == 1);
  }
}

TEST_CASE("small model build is deterministic and seed changes only the favored offsets") {
  SmallModelConfig config;
  config.num_states = 5;
  config.max_jump = 2;
  config.weak_prob = 0.1;
  config.seed = 1;
  const PolicyTable a = build_small_model(config);
  const PolicyTable a_again = build_small_model(config);
  CHECK(a.identical_bits(a_again));

  config.seed = 2;
  const PolicyTable b = build_small_model(config);
  CHECK(a.same_shape(b));
  for (int s = 0; s <= 5; ++s) {
    CHECK(row_sum(a, s) == doctest::Approx(row_sum(b, s)).epsilon(1e-15));
    std::vector<double> pa, pb;
    for (int o = -2; o <= 2; ++o) {
      pa.push_back(a.prob(s, o));
      pb.push_back(b.prob(s, o));
    }
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    for (std::size_t i = 0; i < pa.size(); ++i)
      CHECK(pa[i] == doctest::Approx(pb[i]).epsilon(1e-12));
  }
}

TEST_CASE("small model handles a vanishing weak probability") {
  SmallModelConfig config;
  config.num_states = 2;
  config.max_jump = 1;
  config.weak_prob = 1e-9;
  const PolicyTable table = build_small_model(config);
  check_row_invariants(table);
  for (int s = 0; s <= 2; ++s) {
    double best = 0.0;
    for (int o = -1; o <= 1; ++o) best = std::max(best, table.prob(s, o));
    CHECK(best > 1.0 - 3e-9);
  }
}

TEST_CASE("small model rejects bad configurations") {
  SmallModelConfig config;
  config.num_states = 10;
  config.max_jump = 2;
  config.weak_prob = 0.25;  // 0.25 * 4 = 1, no favored mass left
  CHECK_THROWS_AS(build_small_model(config), ConfigInvalid);
  config.weak_prob = 0.05;
  config.max_jump = 10;  // d >= K
  CHECK_THROWS_AS(build_small_model(config), ConfigInvalid);
  config.max_jump = 1;
  config.num_states = 1;
  CHECK_THROWS_AS(build_small_model(config), ConfigInvalid);
}

TEST_CASE("small model accepts narrow chains where no row sees 2d neighbors") {
  // With K=3 and d=2 the widest row has 3 non-favored offsets, so
  // eps = 0.3 still leaves favored mass even though 2*d*eps > 1.
  SmallModelConfig config;
  config.num_states = 3;
  config.max_jump = 2;
  config.weak_prob = 0.3;
  const PolicyTable table = build_small_model(config);
  check_row_invariants(table);
}

TEST_CASE("symmetric walker rows") {
  const PolicyTable walker = build_symmetric_walker(10, -10);
  check_row_invariants(walker);
  for (int s = -9; s <= 9; ++s) {
    CHECK(walker.prob(s, -1) == doctest::Approx(0.5));
    CHECK(walker.prob(s, +1) == doctest::Approx(0.5));
    CHECK(walker.prob(s, 0) == 0.0);
  }

  const PolicyTable reflecting = build_symmetric_walker(10, 0);
  CHECK(reflecting.prob(0, +1) == doctest::Approx(1.0));
  CHECK(row_sum(reflecting, 0) == doctest::Approx(1.0).epsilon(1e-12));

  const PolicyTable tiny = build_symmetric_walker(2, -2);
  CHECK(tiny.num_states() == 5);
}

TEST_CASE("forced rollout follows the only path") {
  const PolicyTable mover = breadsim::testing::make_right_mover(3, -3);
  RngStream rng(derive_seed(123, StreamPurpose::Rollout, 0, 0));
  const Trajectory t = sample_rollout(mover, 0, 3, 3, rng);
  CHECK(t.states == std::vector<int>{0, 1, 2, 3});
  CHECK(t.reward == 1);
  CHECK_FALSE(t.truncated);

  RngStream rng2(derive_seed(123, StreamPurpose::Rollout, 0, 1));
  const Trajectory cut = sample_rollout(mover, 0, 2, 3, rng2);
  CHECK(cut.reward == 0);
  CHECK(cut.truncated);

  RngStream rng3(derive_seed(123, StreamPurpose::Rollout, 0, 2));
  const Trajectory stay = sample_rollout(mover, 3, 0, 3, rng3);
  CHECK(stay.reward == 1);
  CHECK(stay.steps() == 0);
}

TEST_CASE("rollouts are deterministic per stream") {
  const PolicyTable walker = build_symmetric_walker(6, -6);
  RngStream a(derive_seed(9, StreamPurpose::Rollout, 4, 2));
  RngStream b(derive_seed(9, StreamPurpose::Rollout, 4, 2));
  const Trajectory ta = sample_rollout(walker, 0, 12, 6, a);
  const Trajectory tb = sample_rollout(walker, 0, 12, 6, b);
  CHECK(ta.states == tb.states);
}

TEST_CASE("dp oracle basics") {
  const PolicyTable walker = build_symmetric_walker(2, -2);
  CHECK(hitting_probability_dp(walker, 0, 0, 0) == 1.0);
  CHECK(hitting_probability_dp(walker, 0, 0, 17) == 1.0);
  // Four equally likely two-step paths, one of which hits +2.
  CHECK(hitting_probability_dp(walker, 0, 2, 2) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(hitting_probability_dp(walker, 0, 2, 1) == 0.0);
}

TEST_CASE("dp oracle is monotone in budget") {
  SmallModelConfig config;
  config.num_states = 8;
  config.max_jump = 2;
  config.weak_prob = 0.05;
  config.seed = 3;
  const PolicyTable table = build_small_model(config);
  double last = 0.0;
  for (int budget = 0; budget <= 40; ++budget) {
    const double p = hitting_probability_dp(table, 0, 8, budget);
    CHECK(p >= last);
    last = p;
  }
}

TEST_CASE("dp oracle matches the hitting-time tail bounds") {
  // Lower bound uses an unbounded walk; -budget is unreachable within the
  // budget, so the reflecting boundary cannot distort it.
  {
    const PolicyTable walker = build_symmetric_walker(30, -60);
    const double p = hitting_probability_dp(walker, 0, 30, 60);
    CHECK(p <= 2.0 * std::exp(-900.0 / 120.0));  // ~1.106e-3
    CHECK(p > 0.0);
  }
  {
    const PolicyTable walker = build_symmetric_walker(3, -15);
    const double p = hitting_probability_dp(walker, 0, 3, 15);
    CHECK(p >= 1.0 - 0.8 * 3.0 / std::sqrt(15.0));  // ~0.3803
  }
}

TEST_CASE("monte carlo agrees with the dp oracle") {
  const PolicyTable walker = build_symmetric_walker(2, -2);
  const int n = 100000;
  long wins = 0;
  for (int i = 0; i < n; ++i) {
    RngStream rng(derive_seed(77, StreamPurpose::Eval, 0, static_cast<std::uint64_t>(i)));
    wins += sample_rollout(walker, 0, 2, 2, rng).reward;
  }
  const double p = 0.25;
  const double rate = static_cast<double>(wins) / n;
  const double sigma = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(rate - p) <= 4 * sigma);
}

TEST_CASE("expert trace feasibility") {
  const PolicyTable walker = build_symmetric_walker(6, -6);

  const ExpertTrace stride2{{0, 2, 4, 6}, 1.0};
  const FeasibilityReport r2 = validate_expert_trace(stride2, walker);
  CHECK(r2.feasible_count == 0);
  CHECK(r2.infeasible_count == 3);

  const ExpertTrace unit{{0, 1, 2, 3, 4, 5, 6}, 1.0};
  const FeasibilityReport r1 = validate_expert_trace(unit, walker);
  CHECK(r1.feasible_count == 6);
  CHECK(r1.infeasible_count == 0);

  const PolicyTable small_walker = build_symmetric_walker(3, -3);
  const ExpertTrace mixed{{0, 1, 3}, {}};
  const FeasibilityReport rm = validate_expert_trace(mixed, small_walker);
  CHECK(rm.feasible_count == 1);
  CHECK(rm.infeasible_count == 1);
  CHECK(rm.transition_feasible == std::vector<std::uint8_t>{1, 0});
}

TEST_CASE("malformed traces are rejected") {
  const PolicyTable walker = build_symmetric_walker(4, -4);
  CHECK_THROWS_AS(validate_expert_trace(ExpertTrace{{0, 2, 1, 4}, {}}, walker),
                  MalformedTrace);
  CHECK_THROWS_AS(validate_expert_trace(ExpertTrace{{1, 2, 4}, {}}, walker),
                  MalformedTrace);
  CHECK_THROWS_AS(validate_expert_trace(ExpertTrace{{0, 2, 3}, {}}, walker),
                  MalformedTrace);
  CHECK_THROWS_AS(validate_expert_trace(ExpertTrace{{0}, {}}, walker), MalformedTrace);
}

TEST_CASE("uniform expert trace builder") {
  const ExpertTrace trace = make_uniform_expert_trace(30, 3);
  CHECK(trace.length() == 10);
  CHECK(trace.states.front() == 0);
  CHECK(trace.states.back() == 30);
  for (std::size_t t = 0; t + 1 < trace.states.size(); ++t)
    CHECK(trace.states[t + 1] - trace.states[t] == 3);
  CHECK_THROWS_AS(make_uniform_expert_trace(10, 3), MalformedTrace);
}

TEST_CASE("near-uniform trace spreads the remainder without shrinking jumps") {
  const ExpertTrace trace = make_expert_trace(50, 3);
  CHECK(trace.length() == 16);
  CHECK(trace.states.back() == 50);
  int bumped = 0;
  for (std::size_t t = 0; t + 1 < trace.states.size(); ++t) {
    const int jump = trace.states[t + 1] - trace.states[t];
    CHECK(jump >= 3);
    CHECK(jump <= 4);
    if (jump == 4) ++bumped;
  }
  CHECK(bumped == 2);

  // Divisible goals reduce to the uniform trace.
  CHECK(make_expert_trace(30, 3).states == make_uniform_expert_trace(30, 3).states);
}

TEST_CASE("trace replay carries reward iff it fits the budget") {
  const ExpertTrace trace = make_uniform_expert_trace(12, 3);
  CHECK(trace_as_trajectory(trace, 4).reward == 1);
  CHECK(trace_as_trajectory(trace, 3).reward == 0);
}

TEST_CASE("row invariants survive logit updates") {
  PolicyTable table = build_symmetric_walker(5, -5);
  RngStream rng(42);
  std::vector<double> step(table.table_size());
  for (int round = 0; round < 50; ++round) {
    for (auto& g : step) g = rng.next_double() - 0.5;
    table.apply_logit_step(step, 0.3);
    check_row_invariants(table);
  }
}
