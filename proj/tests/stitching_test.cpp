#include <doctest.h>

#include <breadsim/chain.hpp>
#include <breadsim/stitching.hpp>
#include <cmath>
#include <vector>

#include "test_helpers.hpp"

using namespace breadsim;

TEST_CASE("forced paths stitch exactly as expected") {
  const PolicyTable mover = breadsim::testing::make_right_mover(4, -4);
  ExpertTrace trace;
  trace.states = {0, 2, 4};

  const StitchResult result = stitching_bread(mover, trace, 10, 1, 0);
  REQUIRE(result.success());
  CHECK(result.path() == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(result.rollouts_used_per_round == std::vector<int>{1, 1});
  CHECK(stitch_path_valid(result, 4, 10));
}

TEST_CASE("hopeless budgets fail fast") {
  // A 0 -> 10 path needs at least 10 unit steps; a budget of 5 cannot
  // ever be met.
  const PolicyTable mover = breadsim::testing::make_right_mover(10, -10);
  ExpertTrace trace;
  trace.states = {0, 5, 10};
  const StitchResult result = stitching_bread(mover, trace, 5, 4, 0);
  CHECK_FALSE(result.success());
  CHECK(result.failed_round >= 1);
}

TEST_CASE("stitched paths always satisfy the validity invariant") {
  const PolicyTable walker = build_symmetric_walker(12, -12);
  const ExpertTrace trace = make_uniform_expert_trace(12, 3);
  const int budget = 5 * 12 * 12 / 4;  // 5K^2/T
  int successes = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const StitchResult result = stitching_bread(walker, trace, budget, 8, seed);
    if (!result.success()) continue;
    ++successes;
    CHECK(stitch_path_valid(result, 12, budget));
    CHECK(result.memory.round == trace.length());
  }
  CHECK(successes > 150);
}

TEST_CASE("per-round failures report the failing round") {
  // Rollouts per round = 1 with a tight budget fails somewhere midway
  // reasonably often; the report must carry a 1-based round index.
  const PolicyTable walker = build_symmetric_walker(8, -8);
  const ExpertTrace trace = make_uniform_expert_trace(8, 2);
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const StitchResult result = stitching_bread(walker, trace, 20, 1, seed);
    if (result.success()) continue;
    ++failures;
    CHECK(result.failed_round >= 1);
    CHECK(result.failed_round <= trace.length());
    CHECK(static_cast<int>(result.rollouts_used_per_round.size()) ==
          result.failed_round);
  }
  CHECK(failures > 0);
}

TEST_CASE("stitching matches the memorization success bound") {
  // K = 20, T = 10, c = 1, L = 5K^2/T = 200, t = 8 rollouts per round:
  // success probability at least 1 - T e^{-t}, checked with a 3-sigma
  // binomial tolerance over 400 trials.
  const PolicyTable walker = build_symmetric_walker(20, -20);
  const ExpertTrace trace = make_uniform_expert_trace(20, 2);
  const int budget = 5 * 20 * 20 / 10;
  const int trials = 400;
  int wins = 0;
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    const StitchResult result = stitching_bread(walker, trace, budget, 8, seed);
    if (result.success()) {
      CHECK(stitch_path_valid(result, 20, budget));
      ++wins;
    }
  }
  const double bound = 1.0 - 10.0 * std::exp(-8.0);
  const double sigma = std::sqrt(bound * (1.0 - bound) / trials);
  CHECK(static_cast<double>(wins) / trials >= bound - 3.0 * sigma);
}

TEST_CASE("stitching rejects students it is not defined for") {
  SmallModelConfig config;
  config.num_states = 8;
  config.max_jump = 2;
  config.weak_prob = 0.05;
  const PolicyTable wide = build_small_model(config);
  ExpertTrace trace;
  trace.states = {0, 4, 8};
  CHECK_THROWS_AS(stitching_bread(wide, trace, 100, 4, 0), ConfigInvalid);

  const PolicyTable walker = build_symmetric_walker(8, -8);
  CHECK_THROWS_AS(stitching_bread(walker, trace, 100, 0, 0), ConfigInvalid);
  ExpertTrace bad;
  bad.states = {0, 8, 4};
  CHECK_THROWS_AS(stitching_bread(walker, bad, 100, 4, 0), MalformedTrace);
}
