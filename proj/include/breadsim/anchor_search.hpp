#pragma once

/**
 * Episode Anchor Search: binary search over expert-prefix lengths against
 * a pluggable success-rate oracle.
 *
 * The search first probes prefix length 0 (a regular rollout group). A
 * positive rate there means no hint is needed. Otherwise it binary
 * searches [0, num_episodes] for a prefix whose rate falls strictly
 * inside the acceptance band: saturated-low rates raise the lower bound,
 * saturated-high rates lower the upper bound. When the interval collapses
 * without a mixed group, the shortest probed prefix that rescues the
 * policy is returned; if even the full hint fails, the caller is told to
 * skip the question. Probe results are memoized, so the probe count never
 * exceeds ceil(log2(num_episodes)) + 2.
 */

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "breadsim/errors.hpp"

namespace breadsim {

enum class AnchorStatus {
  NoHintNeeded,
  AnchorFound,
  FullHintFails,
  ExhaustedAtBoundary,
};

struct AnchorOptions {
  double band_lo = 0.0;  // rate must exceed this to count as mixed
  double band_hi = 1.0;  // ... and stay below this
  // Hint search triggers when the no-hint rate is <= this. 0 reproduces
  // the "only when every rollout fails" rule.
  double trigger_threshold = 0.0;
};

struct AnchorResult {
  int prefix_len = 0;
  double success_rate = 0.0;
  std::vector<std::pair<int, double>> probes;
  AnchorStatus status = AnchorStatus::NoHintNeeded;
};

/// `oracle` maps a prefix length to an observed success rate in [0, 1]
/// and must be deterministic for a fixed probe within one search.
template <typename Oracle>
AnchorResult episode_anchor_search(Oracle&& oracle, int num_episodes,
                                   const AnchorOptions& options = {}) {
  if (num_episodes < 1)
    throw ConfigInvalid("episode_anchor_search: num_episodes must be >= 1");
  if (!(options.band_lo < options.band_hi))
    throw ConfigInvalid("episode_anchor_search: acceptance band is empty");

  AnchorResult result;
  std::vector<std::optional<double>> memo(static_cast<std::size_t>(num_episodes) + 1);
  auto probe = [&](int m) {
    auto& slot = memo[static_cast<std::size_t>(m)];
    if (!slot) {
      slot = oracle(m);
      result.probes.emplace_back(m, *slot);
    }
    return *slot;
  };

  const double p0 = probe(0);
  if (p0 > options.trigger_threshold) {
    result.prefix_len = 0;
    result.success_rate = p0;
    result.status = AnchorStatus::NoHintNeeded;
    return result;
  }

  int lo = 0;
  int hi = num_episodes;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    const double p = probe(mid);
    if (p > options.band_lo && p < options.band_hi) {
      result.prefix_len = mid;
      result.success_rate = p;
      result.status = AnchorStatus::AnchorFound;
      return result;
    }
    if (p <= options.band_lo)
      lo = mid;
    else
      hi = mid;
  }

  const double p_hi = probe(hi);
  if (p_hi > options.band_lo) {
    result.prefix_len = hi;
    result.success_rate = p_hi;
    result.status = AnchorStatus::ExhaustedAtBoundary;
    return result;
  }
  result.prefix_len = num_episodes;
  result.success_rate = p_hi;
  result.status = AnchorStatus::FullHintFails;
  return result;
}

}  // namespace breadsim
