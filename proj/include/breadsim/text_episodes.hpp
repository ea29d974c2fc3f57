#pragma once

/**
 * Lossless text-trace episode construction.
 *
 * A trace is split greedily left to right on any separator occurrence;
 * each separator attaches to the span it terminates, so concatenating the
 * spans reproduces the input byte-exactly. Steps are then aggregated into
 * at most K contiguous episodes whose step counts differ by at most one
 * (larger episodes first). Text is treated as opaque bytes; separators
 * match bytewise.
 */

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "breadsim/errors.hpp"

namespace breadsim {

/// Greedy split of `text` on any of `separators`. When several separators
/// match at the same position the longest wins. Spans are never empty: a
/// trailing remainder is kept only if it has content.
inline std::vector<std::string> split_steps(std::string_view text,
                                            const std::vector<std::string>& separators) {
  if (separators.empty()) throw ConfigInvalid("split_steps: need at least one separator");
  for (const auto& s : separators)
    if (s.empty()) throw ConfigInvalid("split_steps: separators must be non-empty");

  std::vector<std::string> steps;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t matched = 0;
    for (const auto& sep : separators) {
      if (sep.size() > matched && text.compare(i, sep.size(), sep) == 0)
        matched = sep.size();
    }
    if (matched > 0) {
      steps.emplace_back(text.substr(start, i + matched - start));
      start = i + matched;
      i = start;
    } else {
      ++i;
    }
  }
  if (start < text.size()) steps.emplace_back(text.substr(start));
  return steps;
}

struct EpisodeSplit {
  std::vector<std::string> raw_steps;
  // Episode i covers steps [episode_begin[i], episode_begin[i+1]).
  std::vector<std::size_t> episode_begin;
  int k_target = 0;

  int episode_count() const {
    return static_cast<int>(episode_begin.size()) - 1;
  }
  std::string episode_text(int index) const {
    std::string out;
    for (std::size_t s = episode_begin[static_cast<std::size_t>(index)];
         s < episode_begin[static_cast<std::size_t>(index) + 1]; ++s)
      out += raw_steps[s];
    return out;
  }
};

/// Partitions n steps into min(k_target, n) contiguous episodes of sizes
/// ceil(n/k) or floor(n/k), the larger ones first.
inline EpisodeSplit aggregate_episodes(std::vector<std::string> steps, int k_target) {
  if (k_target < 1) throw ConfigInvalid("aggregate_episodes: k_target must be >= 1");
  if (steps.empty()) throw EmptyInput("aggregate_episodes: no steps to aggregate");

  EpisodeSplit split;
  split.k_target = k_target;
  split.raw_steps = std::move(steps);
  const std::size_t n = split.raw_steps.size();
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_target), n);
  const std::size_t base = n / k;
  const std::size_t remainder = n % k;
  split.episode_begin.reserve(k + 1);
  std::size_t at = 0;
  split.episode_begin.push_back(at);
  for (std::size_t e = 0; e < k; ++e) {
    at += base + (e < remainder ? 1 : 0);
    split.episode_begin.push_back(at);
  }
  return split;
}

/// Byte-exact concatenation of the first `m` episodes; m = 0 yields "".
inline std::string prefix_hint(const EpisodeSplit& split, int m) {
  if (m < 0 || m > split.episode_count())
    throw OutOfRange("prefix_hint: prefix length outside [0, episode count]");
  std::string out;
  for (int e = 0; e < m; ++e) out += split.episode_text(e);
  return out;
}

}  // namespace breadsim
