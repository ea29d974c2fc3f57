#pragma once

/**
 * Training-cost model: forward pass 2ND, backward pass 4ND, so one
 * supervised step is 6ND. Group methods multiply by the rollout count;
 * injecting an expert trace costs one extra backward pass. The anchored
 * variant charges its recorded extra search generations with a 4ND
 * coefficient even though pure generation is a 2ND forward pass; that is
 * the convention this model follows, so treat the anchored figure as an
 * upper estimate.
 */

#include "breadsim/errors.hpp"

namespace breadsim {

enum class FlopsMethod { Sft, Grpo, Bread, GrpoEt };

struct FlopsQuery {
  FlopsMethod method = FlopsMethod::Sft;
  double params_n = 0.0;       // model parameter count N
  double d_sample = 0.0;       // tokens per sample pass
  int n_rollout = 0;           // rollouts per step (group methods)
  double d_additional = 0.0;   // recorded extra generation tokens (anchored only)
  int steps = 1;

  void validate() const {
    if (params_n < 0 || d_sample < 0 || n_rollout < 0 || d_additional < 0 || steps < 0)
      throw InvalidQuery("estimate_flops: all query fields must be nonnegative");
  }
};

inline double estimate_flops(const FlopsQuery& query) {
  query.validate();
  const double nd = query.params_n * query.d_sample;
  double per_step = 0.0;
  switch (query.method) {
    case FlopsMethod::Sft:
      per_step = 6.0 * nd;
      break;
    case FlopsMethod::Grpo:
      per_step = 6.0 * query.n_rollout * nd;
      break;
    case FlopsMethod::Bread:
      per_step = 6.0 * query.n_rollout * nd + 4.0 * query.params_n * query.d_additional;
      break;
    case FlopsMethod::GrpoEt:
      per_step = 6.0 * query.n_rollout * nd + 4.0 * nd;
      break;
  }
  return per_step * query.steps;
}

}  // namespace breadsim
