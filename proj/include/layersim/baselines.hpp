// SPDX-License-Identifier: Apache-2.0

#ifndef LAYERSIM_BASELINES_HPP_
#define LAYERSIM_BASELINES_HPP_

#include <vector>

#include "layersim/env.hpp"
#include "layersim/errors.hpp"
#include "layersim/rng.hpp"

namespace layersim {

// Fetch EL only while the BL buffer sits above a safe level.
struct ThresholdPolicy {
  double bl_safe_threshold_s = 10.0;

  void validate() const {
    if (!(bl_safe_threshold_s > 0)) throw ValidationError("threshold policy: threshold must be > 0");
  }
};

// EL iff the BL buffer is at or above the threshold and an undownloaded EL
// under the BL frontier exists; once the BL track is complete, keep
// fetching remaining ELs. Everything else fetches BL.
inline int threshold_action(const ThresholdPolicy& p, const EnvState& s) {
  const bool bl_done = s.num_segments > 0 && s.i[0] == s.num_segments - 1;
  const bool el_remaining = s.i[1] < s.i[0];
  if (bl_done) return el_remaining ? kActionEl : kActionBl;
  if (s.q[0] >= p.bl_safe_threshold_s && el_remaining) return kActionEl;
  return kActionBl;
}

// Lower-bound reference: never fetches EL.
inline int bl_only_action(const EnvState&) { return kActionBl; }

inline int random_action(Rng& rng) { return rng.chance(0.5) ? kActionEl : kActionBl; }

// Plays one full episode under a policy functor int(const EnvState&).
template <typename PolicyFn>
std::vector<EpisodeRow> run_episode(StreamEnv& env, uint64_t seed, PolicyFn&& act) {
  env.reset(seed);
  std::vector<EpisodeRow> rows;
  int step = 0;
  while (!env.done()) {
    const int a = act(env.state());
    const StepOutcome o = env.step(a);
    rows.push_back(episode_row(step++, a, o));
  }
  return rows;
}

}  // namespace layersim

#endif  // LAYERSIM_BASELINES_HPP_
