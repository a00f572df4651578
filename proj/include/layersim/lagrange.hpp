// SPDX-License-Identifier: Apache-2.0

#ifndef LAYERSIM_LAGRANGE_HPP_
#define LAYERSIM_LAGRANGE_HPP_

#include <algorithm>
#include <cmath>

#include "layersim/errors.hpp"

namespace layersim {

// Reward weights with dual-ascent adaptation: a cost weight rises while the
// measured episode-average cost sits above its target and decays toward 0
// while below. lambda_q stays fixed; only eta and mu adapt.
struct RewardWeights {
  double lambda_q = 1.0;  // quality weight
  double eta = 1.0;       // rebuffering weight, adapted toward target h0
  double mu = 1.0;        // smoothness weight, adapted toward target h1
  double h0 = 0.0;        // target stall seconds per step
  double h1 = 1.0;        // target smoothness cost per step
  double omega0 = 0.01;   // eta update rate
  double omega1 = 0.01;   // mu update rate
  double weight_cap = 50.0;  // bounds the reward scale; 0 disables the cap

  void validate() const {
    if (!(lambda_q > 0)) throw ValidationError("weights: lambda_q must be > 0");
    if (eta < 0 || mu < 0) throw ValidationError("weights: eta and mu must be >= 0");
    if (!(omega0 > 0) || !(omega1 > 0)) throw ValidationError("weights: omega0, omega1 must be > 0");
    if (h0 < 0 || h1 < 0) throw ValidationError("weights: targets must be >= 0");
    if (weight_cap < 0) throw ValidationError("weights: weight_cap must be >= 0");
  }
};

// Per-step scalar the agent maximizes.
inline double combined_reward(const RewardWeights& w, double r_q, double c_buf, double c_smooth) {
  return w.lambda_q * r_q - w.eta * c_buf - w.mu * c_smooth;
}

// Dual-ascent step on episode-average costs. Clamped to [0, weight_cap].
inline RewardWeights update_weights(const RewardWeights& w, double avg_c_buf, double avg_c_smooth) {
  if (avg_c_buf < 0 || avg_c_smooth < 0) {
    throw ValidationError("update_weights: cost averages must be >= 0");
  }
  RewardWeights out = w;
  out.eta = std::max(w.eta + w.omega0 * (avg_c_buf - w.h0), 0.0);
  out.mu = std::max(w.mu + w.omega1 * (avg_c_smooth - w.h1), 0.0);
  if (w.weight_cap > 0) {
    out.eta = std::min(out.eta, w.weight_cap);
    out.mu = std::min(out.mu, w.weight_cap);
  }
  return out;
}

}  // namespace layersim

#endif  // LAYERSIM_LAGRANGE_HPP_
