// SPDX-License-Identifier: Apache-2.0

#ifndef LAYERSIM_CHANNEL_HPP_
#define LAYERSIM_CHANNEL_HPP_

#include <cmath>
#include <cstdint>

#include "layersim/errors.hpp"
#include "layersim/rng.hpp"
#include "layersim/trace.hpp"

namespace layersim {

// Analytic mm-Wave link budget: log-distance path loss with Gaussian
// (in dB) shadowing, noise-limited SINR, Shannon rate over one band.
struct ChannelParams {
  double beta1_db = 61.4;           // path-loss intercept
  double beta2 = 2.0;               // path-loss distance exponent
  double shadow_sigma_db = 4.0;     // shadowing std dev
  double tx_power_w = 1.0;          // transmit power
  double rb_bandwidth_hz = 1e8;     // allocated bandwidth
  double noise_psd_w_per_hz = 1e-20;

  void validate() const {
    if (!std::isfinite(beta1_db)) throw ValidationError("channel: beta1_db must be finite");
    if (!(beta2 > 0)) throw ValidationError("channel: beta2 must be > 0");
    if (shadow_sigma_db < 0) throw ValidationError("channel: shadow_sigma_db must be >= 0");
    if (!(tx_power_w > 0)) throw ValidationError("channel: tx_power_w must be > 0");
    if (!(rb_bandwidth_hz > 0)) throw ValidationError("channel: rb_bandwidth_hz must be > 0");
    if (!(noise_psd_w_per_hz > 0)) throw ValidationError("channel: noise_psd_w_per_hz must be > 0");
  }
};

struct LinkGeometry {
  double distance_m = 100.0;  // 3-D BS to viewer distance

  void validate() const {
    if (!(distance_m >= 1)) throw ValidationError("link geometry: distance_m must be >= 1");
  }
};

// loss = beta1 + 10*beta2*log10(distance) + shadow realization.
inline double path_loss_db(const LinkGeometry& g, const ChannelParams& p, double shadow_db) {
  g.validate();
  return p.beta1_db + 10.0 * p.beta2 * std::log10(g.distance_m) + shadow_db;
}

// Noise-limited: received power over thermal noise in the allocated band.
inline double sinr(const ChannelParams& p, double loss_db) {
  if (!std::isfinite(loss_db)) throw ValidationError("sinr: loss_db must be finite");
  const double rx_w = p.tx_power_w * std::pow(10.0, -loss_db / 10.0);
  return rx_w / (p.rb_bandwidth_hz * p.noise_psd_w_per_hz);
}

inline double link_rate_bps(const ChannelParams& p, double zeta) {
  if (!(zeta >= 0)) throw ValidationError("link_rate_bps: zeta must be >= 0");
  return p.rb_bandwidth_hz * std::log2(1.0 + zeta);
}

// Per-second throughput trace from the analytic link, one independent
// shadowing draw per sample. shadow_sigma_db = 0 gives a constant trace.
inline ThroughputTrace analytic_trace(const LinkGeometry& g, const ChannelParams& p, double duration_s,
                                      uint64_t seed) {
  g.validate();
  p.validate();
  if (!(duration_s >= 1)) throw ValidationError("analytic_trace: duration_s must be >= 1");
  Rng rng(seed);
  ThroughputTrace tr;
  tr.bs_id = "analytic";
  const int n = static_cast<int>(std::ceil(duration_s));
  for (int t = 0; t < n; ++t) {
    const double xi = rng.gaussian(0.0, p.shadow_sigma_db);
    const double rate = link_rate_bps(p, sinr(p, path_loss_db(g, p, xi)));
    tr.samples.push_back({static_cast<double>(t), rate / 1000.0});
  }
  tr.validate();
  return tr;
}

}  // namespace layersim

#endif  // LAYERSIM_CHANNEL_HPP_
