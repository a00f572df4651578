// SPDX-License-Identifier: Apache-2.0

#ifndef LAYERSIM_CONFIG_HPP_
#define LAYERSIM_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layersim/channel.hpp"
#include "layersim/env.hpp"
#include "layersim/errors.hpp"
#include "layersim/lagrange.hpp"
#include "layersim/ppo.hpp"

namespace layersim {

// Synthetic throughput source driven by the analytic link model instead of
// trace files: `count` trace pairs, one independent shadowing stream each.
struct AnalyticSpec {
  ChannelParams params;
  double mbs_distance_m = 100.0;
  double uav_distance_m = 30.0;
  double duration_s = 200.0;
  int count = 4;

  void validate() const {
    params.validate();
    LinkGeometry{mbs_distance_m}.validate();
    LinkGeometry{uav_distance_m}.validate();
    if (!(duration_s >= 1)) throw ValidationError("analytic: duration_s must be >= 1");
    if (count < 1) throw ValidationError("analytic: count must be >= 1");
  }
};

struct RunConfig {
  std::vector<std::string> manifest_paths;
  std::string traces_dir;       // empirical mode
  bool analytic_mode = false;   // exactly one of traces_dir / analytic is active
  AnalyticSpec analytic;
  EnvConfig env;
  TrainConfig train;
  RewardWeights weights;
  std::string out_dir = "out";
  std::string run_id = "run";
  uint64_t seed = 1;
  int workers = 1;
  double threshold_baseline_s = 10.0;

  void validate(bool need_manifests) const {
    env.validate();
    train.validate();
    weights.validate();
    if (analytic_mode == !traces_dir.empty()) {
      throw ConfigError("config: exactly one throughput mode must be set (traces_dir or analytic)");
    }
    if (analytic_mode) analytic.validate();
    if (need_manifests && manifest_paths.empty()) {
      throw ConfigError("config: at least one manifest path is required");
    }
    if (workers < 1) throw ConfigError("config: workers must be >= 1");
    if (!(threshold_baseline_s > 0)) throw ConfigError("config: threshold_baseline_s must be > 0");
    if (out_dir.empty() || run_id.empty()) throw ConfigError("config: out_dir and run_id must be non-empty");
  }
};

namespace detail {

template <typename T>
T jget(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const nlohmann::json& j, const char* section,
                           std::initializer_list<const char*> known) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(std::string("config: unknown key '") + key + "' in " + section);
  }
}

}  // namespace detail

// Parses a config object over built-in defaults: absent keys keep their
// defaults, unknown keys are rejected.
inline RunConfig parse_run_config(const nlohmann::json& j) {
  using detail::jget;
  RunConfig c;
  detail::reject_unknown(j, "top level",
                         {"manifests", "traces_dir", "analytic", "env", "train", "weights", "out_dir",
                          "run_id", "seed", "workers", "threshold_baseline_s"});
  c.manifest_paths = jget(j, "manifests", c.manifest_paths);
  c.traces_dir = jget(j, "traces_dir", c.traces_dir);
  if (j.contains("analytic")) {
    c.analytic_mode = true;
    const auto& ja = j.at("analytic");
    detail::reject_unknown(ja, "analytic",
                           {"beta1_db", "beta2", "shadow_sigma_db", "tx_power_w", "rb_bandwidth_hz",
                            "noise_psd_w_per_hz", "mbs_distance_m", "uav_distance_m", "duration_s",
                            "count"});
    auto& a = c.analytic;
    a.params.beta1_db = jget(ja, "beta1_db", a.params.beta1_db);
    a.params.beta2 = jget(ja, "beta2", a.params.beta2);
    a.params.shadow_sigma_db = jget(ja, "shadow_sigma_db", a.params.shadow_sigma_db);
    a.params.tx_power_w = jget(ja, "tx_power_w", a.params.tx_power_w);
    a.params.rb_bandwidth_hz = jget(ja, "rb_bandwidth_hz", a.params.rb_bandwidth_hz);
    a.params.noise_psd_w_per_hz = jget(ja, "noise_psd_w_per_hz", a.params.noise_psd_w_per_hz);
    a.mbs_distance_m = jget(ja, "mbs_distance_m", a.mbs_distance_m);
    a.uav_distance_m = jget(ja, "uav_distance_m", a.uav_distance_m);
    a.duration_s = jget(ja, "duration_s", a.duration_s);
    a.count = jget(ja, "count", a.count);
  }
  if (j.contains("env")) {
    const auto& je = j.at("env");
    detail::reject_unknown(je, "env",
                           {"buffer_capacity_s", "history_len", "num_buffers", "num_layers",
                            "startup_threshold_s", "max_steps"});
    c.env.buffer_capacity_s = jget(je, "buffer_capacity_s", c.env.buffer_capacity_s);
    c.env.history_len = jget(je, "history_len", c.env.history_len);
    c.env.num_buffers = jget(je, "num_buffers", c.env.num_buffers);
    c.env.num_layers = jget(je, "num_layers", c.env.num_layers);
    c.env.startup_threshold_s = jget(je, "startup_threshold_s", c.env.startup_threshold_s);
    c.env.max_steps = jget(je, "max_steps", c.env.max_steps);
  }
  if (j.contains("train")) {
    const auto& jt = j.at("train");
    detail::reject_unknown(jt, "train",
                           {"lr", "gamma", "clip_eps", "gae_lambda", "epochs_per_update",
                            "steps_per_rollout", "minibatch_size", "num_updates", "entropy_coef",
                            "hidden_sizes", "optimizer", "advantage_mode", "dual_cadence", "kbps_scale"});
    c.train.lr = jget(jt, "lr", c.train.lr);
    c.train.gamma = jget(jt, "gamma", c.train.gamma);
    c.train.clip_eps = jget(jt, "clip_eps", c.train.clip_eps);
    c.train.gae_lambda = jget(jt, "gae_lambda", c.train.gae_lambda);
    c.train.epochs_per_update = jget(jt, "epochs_per_update", c.train.epochs_per_update);
    c.train.steps_per_rollout = jget(jt, "steps_per_rollout", c.train.steps_per_rollout);
    c.train.minibatch_size = jget(jt, "minibatch_size", c.train.minibatch_size);
    c.train.num_updates = jget(jt, "num_updates", c.train.num_updates);
    c.train.entropy_coef = jget(jt, "entropy_coef", c.train.entropy_coef);
    c.train.hidden_sizes = jget(jt, "hidden_sizes", c.train.hidden_sizes);
    c.train.optimizer = jget(jt, "optimizer", c.train.optimizer);
    c.train.advantage_mode = jget(jt, "advantage_mode", c.train.advantage_mode);
    c.train.dual_cadence = jget(jt, "dual_cadence", c.train.dual_cadence);
    c.train.kbps_scale = jget(jt, "kbps_scale", c.train.kbps_scale);
  }
  if (j.contains("weights")) {
    const auto& jw = j.at("weights");
    detail::reject_unknown(
        jw, "weights", {"lambda_q", "eta", "mu", "h0", "h1", "omega0", "omega1", "weight_cap"});
    c.weights.lambda_q = jget(jw, "lambda_q", c.weights.lambda_q);
    c.weights.eta = jget(jw, "eta", c.weights.eta);
    c.weights.mu = jget(jw, "mu", c.weights.mu);
    c.weights.h0 = jget(jw, "h0", c.weights.h0);
    c.weights.h1 = jget(jw, "h1", c.weights.h1);
    c.weights.omega0 = jget(jw, "omega0", c.weights.omega0);
    c.weights.omega1 = jget(jw, "omega1", c.weights.omega1);
    c.weights.weight_cap = jget(jw, "weight_cap", c.weights.weight_cap);
  }
  c.out_dir = jget(j, "out_dir", c.out_dir);
  c.run_id = jget(j, "run_id", c.run_id);
  c.seed = jget(j, "seed", c.seed);
  c.workers = jget(j, "workers", c.workers);
  c.threshold_baseline_s = jget(j, "threshold_baseline_s", c.threshold_baseline_s);
  c.train.seed = c.seed;  // one seed governs the whole run
  return c;
}

// Effective config after defaults merge, echoed into the run directory.
inline nlohmann::json run_config_json(const RunConfig& c) {
  nlohmann::json j;
  j["manifests"] = c.manifest_paths;
  if (c.analytic_mode) {
    const auto& a = c.analytic;
    j["analytic"] = {{"beta1_db", a.params.beta1_db},
                     {"beta2", a.params.beta2},
                     {"shadow_sigma_db", a.params.shadow_sigma_db},
                     {"tx_power_w", a.params.tx_power_w},
                     {"rb_bandwidth_hz", a.params.rb_bandwidth_hz},
                     {"noise_psd_w_per_hz", a.params.noise_psd_w_per_hz},
                     {"mbs_distance_m", a.mbs_distance_m},
                     {"uav_distance_m", a.uav_distance_m},
                     {"duration_s", a.duration_s},
                     {"count", a.count}};
  } else {
    j["traces_dir"] = c.traces_dir;
  }
  j["env"] = {{"buffer_capacity_s", c.env.buffer_capacity_s},
              {"history_len", c.env.history_len},
              {"num_buffers", c.env.num_buffers},
              {"num_layers", c.env.num_layers},
              {"startup_threshold_s", c.env.startup_threshold_s},
              {"max_steps", c.env.max_steps}};
  j["train"] = {{"lr", c.train.lr},
                {"gamma", c.train.gamma},
                {"clip_eps", c.train.clip_eps},
                {"gae_lambda", c.train.gae_lambda},
                {"epochs_per_update", c.train.epochs_per_update},
                {"steps_per_rollout", c.train.steps_per_rollout},
                {"minibatch_size", c.train.minibatch_size},
                {"num_updates", c.train.num_updates},
                {"entropy_coef", c.train.entropy_coef},
                {"hidden_sizes", c.train.hidden_sizes},
                {"optimizer", c.train.optimizer},
                {"advantage_mode", c.train.advantage_mode},
                {"dual_cadence", c.train.dual_cadence},
                {"kbps_scale", c.train.kbps_scale}};
  j["weights"] = {{"lambda_q", c.weights.lambda_q},
                  {"eta", c.weights.eta},
                  {"mu", c.weights.mu},
                  {"h0", c.weights.h0},
                  {"h1", c.weights.h1},
                  {"omega0", c.weights.omega0},
                  {"omega1", c.weights.omega1},
                  {"weight_cap", c.weights.weight_cap}};
  j["out_dir"] = c.out_dir;
  j["run_id"] = c.run_id;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["threshold_baseline_s"] = c.threshold_baseline_s;
  return j;
}

inline RunConfig load_run_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return parse_run_config(j);
}

}  // namespace layersim

#endif  // LAYERSIM_CONFIG_HPP_
