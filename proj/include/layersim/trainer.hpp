// SPDX-License-Identifier: Apache-2.0

#ifndef LAYERSIM_TRAINER_HPP_
#define LAYERSIM_TRAINER_HPP_

#include <algorithm>
#include <cstdint>
#include <exception>
#include <memory>
#include <thread>
#include <utility>
#include <vector>

#include "layersim/env.hpp"
#include "layersim/errors.hpp"
#include "layersim/lagrange.hpp"
#include "layersim/manifest.hpp"
#include "layersim/net.hpp"
#include "layersim/ppo.hpp"
#include "layersim/rng.hpp"
#include "layersim/trace.hpp"

namespace layersim {

// Rotates a StreamEnv through every (manifest, trace pair) combination,
// one combination per episode, and exposes the rollout Source interface.
class EpisodeSource {
 public:
  EpisodeSource(std::vector<const VideoManifest*> manifests, std::vector<const TracePair*> pairs,
                EnvConfig env_cfg, double kbps_scale, uint64_t seed, int start_combo)
      : manifests_(std::move(manifests)),
        pairs_(std::move(pairs)),
        kbps_scale_(kbps_scale),
        seed_(seed),
        env_(nullptr, nullptr, env_cfg) {
    if (manifests_.empty()) throw ConfigError("episode source: no manifests");
    if (pairs_.empty()) throw ConfigError("episode source: no trace pairs");
    const int n = combos();
    combo_ = ((start_combo % n) + n) % n;
    activate();
  }

  int combos() const { return static_cast<int>(manifests_.size() * pairs_.size()); }

  std::vector<double> features() const { return encode_state(env_.state(), norms_); }

  StepOutcome step(int action) { return env_.step(action); }

  void next_episode() {
    combo_ = (combo_ + 1) % combos();
    ++episode_counter_;
    activate();
  }

  const StreamEnv& env() const { return env_; }
  const StateNorms& norms() const { return norms_; }

 private:
  void activate() {
    const size_t m_idx = static_cast<size_t>(combo_) % manifests_.size();
    const size_t p_idx = static_cast<size_t>(combo_) / manifests_.size();
    const VideoManifest* m = manifests_[m_idx];
    env_.set_sources(m, pairs_[p_idx]);
    norms_ = {env_.config().buffer_capacity_s, kbps_scale_, m->num_segments};
    env_.reset(Rng::derive(seed_, static_cast<uint64_t>(episode_counter_)));
  }

  std::vector<const VideoManifest*> manifests_;
  std::vector<const TracePair*> pairs_;
  double kbps_scale_;
  uint64_t seed_;
  StreamEnv env_;
  StateNorms norms_;
  int combo_ = 0;
  uint64_t episode_counter_ = 0;
};

struct TrainerSetup {
  std::vector<const VideoManifest*> manifests;
  std::vector<const TracePair*> pairs;
  EnvConfig env_cfg;
  TrainConfig train_cfg;
  RewardWeights weights;
  int workers = 1;
};

// Runs the rollout/update loop. Workers collect equal chunks of each
// rollout on private env instances and private RNG streams against a
// frozen policy snapshot; chunks merge in worker order and the dual
// weights advance after the merge, so any worker count is deterministic
// for a fixed configuration.
class Trainer {
 public:
  explicit Trainer(TrainerSetup setup) : setup_(std::move(setup)) {
    setup_.env_cfg.validate();
    setup_.train_cfg.validate();
    setup_.weights.validate();
    if (setup_.workers < 1) throw ConfigError("trainer: workers must be >= 1");
    const uint64_t seed = setup_.train_cfg.seed;
    for (int w = 0; w < setup_.workers; ++w) {
      workers_.push_back(std::make_unique<Worker>(Worker{
          EpisodeSource(setup_.manifests, setup_.pairs, setup_.env_cfg, setup_.train_cfg.kbps_scale,
                        Rng::derive(seed, 500 + static_cast<uint64_t>(w)), w),
          Rng(Rng::derive(seed, 100 + static_cast<uint64_t>(w))), EpisodeSummary{}}));
    }
    const int in = static_cast<int>(workers_[0]->source.features().size());
    std::vector<int> psizes = {in};
    psizes.insert(psizes.end(), setup_.train_cfg.hidden_sizes.begin(), setup_.train_cfg.hidden_sizes.end());
    std::vector<int> vsizes = psizes;
    psizes.push_back(2);
    vsizes.push_back(1);
    policy_ = Net::init({psizes, OutputHead::kPolicy}, Rng::derive(seed, 11));
    value_ = Net::init({vsizes, OutputHead::kValue}, Rng::derive(seed, 12));
    update_rng_ = Rng(Rng::derive(seed, 7));
    weights_ = setup_.weights;
  }

  TrainMetricsRow run_update(int update_idx) {
    const TrainConfig& cfg = setup_.train_cfg;
    const int w_count = static_cast<int>(workers_.size());
    const int chunk = (cfg.steps_per_rollout + w_count - 1) / w_count;

    std::vector<Rollout> parts(static_cast<size_t>(w_count));
    if (w_count == 1) {
      parts[0] = collect_one(0, chunk);
    } else {
      std::vector<std::exception_ptr> errors(static_cast<size_t>(w_count));
      std::vector<std::thread> threads;
      threads.reserve(static_cast<size_t>(w_count));
      for (int w = 0; w < w_count; ++w) {
        threads.emplace_back([this, w, chunk, &parts, &errors] {
          try {
            parts[static_cast<size_t>(w)] = collect_one(w, chunk);
          } catch (...) {
            errors[static_cast<size_t>(w)] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    Rollout merged = merge_rollouts(std::move(parts));

    const double frac = static_cast<double>(update_idx) / static_cast<double>(cfg.num_updates);
    const double coef = cfg.entropy_coef * std::max(0.0, 1.0 - frac);
    const UpdateStats stats = ppo_update(policy_, value_, merged, cfg, coef, update_rng_,
                                         &policy_opt_, &value_opt_);

    if (cfg.dual_cadence == "episode") {
      for (const auto& ep : merged.episodes) {
        const double n = static_cast<double>(std::max(ep.steps, 1));
        weights_ = update_weights(weights_, ep.sum_cost_buffer / n, ep.sum_cost_smooth / n);
      }
    } else {
      for (const auto& t : merged.steps) {
        weights_ = update_weights(weights_, t.cost_buffer, t.cost_smooth);
      }
    }

    TrainMetricsRow row;
    row.update_idx = update_idx;
    const double n = static_cast<double>(merged.steps.size());
    for (const auto& t : merged.steps) {
      row.mean_reward += t.reward / n;
      row.mean_cost_buffer += t.cost_buffer / n;
      row.mean_cost_smooth += t.cost_smooth / n;
    }
    row.eta = weights_.eta;
    row.mu = weights_.mu;
    row.policy_loss = stats.policy_loss;
    row.value_loss = stats.value_loss;
    row.entropy = stats.entropy;
    return row;
  }

  std::vector<TrainMetricsRow> run() {
    std::vector<TrainMetricsRow> rows;
    rows.reserve(static_cast<size_t>(setup_.train_cfg.num_updates));
    for (int u = 0; u < setup_.train_cfg.num_updates; ++u) rows.push_back(run_update(u));
    return rows;
  }

  const Net& policy() const { return policy_; }
  const Net& value_net() const { return value_; }
  const RewardWeights& weights() const { return weights_; }

 private:
  struct Worker {
    EpisodeSource source;
    Rng rng;
    EpisodeSummary carry;  // episode straddling rollout boundaries
  };

  Rollout collect_one(int w, int chunk) {
    Worker& wk = *workers_[static_cast<size_t>(w)];
    return collect_rollout(wk.source, policy_, value_, chunk, weights_, wk.rng, false, &wk.carry);
  }

  TrainerSetup setup_;
  std::vector<std::unique_ptr<Worker>> workers_;
  Net policy_;
  Net value_;
  RewardWeights weights_;
  Rng update_rng_{1};
  OptState policy_opt_;
  OptState value_opt_;
};

}  // namespace layersim

#endif  // LAYERSIM_TRAINER_HPP_
