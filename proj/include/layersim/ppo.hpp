// SPDX-License-Identifier: Apache-2.0

#ifndef LAYERSIM_PPO_HPP_
#define LAYERSIM_PPO_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "layersim/errors.hpp"
#include "layersim/lagrange.hpp"
#include "layersim/net.hpp"
#include "layersim/rng.hpp"
#include "layersim/util.hpp"

namespace layersim {

struct TrainConfig {
  double lr = 0.001;
  double gamma = 0.95;
  double clip_eps = 0.2;
  double gae_lambda = 0.95;
  int epochs_per_update = 4;
  int steps_per_rollout = 2048;
  int minibatch_size = 256;
  uint64_t seed = 1;
  int num_updates = 200;
  double entropy_coef = 0.01;            // decays linearly to 0 over num_updates
  std::vector<int> hidden_sizes = {64, 64};
  std::string optimizer = "sgd";         // "sgd" | "adam"
  std::string advantage_mode = "gae";    // "gae" | one-step "td"
  std::string dual_cadence = "episode";  // "episode" | "step"
  double kbps_scale = 20000.0;

  void validate() const {
    if (!(lr > 0)) throw ValidationError("train config: lr must be > 0");
    if (!(gamma > 0 && gamma < 1)) throw ValidationError("train config: gamma must be in (0, 1)");
    if (!(clip_eps > 0)) throw ValidationError("train config: clip_eps must be > 0");
    if (gae_lambda < 0 || gae_lambda > 1) throw ValidationError("train config: gae_lambda must be in [0, 1]");
    if (epochs_per_update < 1) throw ValidationError("train config: epochs_per_update must be >= 1");
    if (steps_per_rollout < 1) throw ValidationError("train config: steps_per_rollout must be >= 1");
    if (minibatch_size < 1) throw ValidationError("train config: minibatch_size must be >= 1");
    if (num_updates < 1) throw ValidationError("train config: num_updates must be >= 1");
    if (entropy_coef < 0) throw ValidationError("train config: entropy_coef must be >= 0");
    if (hidden_sizes.empty()) throw ValidationError("train config: hidden_sizes must be non-empty");
    for (int s : hidden_sizes) {
      if (s < 1) throw ValidationError("train config: hidden sizes must be >= 1");
    }
    if (optimizer != "sgd" && optimizer != "adam") {
      throw ValidationError("train config: optimizer must be 'sgd' or 'adam'");
    }
    if (advantage_mode != "gae" && advantage_mode != "td") {
      throw ValidationError("train config: advantage_mode must be 'gae' or 'td'");
    }
    if (dual_cadence != "episode" && dual_cadence != "step") {
      throw ValidationError("train config: dual_cadence must be 'episode' or 'step'");
    }
    if (!(kbps_scale > 0)) throw ValidationError("train config: kbps_scale must be > 0");
  }
};

struct Transition {
  std::vector<double> features;
  int action = 0;
  double log_prob_old = 0.0;
  double reward = 0.0;  // combined scalar under the rollout's weight snapshot
  double value_est = 0.0;
  bool done = false;
  double cost_buffer = 0.0;  // raw components kept for dual updates
  double cost_smooth = 0.0;
};

// Totals of one completed episode, used for dual updates and metrics.
struct EpisodeSummary {
  int steps = 0;
  double sum_reward = 0.0;
  double sum_quality = 0.0;
  double sum_cost_buffer = 0.0;
  double sum_cost_smooth = 0.0;
};

// One batch of experience. May concatenate several worker chunks; each
// chunk is an independent trajectory with its own bootstrap value, so
// advantage recursions never cross chunk_starts boundaries.
struct Rollout {
  std::vector<Transition> steps;
  std::vector<size_t> chunk_starts = {0};
  std::vector<double> chunk_last_values = {0.0};
  std::vector<EpisodeSummary> episodes;  // completed in collection order
};

inline double prob_ratio(double log_prob_new, double log_prob_old) {
  return std::exp(log_prob_new - log_prob_old);
}

inline double td_advantage(double r, double gamma, double v_next, double v_now) {
  return r + gamma * v_next - v_now;
}

inline double clipped_objective(double ratio, double advantage, double eps) {
  if (!(eps > 0)) throw ValidationError("clipped_objective: eps must be > 0");
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

// GAE(gamma, lambda) over one trajectory; last_value bootstraps the value
// past a truncated tail. lambda = 0 reduces to the one-step TD advantage.
inline std::vector<double> gae_advantages(const std::vector<Transition>& traj, double gamma, double lambda,
                                          double last_value = 0.0) {
  if (traj.empty()) throw ValidationError("gae_advantages: empty trajectory");
  const size_t n = traj.size();
  std::vector<double> adv(n, 0.0);
  double running = 0.0;
  for (size_t k = n; k-- > 0;) {
    const double not_done = traj[k].done ? 0.0 : 1.0;
    const double v_next = (k + 1 < n) ? traj[k + 1].value_est : last_value;
    const double delta = traj[k].reward + gamma * v_next * not_done - traj[k].value_est;
    running = delta + gamma * lambda * not_done * running;
    adv[k] = running;
  }
  return adv;
}

// Per-chunk advantages concatenated in rollout order.
inline std::vector<double> compute_advantages(const Rollout& r, const TrainConfig& cfg) {
  if (r.steps.empty()) throw ValidationError("compute_advantages: empty rollout");
  const double lambda = cfg.advantage_mode == "td" ? 0.0 : cfg.gae_lambda;
  std::vector<double> adv;
  adv.reserve(r.steps.size());
  for (size_t c = 0; c < r.chunk_starts.size(); ++c) {
    const size_t begin = r.chunk_starts[c];
    const size_t end = (c + 1 < r.chunk_starts.size()) ? r.chunk_starts[c + 1] : r.steps.size();
    std::vector<Transition> chunk(r.steps.begin() + static_cast<long>(begin),
                                  r.steps.begin() + static_cast<long>(end));
    const auto a = gae_advantages(chunk, cfg.gamma, lambda, r.chunk_last_values[c]);
    adv.insert(adv.end(), a.begin(), a.end());
  }
  return adv;
}

// In-place shift to mean 0, population std 1 (std floored at 1e-8).
inline void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) throw ValidationError("normalize_advantages: empty input");
  const double n = static_cast<double>(adv.size());
  double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double std_dev = std::max(std::sqrt(var / n), 1e-8);
  for (double& a : adv) a = (a - mean) / std_dev;
}

// Collects `steps` transitions, sampling from the policy (or argmax when
// greedy) and scoring with the given weight snapshot. Episodes auto-reset
// via source.next_episode(); partially collected episodes carry across
// calls through `carry`.
//
// Source interface: features() -> vector<double>; step(int) -> StepOutcome;
// next_episode() -> void.
template <typename Source>
Rollout collect_rollout(Source& source, const Net& policy, const Net& value_net, int steps,
                        const RewardWeights& weights, Rng& rng, bool greedy = false,
                        EpisodeSummary* carry = nullptr) {
  if (steps < 1) throw ValidationError("collect_rollout: steps must be >= 1");
  Rollout out;
  out.steps.reserve(static_cast<size_t>(steps));
  EpisodeSummary local;
  EpisodeSummary& ep = carry ? *carry : local;
  for (int k = 0; k < steps; ++k) {
    Transition t;
    t.features = source.features();
    const auto probs = policy.forward(t.features);
    if (greedy) {
      t.action = argmax(probs);
    } else {
      const double u = rng.uniform();
      double acc = 0.0;
      t.action = static_cast<int>(probs.size()) - 1;
      for (size_t a = 0; a < probs.size(); ++a) {
        acc += probs[a];
        if (u < acc) {
          t.action = static_cast<int>(a);
          break;
        }
      }
    }
    t.log_prob_old = std::log(probs[static_cast<size_t>(t.action)]);
    t.value_est = value_net.value(t.features);
    const StepOutcome o = source.step(t.action);
    t.reward = combined_reward(weights, o.reward_quality, o.cost_buffer, o.cost_smooth);
    t.done = o.done;
    t.cost_buffer = o.cost_buffer;
    t.cost_smooth = o.cost_smooth;
    ep.steps += 1;
    ep.sum_reward += t.reward;
    ep.sum_quality += o.reward_quality;
    ep.sum_cost_buffer += o.cost_buffer;
    ep.sum_cost_smooth += o.cost_smooth;
    out.steps.push_back(std::move(t));
    if (o.done) {
      out.episodes.push_back(ep);
      ep = EpisodeSummary{};
      source.next_episode();
    }
  }
  out.chunk_last_values[0] = out.steps.back().done ? 0.0 : value_net.value(source.features());
  return out;
}

// Concatenate worker chunks in index order so results do not depend on
// scheduling.
inline Rollout merge_rollouts(std::vector<Rollout> parts) {
  if (parts.empty()) throw ValidationError("merge_rollouts: no parts");
  Rollout merged;
  merged.chunk_starts.clear();
  merged.chunk_last_values.clear();
  for (auto& p : parts) {
    merged.chunk_starts.push_back(merged.steps.size());
    merged.chunk_last_values.push_back(p.chunk_last_values[0]);
    merged.steps.insert(merged.steps.end(), std::make_move_iterator(p.steps.begin()),
                        std::make_move_iterator(p.steps.end()));
    merged.episodes.insert(merged.episodes.end(), p.episodes.begin(), p.episodes.end());
  }
  if (merged.steps.empty()) throw ValidationError("merge_rollouts: empty rollout");
  return merged;
}

// Adaptive-moment accumulators (the optional "adam" optimizer mode).
struct OptState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
};

namespace detail {

inline void check_finite(const std::vector<double>& g, const char* what) {
  for (double x : g) {
    if (!std::isfinite(x)) throw TrainingError(std::string("non-finite gradient in ") + what);
  }
}

// Applies one ascent step along grad (pass the loss gradient negated).
inline void apply_gradient(Net& net, const std::vector<double>& grad, const TrainConfig& cfg,
                           OptState* opt) {
  if (cfg.optimizer == "sgd" || opt == nullptr) {
    net.axpy(cfg.lr, grad);
    return;
  }
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  if (opt->m.size() != grad.size()) {
    opt->m.assign(grad.size(), 0.0);
    opt->v.assign(grad.size(), 0.0);
    opt->t = 0;
  }
  opt->t += 1;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(opt->t));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(opt->t));
  for (size_t k = 0; k < grad.size(); ++k) {
    opt->m[k] = kBeta1 * opt->m[k] + (1.0 - kBeta1) * grad[k];
    opt->v[k] = kBeta2 * opt->v[k] + (1.0 - kBeta2) * grad[k] * grad[k];
    const double mhat = opt->m[k] / bc1;
    const double vhat = opt->v[k] / bc2;
    net.params[k] += cfg.lr * mhat / (std::sqrt(vhat) + kEps);
  }
}

}  // namespace detail

struct UpdateStats {
  double policy_loss = 0.0;  // negated mean clipped objective
  double value_loss = 0.0;   // mean squared error against value targets
  double entropy = 0.0;      // mean policy entropy
};

// One PPO update over the rollout: epochs of shuffled minibatches, policy
// ascends the clipped surrogate plus entropy bonus, value net descends
// squared error against (advantage + value_est) targets. Advantages are
// normalized batch-wide for the policy only. Ties in the clip minimum take
// the unclipped branch.
inline UpdateStats ppo_update(Net& policy, Net& value_net, const Rollout& rollout, const TrainConfig& cfg,
                              double entropy_coef, Rng& shuffle_rng, OptState* policy_opt = nullptr,
                              OptState* value_opt = nullptr) {
  cfg.validate();
  if (rollout.steps.empty()) throw ValidationError("ppo_update: empty rollout");
  const size_t n = rollout.steps.size();

  std::vector<double> adv = compute_advantages(rollout, cfg);
  std::vector<double> targets(n);
  for (size_t k = 0; k < n; ++k) targets[k] = adv[k] + rollout.steps[k].value_est;
  normalize_advantages(adv);

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  UpdateStats stats;
  size_t batches_done = 0;
  for (int epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
    for (size_t k = n; k > 1; --k) {  // Fisher-Yates
      const size_t j = shuffle_rng.below(k);
      std::swap(order[k - 1], order[j]);
    }
    for (size_t begin = 0; begin < n; begin += static_cast<size_t>(cfg.minibatch_size)) {
      const size_t end = std::min(n, begin + static_cast<size_t>(cfg.minibatch_size));
      const double batch_n = static_cast<double>(end - begin);
      std::vector<double> pgrad(policy.params.size(), 0.0);
      std::vector<double> vgrad(value_net.params.size(), 0.0);
      double batch_obj = 0.0;
      double batch_vloss = 0.0;
      double batch_entropy = 0.0;
      for (size_t k = begin; k < end; ++k) {
        const Transition& t = rollout.steps[order[k]];
        const double a_norm = adv[order[k]];

        const Net::Trace ptr = policy.forward_trace(t.features);
        const auto& probs = ptr.out;
        const double logp = std::log(probs[static_cast<size_t>(t.action)]);
        const double ratio = prob_ratio(logp, t.log_prob_old);
        batch_obj += clipped_objective(ratio, a_norm, cfg.clip_eps);
        const double h = entropy(probs);
        batch_entropy += h;

        // d(min(r A, clip(r) A))/d logp: the clipped branch is flat when
        // the ratio sits outside the clip window; ties take the unclipped
        // branch.
        const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
        const double dobj_dlogp = (ratio * a_norm <= clipped * a_norm) ? a_norm * ratio : 0.0;
        std::vector<double> dlogits = logprob_grad_logits(probs, t.action);
        for (double& g : dlogits) g *= dobj_dlogp;
        if (entropy_coef > 0) {
          const auto hg = entropy_grad_logits(probs);
          for (size_t z = 0; z < dlogits.size(); ++z) dlogits[z] += entropy_coef * hg[z];
        }
        const auto pg = policy.backward(ptr, dlogits);
        for (size_t z = 0; z < pgrad.size(); ++z) pgrad[z] += pg[z];

        const Net::Trace vtr = value_net.forward_trace(t.features);
        const double err = vtr.out[0] - targets[order[k]];
        batch_vloss += err * err;
        const auto vg = value_net.backward(vtr, {2.0 * err});
        for (size_t z = 0; z < vgrad.size(); ++z) vgrad[z] += vg[z];
      }
      for (double& g : pgrad) g /= batch_n;
      for (double& g : vgrad) g /= -batch_n;  // descend the value loss
      detail::check_finite(pgrad, "policy update");
      detail::check_finite(vgrad, "value update");
      detail::apply_gradient(policy, pgrad, cfg, policy_opt);
      detail::apply_gradient(value_net, vgrad, cfg, value_opt);
      stats.policy_loss += -batch_obj / batch_n;
      stats.value_loss += batch_vloss / batch_n;
      stats.entropy += batch_entropy / batch_n;
      ++batches_done;
    }
  }
  if (batches_done > 0) {
    stats.policy_loss /= static_cast<double>(batches_done);
    stats.value_loss /= static_cast<double>(batches_done);
    stats.entropy /= static_cast<double>(batches_done);
  }
  return stats;
}

// One row of the training metrics CSV.
struct TrainMetricsRow {
  int update_idx = 0;
  double mean_reward = 0.0;       // per step over the update's rollout
  double mean_cost_buffer = 0.0;  // per step
  double mean_cost_smooth = 0.0;  // per step
  double eta = 0.0;               // weights in force for the next rollout
  double mu = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

inline constexpr const char* kTrainMetricsCsvHeader =
    "update_idx,mean_reward,mean_cost_buffer,mean_cost_smooth,eta,mu,policy_loss,value_loss,entropy";

inline std::string train_metrics_csv(const std::vector<TrainMetricsRow>& rows) {
  std::string out = kTrainMetricsCsvHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += num_str(static_cast<long long>(r.update_idx));
    out += ',';
    out += num_str(r.mean_reward);
    out += ',';
    out += num_str(r.mean_cost_buffer);
    out += ',';
    out += num_str(r.mean_cost_smooth);
    out += ',';
    out += num_str(r.eta);
    out += ',';
    out += num_str(r.mu);
    out += ',';
    out += num_str(r.policy_loss);
    out += ',';
    out += num_str(r.value_loss);
    out += ',';
    out += num_str(r.entropy);
    out += '\n';
  }
  return out;
}

}  // namespace layersim

#endif  // LAYERSIM_PPO_HPP_
