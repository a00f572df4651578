// SPDX-License-Identifier: Apache-2.0

#ifndef LAYERSIM_METRICS_HPP_
#define LAYERSIM_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "layersim/env.hpp"
#include "layersim/errors.hpp"
#include "layersim/lagrange.hpp"

namespace layersim {

struct EpisodeMetrics {
  double mean_psnr_db = 0.0;  // per segment: EL PSNR where an EL played, else BL
  double total_stall_s = 0.0;
  double startup_s = 0.0;
  int quality_variation_count = 0;  // EL buffer empty <-> non-empty edges
  double total_reward = 0.0;        // combined reward under the given weights
  int episode_len_steps = 0;
};

// Recomputes metrics from a persisted episode log. The log alone lacks the
// scoring weights and the startup threshold, so both come in as arguments;
// PSNR comes back out of reward_quality (reward = psnr / 60 for every
// buffered segment). Rejects logs that do not cover a full episode.
inline EpisodeMetrics episode_metrics(const std::vector<EpisodeRow>& rows, const RewardWeights& weights,
                                      double startup_threshold_s) {
  if (rows.empty()) throw ValidationError("episode_metrics: empty log");

  int max_bl_idx = -1;
  int bl_count = 0;
  for (const auto& r : rows) {
    if (r.action == kActionBl && r.layer_idx >= 0) {
      max_bl_idx = std::max(max_bl_idx, r.layer_idx);
      ++bl_count;
    }
  }
  const int num_segments = max_bl_idx + 1;
  const auto& last = rows.back();
  if (num_segments < 1 || bl_count != num_segments || last.q_bl_s > 1e-9 || last.q_el_s > 1e-9) {
    throw ValidationError("episode_metrics: incomplete episode log");
  }

  EpisodeMetrics m;
  m.episode_len_steps = static_cast<int>(rows.size());
  std::vector<double> psnr(static_cast<size_t>(num_segments), 0.0);
  bool started = startup_threshold_s <= 0;
  for (const auto& r : rows) {
    m.total_stall_s += r.stall_s;
    m.quality_variation_count += static_cast<int>(std::lround(r.cost_smooth));
    m.total_reward += combined_reward(weights, r.reward_quality, r.cost_buffer, r.cost_smooth);
    if (r.layer_idx >= 0 && r.reward_quality > 0) {
      auto& p = psnr[static_cast<size_t>(r.layer_idx)];
      if (r.action == kActionBl) {
        if (p == 0.0) p = r.reward_quality * kPsnrNormDb;  // EL may already have claimed the slot
      } else {
        p = r.reward_quality * kPsnrNormDb;
      }
    }
    if (!started) {
      const bool bl_done_here = r.action == kActionBl && r.layer_idx == num_segments - 1;
      if (r.q_bl_s >= startup_threshold_s - 1e-9 || bl_done_here) {
        started = true;
        m.startup_s = r.wall_clock_s;
      }
    }
  }
  double sum = 0.0;
  for (double p : psnr) {
    if (p <= 0) throw ValidationError("episode_metrics: a segment has no recorded quality");
    sum += p;
  }
  m.mean_psnr_db = sum / static_cast<double>(num_segments);
  return m;
}

// Empirical CDF, ascending, fractions k/n; duplicates keep their own step.
inline std::vector<std::pair<double, double>> cdf_points(std::vector<double> values) {
  if (values.empty()) throw ValidationError("cdf_points: empty input");
  std::sort(values.begin(), values.end());
  std::vector<std::pair<double, double>> pts;
  pts.reserve(values.size());
  const double n = static_cast<double>(values.size());
  for (size_t k = 0; k < values.size(); ++k) {
    pts.emplace_back(values[k], static_cast<double>(k + 1) / n);
  }
  return pts;
}

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / n)};
}

// One evaluated episode tagged with its (video, trace) pair.
struct EpisodeRecord {
  std::string video_id;
  std::string pair_id;
  EpisodeMetrics metrics;
};

struct RunMetrics {
  std::string name;
  std::vector<EpisodeRecord> episodes;
};

namespace detail {

struct MetricPick {
  const char* key;
  double (*get)(const EpisodeMetrics&);
};

inline constexpr MetricPick kReportMetrics[] = {
    {"mean_psnr_db", [](const EpisodeMetrics& m) { return m.mean_psnr_db; }},
    {"total_stall_s", [](const EpisodeMetrics& m) { return m.total_stall_s; }},
    {"startup_s", [](const EpisodeMetrics& m) { return m.startup_s; }},
    {"quality_variation_count",
     [](const EpisodeMetrics& m) { return static_cast<double>(m.quality_variation_count); }},
    {"total_reward", [](const EpisodeMetrics& m) { return m.total_reward; }},
};

inline nlohmann::json aggregate_json(const std::vector<const EpisodeMetrics*>& eps) {
  nlohmann::json j;
  for (const auto& pick : kReportMetrics) {
    std::vector<double> vals;
    vals.reserve(eps.size());
    for (const auto* m : eps) vals.push_back(pick.get(*m));
    const auto [mean, sd] = mean_std(vals);
    j[pick.key] = {{"mean", mean}, {"std", sd}};
  }
  return j;
}

}  // namespace detail

inline nlohmann::json episode_metrics_json(const EpisodeMetrics& m) {
  return {{"mean_psnr_db", m.mean_psnr_db},
          {"total_stall_s", m.total_stall_s},
          {"startup_s", m.startup_s},
          {"quality_variation_count", m.quality_variation_count},
          {"total_reward", m.total_reward},
          {"episode_len_steps", m.episode_len_steps}};
}

// Evaluation report for one run: per-episode metrics, aggregates, and the
// empirical CDF of per-episode total reward.
inline nlohmann::json qoe_report(const RunMetrics& run) {
  if (run.episodes.empty()) throw ValidationError("qoe_report: no episodes");
  nlohmann::json j;
  j["name"] = run.name;
  j["episodes"] = nlohmann::json::array();
  std::vector<const EpisodeMetrics*> all;
  std::vector<double> rewards;
  for (const auto& e : run.episodes) {
    nlohmann::json je = episode_metrics_json(e.metrics);
    je["video_id"] = e.video_id;
    je["pair_id"] = e.pair_id;
    j["episodes"].push_back(std::move(je));
    all.push_back(&e.metrics);
    rewards.push_back(e.metrics.total_reward);
  }
  j["aggregate"] = detail::aggregate_json(all);
  j["cdf_total_reward"] = nlohmann::json::array();
  for (const auto& [v, f] : cdf_points(rewards)) {
    j["cdf_total_reward"].push_back({v, f});
  }
  return j;
}

// Percentage drop of `a` relative to `b`; null when b is 0 (undefined).
inline nlohmann::json reduction_pct(double a, double b) {
  if (b == 0.0) return a == 0.0 ? nlohmann::json(0.0) : nlohmann::json();
  return 100.0 * (b - a) / b;
}

// Side-by-side report over runs that evaluated identical (video, trace)
// pairs: per-run aggregates, per-video aggregates, and ordered pairwise
// deltas (PSNR dB difference, percent stall and variation reduction).
inline nlohmann::json compare_report(const std::vector<RunMetrics>& runs) {
  if (runs.size() < 2) throw ValidationError("compare_report: need at least 2 runs");
  for (const auto& run : runs) {
    if (run.episodes.size() != runs[0].episodes.size()) {
      throw ValidationError("compare_report: runs cover different numbers of episodes");
    }
    for (size_t k = 0; k < run.episodes.size(); ++k) {
      if (run.episodes[k].video_id != runs[0].episodes[k].video_id ||
          run.episodes[k].pair_id != runs[0].episodes[k].pair_id) {
        throw ValidationError("compare_report: runs cover mismatched (video, trace) sets");
      }
    }
  }

  nlohmann::json j;
  j["runs"] = nlohmann::json::array();
  for (const auto& run : runs) {
    nlohmann::json jr;
    jr["name"] = run.name;
    std::vector<const EpisodeMetrics*> all;
    std::map<std::string, std::vector<const EpisodeMetrics*>> by_video;
    for (const auto& e : run.episodes) {
      all.push_back(&e.metrics);
      by_video[e.video_id].push_back(&e.metrics);
    }
    jr["overall"] = detail::aggregate_json(all);
    jr["per_video"] = nlohmann::json::object();
    for (const auto& [vid, eps] : by_video) jr["per_video"][vid] = detail::aggregate_json(eps);
    j["runs"].push_back(std::move(jr));
  }

  auto mean_of = [](const RunMetrics& run, double (*get)(const EpisodeMetrics&)) {
    double s = 0.0;
    for (const auto& e : run.episodes) s += get(e.metrics);
    return s / static_cast<double>(run.episodes.size());
  };
  j["pairwise"] = nlohmann::json::array();
  for (size_t a = 0; a < runs.size(); ++a) {
    for (size_t b = 0; b < runs.size(); ++b) {
      if (a == b) continue;
      const double psnr_a = mean_of(runs[a], detail::kReportMetrics[0].get);
      const double psnr_b = mean_of(runs[b], detail::kReportMetrics[0].get);
      const double stall_a = mean_of(runs[a], detail::kReportMetrics[1].get);
      const double stall_b = mean_of(runs[b], detail::kReportMetrics[1].get);
      const double var_a = mean_of(runs[a], detail::kReportMetrics[3].get);
      const double var_b = mean_of(runs[b], detail::kReportMetrics[3].get);
      const double rew_a = mean_of(runs[a], detail::kReportMetrics[4].get);
      const double rew_b = mean_of(runs[b], detail::kReportMetrics[4].get);
      j["pairwise"].push_back({{"run", runs[a].name},
                               {"versus", runs[b].name},
                               {"psnr_delta_db", psnr_a - psnr_b},
                               {"stall_reduction_pct", reduction_pct(stall_a, stall_b)},
                               {"variation_reduction_pct", reduction_pct(var_a, var_b)},
                               {"reward_delta", rew_a - rew_b}});
    }
  }
  return j;
}

}  // namespace layersim

#endif  // LAYERSIM_METRICS_HPP_
