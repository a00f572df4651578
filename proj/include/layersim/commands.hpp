// SPDX-License-Identifier: Apache-2.0

#ifndef LAYERSIM_COMMANDS_HPP_
#define LAYERSIM_COMMANDS_HPP_

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layersim/baselines.hpp"
#include "layersim/channel.hpp"
#include "layersim/config.hpp"
#include "layersim/env.hpp"
#include "layersim/errors.hpp"
#include "layersim/gradcheck.hpp"
#include "layersim/metrics.hpp"
#include "layersim/net.hpp"
#include "layersim/trainer.hpp"

namespace layersim {

struct DataBundle {
  std::vector<VideoManifest> manifests;
  std::vector<TracePair> pairs;
};

namespace detail {

inline std::string pad3(int k) {
  std::string s = std::to_string(k);
  while (s.size() < 3) s.insert(s.begin(), '0');
  return s;
}

template <typename T>
std::vector<const T*> pointers(const std::vector<T>& v) {
  std::vector<const T*> p;
  p.reserve(v.size());
  for (const auto& x : v) p.push_back(&x);
  return p;
}

}  // namespace detail

inline DataBundle load_data(const RunConfig& cfg) {
  DataBundle data;
  for (const auto& path : cfg.manifest_paths) data.manifests.push_back(load_manifest(path));
  if (cfg.analytic_mode) {
    const auto& a = cfg.analytic;
    for (int k = 0; k < a.count; ++k) {
      TracePair p;
      p.pair_id = "analytic_" + detail::pad3(k);
      p.mbs = analytic_trace({a.mbs_distance_m}, a.params, a.duration_s,
                             Rng::derive(cfg.seed, 9000 + 2 * static_cast<uint64_t>(k)));
      p.uav = analytic_trace({a.uav_distance_m}, a.params, a.duration_s,
                             Rng::derive(cfg.seed, 9001 + 2 * static_cast<uint64_t>(k)));
      p.mbs.bs_id = "mbs_" + p.pair_id;
      p.uav.bs_id = "uav_" + p.pair_id;
      data.pairs.push_back(std::move(p));
    }
  } else {
    data.pairs = load_trace_dir(cfg.traces_dir);
  }
  return data;
}

struct PolicyEntry {
  enum class Kind { kNet, kThreshold, kBlOnly, kRandom };
  std::string name;
  Kind kind = Kind::kThreshold;
  Net net;  // only for kNet
};

// A policy spec is a baseline name or a path to a policy JSON file.
inline PolicyEntry resolve_policy(const std::string& spec) {
  PolicyEntry pe;
  if (spec == "threshold") {
    pe.kind = PolicyEntry::Kind::kThreshold;
    pe.name = spec;
  } else if (spec == "bl-only") {
    pe.kind = PolicyEntry::Kind::kBlOnly;
    pe.name = spec;
  } else if (spec == "random") {
    pe.kind = PolicyEntry::Kind::kRandom;
    pe.name = spec;
  } else if (std::filesystem::exists(spec)) {
    pe.kind = PolicyEntry::Kind::kNet;
    try {
      pe.net = net_from_json(nlohmann::json::parse(read_file(spec)));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("policy '" + spec + "': " + e.what());
    }
    if (pe.net.spec.head != OutputHead::kPolicy) {
      throw ValidationError("policy '" + spec + "': not a policy-head network");
    }
    pe.name = std::filesystem::path(spec).stem().string();
  } else {
    throw ConfigError("unknown policy '" + spec +
                      "' (expected threshold, bl-only, random, or a policy JSON path)");
  }
  return pe;
}

// Greedy evaluation of one policy over every (manifest, trace pair) combo.
// Writes one episode CSV per combo when episodes_dir is non-empty.
inline RunMetrics evaluate_policy(const PolicyEntry& pe, const DataBundle& data, const RunConfig& cfg,
                                  const std::string& episodes_dir) {
  const int expected_in = 2 + 2 + 2 + 2 * cfg.env.history_len;
  if (pe.kind == PolicyEntry::Kind::kNet && pe.net.spec.input_size() != expected_in) {
    throw ValidationError("policy '" + pe.name + "' expects input size " +
                          std::to_string(pe.net.spec.input_size()) + ", this config produces " +
                          std::to_string(expected_in));
  }
  RunMetrics run;
  run.name = pe.name;
  uint64_t combo = 0;
  for (const auto& m : data.manifests) {
    for (const auto& p : data.pairs) {
      StreamEnv env(&m, &p, cfg.env);
      const StateNorms norms{cfg.env.buffer_capacity_s, cfg.train.kbps_scale, m.num_segments};
      Rng rng(Rng::derive(cfg.seed, 700 + combo));
      const auto act = [&](const EnvState& s) -> int {
        switch (pe.kind) {
          case PolicyEntry::Kind::kNet:
            return argmax(pe.net.forward(encode_state(s, norms)));
          case PolicyEntry::Kind::kThreshold:
            return threshold_action({cfg.threshold_baseline_s}, s);
          case PolicyEntry::Kind::kBlOnly:
            return bl_only_action(s);
          case PolicyEntry::Kind::kRandom:
            return random_action(rng);
        }
        return kActionBl;
      };
      const auto rows = run_episode(env, Rng::derive(cfg.seed, combo), act);
      if (!episodes_dir.empty()) {
        write_file(episodes_dir + "/" + pe.name + "_" + m.video_id + "_" + p.pair_id + ".csv",
                   episode_csv(rows));
      }
      run.episodes.push_back(
          {m.video_id, p.pair_id, episode_metrics(rows, cfg.weights, cfg.env.startup_threshold_s)});
      ++combo;
    }
  }
  return run;
}

inline std::string run_dir(const RunConfig& cfg) { return cfg.out_dir + "/" + cfg.run_id; }

inline void write_config_echo(const RunConfig& cfg) {
  write_file(run_dir(cfg) + "/config.json", run_config_json(cfg).dump(2) + "\n");
}

inline int cmd_train(const RunConfig& cfg) {
  cfg.validate(true);
  const DataBundle data = load_data(cfg);
  Trainer trainer({detail::pointers(data.manifests), detail::pointers(data.pairs), cfg.env, cfg.train,
                   cfg.weights, cfg.workers});
  std::vector<TrainMetricsRow> rows;
  rows.reserve(static_cast<size_t>(cfg.train.num_updates));
  const int report_every = std::max(1, cfg.train.num_updates / 10);
  for (int u = 0; u < cfg.train.num_updates; ++u) {
    rows.push_back(trainer.run_update(u));
    if ((u + 1) % report_every == 0 || u + 1 == cfg.train.num_updates) {
      const auto& r = rows.back();
      std::cout << "update " << (u + 1) << "/" << cfg.train.num_updates << " mean_reward "
                << num_str(r.mean_reward) << " stall/step " << num_str(r.mean_cost_buffer) << " eta "
                << num_str(r.eta) << " mu " << num_str(r.mu) << "\n";
    }
  }
  const std::string dir = run_dir(cfg);
  write_file(dir + "/policy.json", net_to_json(trainer.policy()).dump(2) + "\n");
  write_file(dir + "/train_metrics.csv", train_metrics_csv(rows));
  write_config_echo(cfg);
  std::cout << "policy written to " << dir << "/policy.json\n";
  return 0;
}

inline int cmd_eval(const RunConfig& cfg, const std::string& policy_spec) {
  cfg.validate(true);
  const DataBundle data = load_data(cfg);
  const PolicyEntry pe = resolve_policy(policy_spec);
  const std::string dir = run_dir(cfg);
  const RunMetrics run = evaluate_policy(pe, data, cfg, dir + "/episodes");
  const nlohmann::json report = qoe_report(run);
  write_file(dir + "/report.json", report.dump(2) + "\n");
  std::string cdf = "total_reward,cum_fraction\n";
  for (const auto& point : report.at("cdf_total_reward")) {
    cdf += num_str(point[0].get<double>());
    cdf += ',';
    cdf += num_str(point[1].get<double>());
    cdf += '\n';
  }
  write_file(dir + "/report_cdf.csv", cdf);
  write_config_echo(cfg);
  std::cout << "evaluated " << run.episodes.size() << " episodes; report in " << dir << "/report.json\n";
  return 0;
}

inline int cmd_compare(const RunConfig& cfg, const std::vector<std::string>& policy_specs) {
  cfg.validate(true);
  if (policy_specs.size() < 2) throw ConfigError("compare needs at least 2 policies");
  const DataBundle data = load_data(cfg);
  const std::string dir = run_dir(cfg);
  std::vector<RunMetrics> runs;
  for (const auto& spec : policy_specs) {
    PolicyEntry pe = resolve_policy(spec);
    for (const auto& existing : runs) {
      if (existing.name == pe.name) pe.name += "_" + std::to_string(runs.size());
    }
    runs.push_back(evaluate_policy(pe, data, cfg, dir + "/episodes"));
  }
  const nlohmann::json report = compare_report(runs);
  write_file(dir + "/compare.json", report.dump(2) + "\n");
  std::string csv =
      "run,mean_psnr_db_mean,mean_psnr_db_std,total_stall_s_mean,total_stall_s_std,"
      "quality_variation_mean,quality_variation_std,total_reward_mean,total_reward_std\n";
  for (const auto& jr : report.at("runs")) {
    const auto& o = jr.at("overall");
    csv += jr.at("name").get<std::string>();
    for (const char* key : {"mean_psnr_db", "total_stall_s", "quality_variation_count", "total_reward"}) {
      csv += ',';
      csv += num_str(o.at(key).at("mean").get<double>());
      csv += ',';
      csv += num_str(o.at(key).at("std").get<double>());
    }
    csv += '\n';
  }
  write_file(dir + "/compare.csv", csv);
  write_config_echo(cfg);
  std::cout << "compared " << runs.size() << " policies; report in " << dir << "/compare.json\n";
  return 0;
}

struct SynthArgs {
  SynthProfile mbs{8000.0, 2000.0, 0.1, 5.0};
  SynthProfile uav{30000.0, 3000.0, 0.25, 4.0};
  double duration_s = 200.0;
  int count = 4;
  uint64_t seed = 1;
  std::string out_dir = "traces";
};

inline int cmd_synth(const SynthArgs& args) {
  if (args.count < 1) throw ValidationError("synth-traces: count must be >= 1");
  for (int k = 0; k < args.count; ++k) {
    const std::string suffix = detail::pad3(k);
    save_trace(synth_trace(args.mbs, args.duration_s, Rng::derive(args.seed, 2 * static_cast<uint64_t>(k))),
               args.out_dir + "/mbs_" + suffix + ".csv");
    save_trace(
        synth_trace(args.uav, args.duration_s, Rng::derive(args.seed, 2 * static_cast<uint64_t>(k) + 1)),
        args.out_dir + "/uav_" + suffix + ".csv");
  }
  std::cout << "wrote " << 2 * args.count << " trace files to " << args.out_dir << "\n";
  return 0;
}

inline int cmd_gradcheck(uint64_t seed) {
  const auto results = run_gradcheck(seed);
  bool all_pass = true;
  for (const auto& r : results) {
    std::cout << r.name << ": max_rel_err " << num_str(r.max_rel_err) << " (tolerance "
              << num_str(r.tolerance) << ", " << r.cases << " cases) " << (r.pass ? "PASS" : "FAIL")
              << "\n";
    all_pass = all_pass && r.pass;
  }
  std::cout << (all_pass ? "gradcheck: all suites passed\n" : "gradcheck: FAILURES above\n");
  return all_pass ? 0 : 1;
}

}  // namespace layersim

#endif  // LAYERSIM_COMMANDS_HPP_
