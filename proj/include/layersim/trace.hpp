// SPDX-License-Identifier: Apache-2.0

#ifndef LAYERSIM_TRACE_HPP_
#define LAYERSIM_TRACE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "layersim/errors.hpp"
#include "layersim/rng.hpp"
#include "layersim/util.hpp"

namespace layersim {

struct TraceSample {
  double time_s = 0.0;
  double kbps = 0.0;
};

// Throughput time series from one base station. Lookup is zero-order hold;
// past the last sample the trace wraps (time modulo duration), so episodes
// may outlive the trace. Immutable after load; shareable across rollouts.
struct ThroughputTrace {
  std::string bs_id;
  std::vector<TraceSample> samples;

  // One nominal spacing past the last sample; the wrap period.
  double duration_s() const {
    const size_t n = samples.size();
    if (n < 2) return samples.empty() ? 0.0 : samples.back().time_s + 1.0;
    const double spacing = (samples.back().time_s - samples.front().time_s) / static_cast<double>(n - 1);
    return samples.back().time_s + spacing;
  }

  void validate() const {
    if (samples.empty()) throw ValidationError("trace '" + bs_id + "': no samples");
    if (samples.front().time_s != 0.0) {
      throw ValidationError("trace '" + bs_id + "': first sample must be at time 0");
    }
    bool any_positive = false;
    for (size_t k = 0; k < samples.size(); ++k) {
      const auto& s = samples[k];
      if (!std::isfinite(s.time_s) || !std::isfinite(s.kbps)) {
        throw ValidationError("trace '" + bs_id + "' sample " + std::to_string(k) + ": non-finite value");
      }
      if (s.kbps < 0) {
        throw ValidationError("trace '" + bs_id + "' sample " + std::to_string(k) + ": negative kbps");
      }
      if (k > 0 && s.time_s <= samples[k - 1].time_s) {
        throw ValidationError("trace '" + bs_id + "' sample " + std::to_string(k) +
                              ": time not strictly increasing");
      }
      any_positive = any_positive || s.kbps > 0;
    }
    if (!any_positive) throw ValidationError("trace '" + bs_id + "': all-zero throughput");
  }
};

namespace detail {

// Index of the sample holding at phase tau, tau in [0, duration).
inline size_t hold_index(const ThroughputTrace& tr, double tau) {
  auto it = std::upper_bound(tr.samples.begin(), tr.samples.end(), tau,
                             [](double t, const TraceSample& s) { return t < s.time_s; });
  return static_cast<size_t>(it - tr.samples.begin()) - 1;  // samples[0].time_s == 0 ≤ tau
}

}  // namespace detail

// Instantaneous throughput at absolute time t (zero-order hold + wrap).
inline double throughput_at(const ThroughputTrace& tr, double t) {
  if (t < 0) throw ValidationError("throughput_at: t must be >= 0");
  const double dur = tr.duration_s();
  double tau = std::fmod(t, dur);
  if (tau < 0 || tau >= dur) tau = 0.0;  // fmod edge from rounding
  return tr.samples[detail::hold_index(tr, tau)].kbps;
}

// Seconds needed to fetch `bits` starting at absolute time `start`: the
// smallest dt with integral of throughput over [start, start+dt] == bits.
// Exact piecewise integration, no per-tick discretization.
inline double download_time(const ThroughputTrace& tr, double start, double bits) {
  if (!(bits > 0)) throw ValidationError("download_time: bits must be > 0");
  if (start < 0) throw ValidationError("download_time: start must be >= 0");
  const size_t n = tr.samples.size();
  const double dur = tr.duration_s();

  double cycle_bits = 0.0;
  for (size_t k = 0; k < n; ++k) {
    const double seg_end = (k + 1 < n) ? tr.samples[k + 1].time_s : dur;
    cycle_bits += tr.samples[k].kbps * 1000.0 * (seg_end - tr.samples[k].time_s);
  }

  double elapsed = 0.0;
  double remaining = bits;
  if (remaining > cycle_bits) {  // skip whole wrap periods at once
    const double cycles = std::floor(remaining / cycle_bits);
    elapsed += cycles * dur;
    remaining -= cycles * cycle_bits;
    if (remaining <= 0) return elapsed;
  }

  double tau = std::fmod(start, dur);
  if (tau < 0 || tau >= dur) tau = 0.0;
  size_t idx = detail::hold_index(tr, tau);
  const size_t max_iters = 4 * n + 8;  // remaining < cycle_bits ⇒ finishes within one wrap
  for (size_t iter = 0; iter < max_iters; ++iter) {
    const double seg_end = (idx + 1 < n) ? tr.samples[idx + 1].time_s : dur;
    const double rate_bps = tr.samples[idx].kbps * 1000.0;
    const double span = seg_end - tau;
    if (rate_bps > 0 && remaining <= rate_bps * span) {
      return elapsed + remaining / rate_bps;
    }
    elapsed += span;
    remaining -= rate_bps * span;
    tau = seg_end;
    if (++idx == n) {
      idx = 0;
      tau = 0.0;
    }
  }
  throw StateError("download_time: integration failed to terminate");
}

inline ThroughputTrace load_trace(const std::string& path) {
  const std::string text = read_file(path);
  ThroughputTrace tr;
  tr.bs_id = std::filesystem::path(path).stem().string();
  size_t pos = 0;
  size_t line_no = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line == "time_s,kbps") continue;  // header optional
    const auto cols = split(line, ',');
    if (cols.size() != 2) {
      throw FormatError("trace '" + path + "' line " + std::to_string(line_no) + ": expected 2 columns");
    }
    TraceSample s;
    s.time_s = parse_double(cols[0], "time_s");
    s.kbps = parse_double(cols[1], "kbps");
    tr.samples.push_back(s);
  }
  try {
    tr.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(e.what()) + " (" + path + ")");
  }
  return tr;
}

inline void save_trace(const ThroughputTrace& tr, const std::string& path) {
  std::string out = "time_s,kbps\n";
  for (const auto& s : tr.samples) {
    out += num_str(s.time_s);
    out += ',';
    out += num_str(s.kbps);
    out += '\n';
  }
  write_file(path, out);
}

// Two-state Markov throughput profile: GOOD holds mean_kbps, BAD holds
// low_kbps; every dwell_s seconds the state flips with probability p_drop.
struct SynthProfile {
  double mean_kbps = 20000.0;
  double low_kbps = 2000.0;
  double p_drop = 0.2;
  double dwell_s = 4.0;

  void validate() const {
    if (!(mean_kbps > low_kbps)) throw ValidationError("synth profile: mean_kbps must exceed low_kbps");
    if (low_kbps < 0) throw ValidationError("synth profile: low_kbps must be >= 0");
    if (p_drop < 0 || p_drop > 1) throw ValidationError("synth profile: p_drop must be in [0, 1]");
    if (!(dwell_s >= 1)) throw ValidationError("synth profile: dwell_s must be >= 1");
  }
};

// 1 s granularity, ±10% multiplicative uniform jitter, starts in GOOD.
// Per sample the jitter draw comes first, then the flip draw at dwell
// boundaries, so traces are bit-reproducible for a fixed seed.
inline ThroughputTrace synth_trace(const SynthProfile& profile, double duration_s, uint64_t seed) {
  profile.validate();
  if (!(duration_s >= 1)) throw ValidationError("synth_trace: duration_s must be >= 1");
  Rng rng(seed);
  ThroughputTrace tr;
  tr.bs_id = "synth";
  const int n = static_cast<int>(std::ceil(duration_s));
  const int dwell = std::max(1, static_cast<int>(std::llround(profile.dwell_s)));
  bool good = true;
  int in_state = dwell;
  for (int t = 0; t < n; ++t) {
    const double base = good ? profile.mean_kbps : profile.low_kbps;
    tr.samples.push_back({static_cast<double>(t), base * (1.0 + rng.uniform(-0.1, 0.1))});
    if (--in_state == 0) {
      if (rng.chance(profile.p_drop)) good = !good;
      in_state = dwell;
    }
  }
  tr.validate();
  return tr;
}

// MBS + UAV trace pair sharing a filename suffix.
struct TracePair {
  std::string pair_id;
  ThroughputTrace mbs;
  ThroughputTrace uav;
};

// Loads a directory of "mbs_<suffix>.csv" / "uav_<suffix>.csv" files and
// pairs them by suffix, sorted by suffix for a stable episode order.
inline std::vector<TracePair> load_trace_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ConfigError("trace directory not found: " + dir);
  std::map<std::string, TracePair> by_suffix;
  std::map<std::string, std::pair<bool, bool>> seen;  // suffix -> (mbs?, uav?)
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    const std::string stem = entry.path().stem().string();
    bool is_mbs = stem.rfind("mbs_", 0) == 0;
    bool is_uav = stem.rfind("uav_", 0) == 0;
    if (!is_mbs && !is_uav) continue;
    const std::string suffix = stem.substr(4);
    auto& pair = by_suffix[suffix];
    pair.pair_id = suffix;
    if (is_mbs) {
      pair.mbs = load_trace(entry.path().string());
      seen[suffix].first = true;
    } else {
      pair.uav = load_trace(entry.path().string());
      seen[suffix].second = true;
    }
  }
  if (by_suffix.empty()) throw ConfigError("no mbs_*/uav_* trace pairs in: " + dir);
  std::vector<TracePair> pairs;
  for (auto& [suffix, pair] : by_suffix) {
    const auto [has_mbs, has_uav] = seen[suffix];
    if (!has_mbs || !has_uav) {
      throw ConfigError("trace suffix '" + suffix + "' in " + dir + " is missing its " +
                        (has_mbs ? std::string("uav") : std::string("mbs")) + " file");
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace layersim

#endif  // LAYERSIM_TRACE_HPP_
