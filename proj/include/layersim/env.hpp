// SPDX-License-Identifier: Apache-2.0

#ifndef LAYERSIM_ENV_HPP_
#define LAYERSIM_ENV_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "layersim/errors.hpp"
#include "layersim/manifest.hpp"
#include "layersim/trace.hpp"
#include "layersim/util.hpp"

namespace layersim {

inline constexpr int kActionBl = 0;  // fetch next base-layer segment from the MBS
inline constexpr int kActionEl = 1;  // fetch an enhancement segment from the UAV
inline constexpr double kPsnrNormDb = 60.0;  // keeps reward_quality in (0, 1]

struct EnvConfig {
  double buffer_capacity_s = 36.0;  // per buffer, both layers
  int history_len = 5;
  int num_buffers = 2;
  int num_layers = 2;
  double startup_threshold_s = 2.0;  // BL seconds buffered before playback starts
  int max_steps = 0;                 // 0 = derived: 10 * num_segments + 100

  void validate() const {
    if (!(buffer_capacity_s > 0)) throw ValidationError("env config: buffer_capacity_s must be > 0");
    if (history_len < 1) throw ValidationError("env config: history_len must be >= 1");
    if (num_buffers != 2 || num_layers != 2) {
      throw ValidationError("env config: this build supports exactly 2 buffers and 2 layers");
    }
    if (startup_threshold_s < 0) throw ValidationError("env config: startup_threshold_s must be >= 0");
    if (max_steps < 0) throw ValidationError("env config: max_steps must be >= 0");
  }
};

// Observable state. Order conventions: buffers and layer indices are
// [BL, EL]; throughput entries are [MBS, UAV]; history rows are most
// recent first.
struct EnvState {
  std::vector<double> q;                // buffer levels, seconds
  std::vector<double> d;                // current throughput, kbps
  std::vector<int> i;                   // last downloaded segment index, -1 = none
  std::vector<std::vector<double>> h;   // past throughputs per BS
  double playhead_s = 0.0;
  double wall_clock_s = 0.0;
  bool stalled = false;
  int num_segments = 0;  // manifest length, so policies can spot BL completion
};

struct StepInfo {
  double delta_t_s = 0.0;   // download time only; overflow waits excluded
  double stall_s = 0.0;
  bool el_discarded = false;
  int segment_idx = -1;     // segment fetched this step, -1 for no-op
};

struct StepOutcome {
  double reward_quality = 0.0;
  double cost_buffer = 0.0;  // stall seconds, >= 0
  double cost_smooth = 0.0;  // 1 iff the EL buffer flipped empty <-> non-empty
  EnvState next_state;
  bool done = false;
  StepInfo info;
};

struct BufferAdvance {
  double q_new = 0.0;
  double stall_s = 0.0;
};

// One-buffer transition: drain delta_t of playback, floor at empty, add one
// segment, cap at q_max. Stall is the drain that found no content.
inline BufferAdvance advance_buffer(double q_prev, double delta_t, double seg_t, double q_max) {
  if (q_prev < 0 || delta_t < 0 || seg_t < 0 || q_max < 0) {
    throw ValidationError("advance_buffer: inputs must be >= 0");
  }
  return {std::min(std::max(q_prev - delta_t, 0.0) + seg_t, q_max), std::max(delta_t - q_prev, 0.0)};
}

struct StateNorms {
  double q_max = 36.0;
  double kbps_scale = 20000.0;
  int num_segments = 1;

  void validate() const {
    if (!(q_max > 0) || !(kbps_scale > 0) || num_segments < 1) {
      throw ValidationError("state norms: q_max, kbps_scale must be > 0 and num_segments >= 1");
    }
  }
};

// Policy features, fixed order: q/q_max (2), d/kbps_scale (2),
// (i+1)/num_segments (2), then history rows MBS first / UAV second, each
// most recent first (2*H). Length 16 with the default config.
inline std::vector<double> encode_state(const EnvState& s, const StateNorms& n) {
  n.validate();
  std::vector<double> f;
  size_t hist = 0;
  for (const auto& row : s.h) hist += row.size();
  f.reserve(s.q.size() + s.d.size() + s.i.size() + hist);
  for (double q : s.q) f.push_back(q / n.q_max);
  for (double d : s.d) f.push_back(d / n.kbps_scale);
  for (int i : s.i) f.push_back(static_cast<double>(i + 1) / static_cast<double>(n.num_segments));
  for (const auto& row : s.h) {
    for (double v : row) f.push_back(v / n.kbps_scale);
  }
  return f;
}

// Dual-buffer streaming session: one download in flight at a time, the
// action picks BL-from-MBS or EL-from-UAV. Playback starts once the BL
// buffer reaches startup_threshold_s (or the BL track completes), pauses
// whenever the BL buffer empties, and nothing drains while paused. The EL
// buffer drains only while its head segment's playback window passes; an
// EL segment arriving after playback entered its window is discarded.
//
// Wall-clock accounting is exhaustive: every second is playback, stall,
// startup wait, or overflow idle, so
//   wall_clock = playhead + stalls + startup_wait + overflow_idle
// holds at every step boundary. Seconds played during an overflow wait are
// booked as overflow idle, not playhead.
//
// Instances are single-threaded; manifests and traces are shared read-only.
class StreamEnv {
 public:
  StreamEnv(const VideoManifest* manifest, const TracePair* traces, EnvConfig config)
      : manifest_(manifest), traces_(traces), cfg_(config) {
    cfg_.validate();
  }

  // Swap sources between episodes (trace/manifest rotation). Takes effect
  // at the next reset.
  void set_sources(const VideoManifest* manifest, const TracePair* traces) {
    manifest_ = manifest;
    traces_ = traces;
  }

  EnvState reset(uint64_t seed) {
    if (manifest_ == nullptr || traces_ == nullptr) {
      throw ConfigError("environment needs a manifest and a trace pair");
    }
    if (traces_->mbs.samples.empty()) throw ConfigError("missing MBS trace");
    if (traces_->uav.samples.empty()) throw ConfigError("missing UAV trace");
    manifest_->validate();
    if (manifest_->num_layers() != cfg_.num_layers) {
      throw ConfigError("manifest has " + std::to_string(manifest_->num_layers()) +
                        " layers, env config expects " + std::to_string(cfg_.num_layers));
    }
    seg_t_ = manifest_->segment_duration_s;
    if (cfg_.buffer_capacity_s < seg_t_) {
      throw ConfigError("buffer_capacity_s smaller than one segment; nothing could ever download");
    }
    if (cfg_.startup_threshold_s > cfg_.buffer_capacity_s - seg_t_) {
      throw ConfigError("startup_threshold_s must leave one segment of headroom below capacity");
    }
    seed_ = seed;
    i0_ = -1;
    i1_ = -1;
    cs_ = 0;
    frac_ = 0.0;
    el_q_.clear();
    wall_ = 0.0;
    playhead_ = 0.0;
    stall_total_ = 0.0;
    startup_wait_ = 0.0;
    overflow_idle_ = 0.0;
    started_ = cfg_.startup_threshold_s <= 0.0;
    done_ = false;
    steps_ = 0;
    d_[0] = throughput_at(traces_->mbs, 0.0);
    d_[1] = throughput_at(traces_->uav, 0.0);
    for (int j = 0; j < 2; ++j) h_[j].assign(static_cast<size_t>(cfg_.history_len), d_[j]);
    return state();
  }

  StepOutcome step(int action) {
    if (done_) throw StateError("step after episode end");
    if (action != kActionBl && action != kActionEl) throw ValidationError("action must be 0 or 1");
    const bool el_empty_before = el_q_.empty();
    const std::array<double, 2> d_step = d_;
    ++steps_;

    StepOutcome out;
    int target = -1;
    bool drain_out = false;
    if (action == kActionBl) {
      if (bl_complete()) {
        drain_out = true;  // nothing left to fetch on this layer: play out and finish
      } else {
        target = i0_ + 1;
      }
    } else {
      const int t = std::max(i1_ + 1, cs_ + 1);  // smallest undownloaded EL past the playhead
      if (t <= i0_) {
        target = t;
      } else if (bl_complete()) {
        drain_out = true;
      }
      // else: zero-duration no-op; the BL fetch this depends on hasn't happened
    }

    if (drain_out) {
      const double rest = q_bl();
      if (rest > 0) {
        consume(rest);
        wall_ += rest;
        playhead_ += rest;
      }
      cs_ = manifest_->num_segments;  // exact end-of-content position
      frac_ = 0.0;
      el_q_.clear();
      done_ = true;
    } else if (target >= 0) {
      const int layer = action;
      const ThroughputTrace& tr = (action == kActionBl) ? traces_->mbs : traces_->uav;
      const double bits = static_cast<double>(manifest_->segment_bits(layer, target));

      const double w = solve_wait(layer, bits, tr);
      if (w > 0) {
        const double q0 = q_bl();
        if (w > q0 + 1e-6) throw StateError("playback cannot free buffer space during overflow wait");
        consume(std::min(w, q0));
        wall_ += w;
        overflow_idle_ += w;
      }

      const double dt = download_time(tr, wall_, bits);
      bool truncated = false;
      if (bl_complete() && started_) {
        const double rest = q_bl();
        if (dt > rest) {
          // Content ends mid-download; the EL would arrive late anyway.
          consume(rest);
          wall_ += rest;
          playhead_ += rest;
          cs_ = manifest_->num_segments;
          frac_ = 0.0;
          el_q_.clear();
          out.info.delta_t_s = rest;
          out.info.el_discarded = true;
          out.info.segment_idx = target;
          done_ = true;
          truncated = true;
        }
      }
      if (!truncated) {
        if (started_) {
          const double q0 = q_bl();
          const double played = std::min(dt, q0);
          consume(played);
          playhead_ += played;
          const double st = dt - played;
          stall_total_ += st;
          out.info.stall_s = st;
          out.cost_buffer = st;
        } else {
          startup_wait_ += dt;
        }
        wall_ += dt;
        out.info.delta_t_s = dt;
        out.info.segment_idx = target;
        if (layer == 0) {
          i0_ = target;
          out.reward_quality = manifest_->segment_psnr(0, target) / kPsnrNormDb;
          if (!started_ && (q_bl() >= cfg_.startup_threshold_s || bl_complete())) started_ = true;
        } else {
          i1_ = target;
          const bool late = cs_ > target || (cs_ == target && frac_ > 0);
          if (late) {
            out.info.el_discarded = true;
          } else {
            el_q_.push_back(target);
            out.reward_quality = manifest_->segment_psnr(1, target) / kPsnrNormDb;
          }
        }
        done_ = bl_complete() && cs_ >= manifest_->num_segments;
      }
    }

    if (steps_ >= max_steps()) done_ = true;
    out.cost_smooth = (el_q_.empty() != el_empty_before) ? 1.0 : 0.0;

    for (int j = 0; j < 2; ++j) {  // history takes this step's throughput, then resample
      auto& row = h_[j];
      row.pop_back();
      row.insert(row.begin(), d_step[j]);
    }
    d_[0] = throughput_at(traces_->mbs, wall_);
    d_[1] = throughput_at(traces_->uav, wall_);

    out.done = done_;
    out.next_state = state();
    return out;
  }

  EnvState state() const {
    EnvState s;
    s.q = {q_bl(), q_el()};
    s.d = {d_[0], d_[1]};
    s.i = {i0_, i1_};
    s.h = {h_[0], h_[1]};
    s.playhead_s = playhead_;
    s.wall_clock_s = wall_;
    s.stalled = started_ && !done_ && q_bl() <= 0.0;
    s.num_segments = manifest_->num_segments;
    return s;
  }

  StateNorms norms(double kbps_scale) const {
    return {cfg_.buffer_capacity_s, kbps_scale, manifest_->num_segments};
  }

  double q_bl() const {
    return std::max(0.0, static_cast<double>(i0_ + 1) * seg_t_ - consumed_s());
  }

  double q_el() const {
    if (el_q_.empty()) return 0.0;
    return static_cast<double>(el_q_.size()) * seg_t_ - (el_q_.front() == cs_ ? frac_ : 0.0);
  }

  bool bl_complete() const { return i0_ == manifest_->num_segments - 1; }
  bool done() const { return done_; }
  bool started() const { return started_; }
  int steps() const { return steps_; }
  double wall_clock_s() const { return wall_; }
  double playhead_s() const { return playhead_; }
  double consumed_s() const { return static_cast<double>(cs_) * seg_t_ + frac_; }
  double total_stall_s() const { return stall_total_; }
  double startup_wait_s() const { return startup_wait_; }
  double overflow_idle_s() const { return overflow_idle_; }
  const EnvConfig& config() const { return cfg_; }
  const VideoManifest& manifest() const { return *manifest_; }

  // wall - (playhead + stalls + startup + idle); 0 up to float error.
  double identity_residual() const {
    return wall_ - (playhead_ + stall_total_ + startup_wait_ + overflow_idle_);
  }

 private:
  int max_steps() const {
    return cfg_.max_steps > 0 ? cfg_.max_steps : 10 * manifest_->num_segments + 100;
  }

  // Advance the consumed position by dt seconds of playback. Caller caps
  // dt at q_bl(); expired EL heads drop as their windows close.
  void consume(double dt) {
    while (dt > 0) {
      const double room = seg_t_ - frac_;
      if (dt < room) {
        frac_ += dt;
        return;
      }
      dt -= room;
      ++cs_;
      frac_ = 0.0;
      while (!el_q_.empty() && el_q_.front() < cs_) el_q_.pop_front();
    }
  }

  // EL buffer level after x more seconds of playback, on scratch state.
  double el_after_play(double x) const {
    int cs = cs_;
    double frac = frac_;
    size_t k = 0;
    while (x > 0) {
      const double room = seg_t_ - frac;
      if (x < room) {
        frac += x;
        break;
      }
      x -= room;
      ++cs;
      frac = 0.0;
      while (k < el_q_.size() && el_q_[k] < cs) ++k;
    }
    const size_t live = el_q_.size() - k;
    if (live == 0) return 0.0;
    return static_cast<double>(live) * seg_t_ - (el_q_[k] == cs ? frac : 0.0);
  }

  // Smallest idle wait w so the target buffer has room for one segment at
  // download completion. Playback keeps draining during the wait and the
  // download itself, and the download start time shifts with w, so the
  // level at completion is monotone in w: bisect on it.
  double solve_wait(int layer, double bits, const ThroughputTrace& tr) const {
    const double cap = cfg_.buffer_capacity_s;
    const double q0 = q_bl();
    const auto level_at_completion = [&](double w) {
      const double dt = download_time(tr, wall_ + w, bits);
      const double played = started_ ? std::min(w + dt, q0) : 0.0;
      return layer == kActionBl ? q0 - played : el_after_play(played);
    };
    if (level_at_completion(0.0) + seg_t_ <= cap + 1e-12) return 0.0;
    if (!started_) throw StateError("buffer full before playback start");
    double lo = 0.0;
    double hi = std::max(seg_t_, q0);
    for (int guard = 0; level_at_completion(hi) + seg_t_ > cap; ++guard) {
      if (guard > 60) throw StateError("overflow wait cannot free buffer space");
      hi *= 2.0;
    }
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (level_at_completion(mid) + seg_t_ > cap) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return hi;
  }

  const VideoManifest* manifest_ = nullptr;
  const TracePair* traces_ = nullptr;
  EnvConfig cfg_;
  double seg_t_ = 0.0;
  uint64_t seed_ = 0;

  int i0_ = -1;  // last downloaded BL index
  int i1_ = -1;  // last downloaded EL index
  int cs_ = 0;   // segment the consumed position sits in
  double frac_ = 0.0;  // seconds consumed inside segment cs_, in [0, seg_t_)
  std::deque<int> el_q_;  // buffered EL segment indices, increasing
  std::array<double, 2> d_ = {0.0, 0.0};
  std::array<std::vector<double>, 2> h_;
  double wall_ = 0.0;
  double playhead_ = 0.0;
  double stall_total_ = 0.0;
  double startup_wait_ = 0.0;
  double overflow_idle_ = 0.0;
  bool started_ = false;
  bool done_ = false;
  int steps_ = 0;
};

// One line of the per-episode log.
struct EpisodeRow {
  int step = 0;
  double wall_clock_s = 0.0;
  int action = 0;
  int layer_idx = -1;  // segment index fetched, -1 for no-op
  double delta_t_s = 0.0;
  double q_bl_s = 0.0;
  double q_el_s = 0.0;
  double stall_s = 0.0;
  double reward_quality = 0.0;
  double cost_buffer = 0.0;
  double cost_smooth = 0.0;
};

inline constexpr const char* kEpisodeCsvHeader =
    "step,wall_clock_s,action,layer_idx,delta_t_s,q_bl_s,q_el_s,stall_s,"
    "reward_quality,cost_buffer,cost_smooth";

inline EpisodeRow episode_row(int step, int action, const StepOutcome& o) {
  EpisodeRow r;
  r.step = step;
  r.wall_clock_s = o.next_state.wall_clock_s;
  r.action = action;
  r.layer_idx = o.info.segment_idx;
  r.delta_t_s = o.info.delta_t_s;
  r.q_bl_s = o.next_state.q[0];
  r.q_el_s = o.next_state.q[1];
  r.stall_s = o.info.stall_s;
  r.reward_quality = o.reward_quality;
  r.cost_buffer = o.cost_buffer;
  r.cost_smooth = o.cost_smooth;
  return r;
}

inline std::string episode_csv(const std::vector<EpisodeRow>& rows) {
  std::string out = kEpisodeCsvHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += num_str(static_cast<long long>(r.step));
    out += ',';
    out += num_str(r.wall_clock_s);
    out += ',';
    out += num_str(static_cast<long long>(r.action));
    out += ',';
    out += num_str(static_cast<long long>(r.layer_idx));
    out += ',';
    out += num_str(r.delta_t_s);
    out += ',';
    out += num_str(r.q_bl_s);
    out += ',';
    out += num_str(r.q_el_s);
    out += ',';
    out += num_str(r.stall_s);
    out += ',';
    out += num_str(r.reward_quality);
    out += ',';
    out += num_str(r.cost_buffer);
    out += ',';
    out += num_str(r.cost_smooth);
    out += '\n';
  }
  return out;
}

inline std::vector<EpisodeRow> parse_episode_csv(const std::string& text) {
  std::vector<EpisodeRow> rows;
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
    if (line_no == 1) {
      if (line != kEpisodeCsvHeader) throw FormatError("episode csv: unexpected header");
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 11) {
      throw FormatError("episode csv line " + std::to_string(line_no) + ": expected 11 columns");
    }
    EpisodeRow r;
    r.step = static_cast<int>(parse_int(cols[0], "step"));
    r.wall_clock_s = parse_double(cols[1], "wall_clock_s");
    r.action = static_cast<int>(parse_int(cols[2], "action"));
    r.layer_idx = static_cast<int>(parse_int(cols[3], "layer_idx"));
    r.delta_t_s = parse_double(cols[4], "delta_t_s");
    r.q_bl_s = parse_double(cols[5], "q_bl_s");
    r.q_el_s = parse_double(cols[6], "q_el_s");
    r.stall_s = parse_double(cols[7], "stall_s");
    r.reward_quality = parse_double(cols[8], "reward_quality");
    r.cost_buffer = parse_double(cols[9], "cost_buffer");
    r.cost_smooth = parse_double(cols[10], "cost_smooth");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace layersim

#endif  // LAYERSIM_ENV_HPP_
