// SPDX-License-Identifier: Apache-2.0

#ifndef LAYERSIM_MANIFEST_HPP_
#define LAYERSIM_MANIFEST_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layersim/errors.hpp"
#include "layersim/rng.hpp"
#include "layersim/util.hpp"

namespace layersim {

// Per-segment payload description for one layer.
struct SegmentInfo {
  int64_t bits = 0;      // segment size in bits
  double psnr_db = 0.0;  // delivered quality when this is the top played layer
};

struct LayerTrack {
  std::string layer_id;
  int qp = 0;  // quantization parameter, [0, 51]
  std::vector<SegmentInfo> segments;
};

// Layered per-segment video description. Layer 0 is the base layer; every
// higher layer enhances it. Immutable after load; safe to share across
// concurrent simulations.
struct VideoManifest {
  std::string video_id;
  double segment_duration_s = 0.0;
  int num_segments = 0;
  std::vector<LayerTrack> layers;

  int num_layers() const { return static_cast<int>(layers.size()); }

  void validate() const {
    if (num_segments < 1) throw ValidationError("manifest '" + video_id + "': num_segments must be >= 1");
    if (!(segment_duration_s > 0)) {
      throw ValidationError("manifest '" + video_id + "': segment_duration_s must be > 0");
    }
    if (layers.empty()) throw ValidationError("manifest '" + video_id + "': needs at least one layer");
    for (const auto& layer : layers) {
      if (layer.qp < 0 || layer.qp > 51) {
        throw ValidationError("layer '" + layer.layer_id + "': qp out of range [0, 51]");
      }
      if (layer.segments.empty()) throw ValidationError("layer '" + layer.layer_id + "': segments empty");
      if (static_cast<int>(layer.segments.size()) != num_segments) {
        throw ValidationError("layer '" + layer.layer_id + "': has " +
                              std::to_string(layer.segments.size()) + " segments, manifest declares " +
                              std::to_string(num_segments));
      }
      for (size_t k = 0; k < layer.segments.size(); ++k) {
        const auto& s = layer.segments[k];
        if (s.bits <= 0) {
          throw ValidationError("layer '" + layer.layer_id + "' segment " + std::to_string(k) +
                                ": bits must be > 0");
        }
        if (!std::isfinite(s.psnr_db) || s.psnr_db <= 0) {
          throw ValidationError("layer '" + layer.layer_id + "' segment " + std::to_string(k) +
                                ": psnr_db must be finite and > 0");
        }
      }
    }
  }

  const SegmentInfo& segment(int layer, int idx) const {
    if (layer < 0 || layer >= num_layers()) {
      throw std::out_of_range("layer index " + std::to_string(layer) + " out of range (manifest has " +
                              std::to_string(num_layers()) + " layers)");
    }
    if (idx < 0 || idx >= num_segments) {
      throw std::out_of_range("segment index " + std::to_string(idx) + " out of range (manifest has " +
                              std::to_string(num_segments) + " segments)");
    }
    return layers[layer].segments[idx];
  }

  int64_t segment_bits(int layer, int idx) const { return segment(layer, idx).bits; }
  double segment_psnr(int layer, int idx) const { return segment(layer, idx).psnr_db; }
};

// PSNR of an 8-bit video signal from its mean squared error. Used when
// ingesting (bits, MSE) datasets into manifests.
inline double psnr_from_mse(double mse) {
  if (!(mse > 0)) throw ValidationError("mse must be > 0");
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

inline VideoManifest manifest_from_json(const nlohmann::json& j) {
  VideoManifest m;
  try {
    m.video_id = j.at("video_id").get<std::string>();
    m.segment_duration_s = j.at("segment_duration_s").get<double>();
    m.num_segments = j.at("num_segments").get<int>();
    for (const auto& jl : j.at("layers")) {
      LayerTrack layer;
      layer.layer_id = jl.at("layer_id").get<std::string>();
      layer.qp = jl.at("qp").get<int>();
      for (const auto& js : jl.at("segments")) {
        SegmentInfo s;
        s.bits = js.at("bits").get<int64_t>();
        s.psnr_db = js.at("psnr_db").get<double>();
        layer.segments.push_back(s);
      }
      m.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest schema error: ") + e.what());
  }
  m.validate();
  return m;
}

inline nlohmann::json manifest_to_json(const VideoManifest& m) {
  nlohmann::json j;
  j["video_id"] = m.video_id;
  j["segment_duration_s"] = m.segment_duration_s;
  j["num_segments"] = m.num_segments;
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : m.layers) {
    nlohmann::json jl;
    jl["layer_id"] = layer.layer_id;
    jl["qp"] = layer.qp;
    jl["segments"] = nlohmann::json::array();
    for (const auto& s : layer.segments) {
      jl["segments"].push_back({{"bits", s.bits}, {"psnr_db", s.psnr_db}});
    }
    j["layers"].push_back(std::move(jl));
  }
  return j;
}

inline VideoManifest load_manifest(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("manifest '" + path + "': " + e.what());
  }
  return manifest_from_json(j);
}

inline void save_manifest(const VideoManifest& m, const std::string& path) {
  write_file(path, manifest_to_json(m).dump(2) + "\n");
}

// Synthetic two-layer manifest for tests and self-contained experiments.
// BL segments draw ~U[0.5, 1.5] Mbit with PSNR ~U[30, 34] dB; EL segments
// are 3-6x the BL size with PSNR ~U[40, 46] dB, mimicking a QP 35 vs QP 15
// encode gap. Draw order per segment: bl_bits, el_factor, bl_psnr, el_psnr.
inline VideoManifest synth_manifest(int num_segments, double segment_duration_s, uint64_t seed,
                                    const std::string& video_id = "synth") {
  if (num_segments < 1) throw ValidationError("synth_manifest: num_segments must be >= 1");
  Rng rng(seed);
  VideoManifest m;
  m.video_id = video_id;
  m.segment_duration_s = segment_duration_s;
  m.num_segments = num_segments;
  LayerTrack bl{"bl", 35, {}};
  LayerTrack el{"el", 15, {}};
  for (int k = 0; k < num_segments; ++k) {
    const double bl_bits = rng.uniform(0.5e6, 1.5e6);
    const double el_factor = rng.uniform(3.0, 6.0);
    const double bl_psnr = rng.uniform(30.0, 34.0);
    const double el_psnr = rng.uniform(40.0, 46.0);
    bl.segments.push_back({static_cast<int64_t>(bl_bits), bl_psnr});
    el.segments.push_back({static_cast<int64_t>(bl_bits * el_factor), el_psnr});
  }
  m.layers = {std::move(bl), std::move(el)};
  m.validate();
  return m;
}

}  // namespace layersim

#endif  // LAYERSIM_MANIFEST_HPP_
