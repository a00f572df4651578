// SPDX-License-Identifier: Apache-2.0

#ifndef LAYERSIM_NET_HPP_
#define LAYERSIM_NET_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layersim/errors.hpp"
#include "layersim/rng.hpp"

namespace layersim {

enum class OutputHead { kPolicy, kValue };

// Dense feed-forward shape: tanh hidden layers, then either a softmax
// (policy) or a raw scalar (value) on the last layer.
struct NetSpec {
  std::vector<int> layer_sizes;
  OutputHead head = OutputHead::kValue;

  void validate() const {
    if (layer_sizes.size() < 2) throw ValidationError("net spec: need at least input and output layers");
    for (int s : layer_sizes) {
      if (s < 1) throw ValidationError("net spec: layer sizes must be >= 1");
    }
    if (head == OutputHead::kValue && layer_sizes.back() != 1) {
      throw ValidationError("net spec: value head needs output size 1");
    }
    if (head == OutputHead::kPolicy && layer_sizes.back() < 2) {
      throw ValidationError("net spec: policy head needs at least 2 outputs");
    }
  }

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }

  // Flat layout: [W0 row-major (out x in), b0, W1, b1, ...].
  size_t param_count() const {
    size_t n = 0;
    for (size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
      n += static_cast<size_t>(layer_sizes[l + 1]) * static_cast<size_t>(layer_sizes[l]);
      n += static_cast<size_t>(layer_sizes[l + 1]);
    }
    return n;
  }
};

inline std::vector<double> softmax(const std::vector<double>& z) {
  double zmax = z[0];
  for (double v : z) zmax = std::max(zmax, v);
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (size_t k = 0; k < z.size(); ++k) {
    p[k] = std::exp(z[k] - zmax);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

inline double entropy(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0) h -= p * std::log(p);
  }
  return h;
}

// d log p[a] / d logits.
inline std::vector<double> logprob_grad_logits(const std::vector<double>& probs, int a) {
  std::vector<double> g(probs.size());
  for (size_t k = 0; k < probs.size(); ++k) g[k] = (static_cast<int>(k) == a ? 1.0 : 0.0) - probs[k];
  return g;
}

// d entropy / d logits = -p_j (log p_j + H).
inline std::vector<double> entropy_grad_logits(const std::vector<double>& probs) {
  const double h = entropy(probs);
  std::vector<double> g(probs.size());
  for (size_t k = 0; k < probs.size(); ++k) g[k] = -probs[k] * (std::log(probs[k]) + h);
  return g;
}

inline int argmax(const std::vector<double>& v) {
  int best = 0;
  for (size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[best]) best = static_cast<int>(k);
  }
  return best;
}

// Network with a flat 64-bit parameter vector and exact analytic gradients.
// Pure value type: copy to clone, arithmetic only through forward/backward
// and axpy.
struct Net {
  NetSpec spec;
  std::vector<double> params;

  // Captured activations of one forward pass, consumed by backward().
  struct Trace {
    std::vector<std::vector<double>> acts;  // acts[0] = input, then post-tanh per hidden layer
    std::vector<double> logits;             // raw last-layer output
    std::vector<double> out;                // softmax probs (policy) or logits (value)
  };

  // Fan-in scaled uniform init: weights U(-1/sqrt(in), 1/sqrt(in)) drawn in
  // flat-layout order, biases zero. Fully determined by the seed.
  static Net init(NetSpec spec, uint64_t seed) {
    spec.validate();
    Net net;
    net.spec = spec;
    net.params.assign(spec.param_count(), 0.0);
    Rng rng(seed);
    size_t off = 0;
    for (size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
      const int in = spec.layer_sizes[l];
      const int out = spec.layer_sizes[l + 1];
      const double scale = 1.0 / std::sqrt(static_cast<double>(in));
      for (int k = 0; k < out * in; ++k) net.params[off + static_cast<size_t>(k)] = rng.uniform(-scale, scale);
      off += static_cast<size_t>(out) * static_cast<size_t>(in) + static_cast<size_t>(out);
    }
    return net;
  }

  Trace forward_trace(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != spec.input_size()) {
      throw ValidationError("net forward: input length " + std::to_string(x.size()) + ", spec expects " +
                            std::to_string(spec.input_size()));
    }
    if (params.size() != spec.param_count()) {
      throw ValidationError("net forward: parameter vector length does not match spec");
    }
    Trace tr;
    tr.acts.push_back(x);
    size_t off = 0;
    const size_t n_layers = spec.layer_sizes.size();
    for (size_t l = 0; l + 1 < n_layers; ++l) {
      const int in = spec.layer_sizes[l];
      const int out = spec.layer_sizes[l + 1];
      const std::vector<double>& a = tr.acts.back();
      std::vector<double> z(static_cast<size_t>(out));
      for (int o = 0; o < out; ++o) {
        double s = params[off + static_cast<size_t>(out) * static_cast<size_t>(in) + static_cast<size_t>(o)];
        const size_t row = off + static_cast<size_t>(o) * static_cast<size_t>(in);
        for (int i = 0; i < in; ++i) s += params[row + static_cast<size_t>(i)] * a[static_cast<size_t>(i)];
        z[static_cast<size_t>(o)] = s;
      }
      off += static_cast<size_t>(out) * static_cast<size_t>(in) + static_cast<size_t>(out);
      if (l + 2 < n_layers) {
        for (double& v : z) v = std::tanh(v);
        tr.acts.push_back(std::move(z));
      } else {
        tr.logits = std::move(z);
      }
    }
    tr.out = (spec.head == OutputHead::kPolicy) ? softmax(tr.logits) : tr.logits;
    return tr;
  }

  std::vector<double> forward(const std::vector<double>& x) const { return forward_trace(x).out; }

  double value(const std::vector<double>& x) const { return forward_trace(x).out[0]; }

  // Gradient of a scalar loss wrt params, given dL/d(logits) from the
  // caller (softmax composition is the caller's concern; see the
  // *_grad_logits helpers).
  std::vector<double> backward(const Trace& tr, const std::vector<double>& dlogits) const {
    if (dlogits.size() != tr.logits.size()) {
      throw ValidationError("net backward: upstream gradient length mismatch");
    }
    std::vector<double> grad(params.size(), 0.0);
    std::vector<double> dz = dlogits;
    // Offsets of each layer block, walked backwards.
    const size_t n_layers = spec.layer_sizes.size();
    std::vector<size_t> offsets(n_layers - 1);
    size_t off = 0;
    for (size_t l = 0; l + 1 < n_layers; ++l) {
      offsets[l] = off;
      off += static_cast<size_t>(spec.layer_sizes[l + 1]) * static_cast<size_t>(spec.layer_sizes[l]) +
             static_cast<size_t>(spec.layer_sizes[l + 1]);
    }
    for (size_t l = n_layers - 1; l-- > 0;) {
      const int in = spec.layer_sizes[l];
      const int out = spec.layer_sizes[l + 1];
      const std::vector<double>& a = tr.acts[l];
      const size_t base = offsets[l];
      const size_t bias_base = base + static_cast<size_t>(out) * static_cast<size_t>(in);
      std::vector<double> da(static_cast<size_t>(in), 0.0);
      for (int o = 0; o < out; ++o) {
        const double g = dz[static_cast<size_t>(o)];
        grad[bias_base + static_cast<size_t>(o)] += g;
        const size_t row = base + static_cast<size_t>(o) * static_cast<size_t>(in);
        for (int i = 0; i < in; ++i) {
          grad[row + static_cast<size_t>(i)] += g * a[static_cast<size_t>(i)];
          da[static_cast<size_t>(i)] += g * params[row + static_cast<size_t>(i)];
        }
      }
      if (l > 0) {
        const std::vector<double>& act = tr.acts[l];  // post-tanh of layer l
        dz.assign(act.size(), 0.0);
        for (size_t i = 0; i < act.size(); ++i) dz[i] = da[i] * (1.0 - act[i] * act[i]);
      }
    }
    return grad;
  }

  // params += alpha * v.
  void axpy(double alpha, const std::vector<double>& v) {
    if (v.size() != params.size()) throw ValidationError("net axpy: length mismatch");
    for (size_t k = 0; k < params.size(); ++k) params[k] += alpha * v[k];
  }
};

inline nlohmann::json net_to_json(const Net& net) {
  nlohmann::json j;
  j["spec"]["layer_sizes"] = net.spec.layer_sizes;
  j["spec"]["head"] = net.spec.head == OutputHead::kPolicy ? "policy" : "value";
  j["params"] = net.params;
  return j;
}

inline Net net_from_json(const nlohmann::json& j) {
  Net net;
  try {
    net.spec.layer_sizes = j.at("spec").at("layer_sizes").get<std::vector<int>>();
    const std::string head = j.at("spec").at("head").get<std::string>();
    if (head == "policy") {
      net.spec.head = OutputHead::kPolicy;
    } else if (head == "value") {
      net.spec.head = OutputHead::kValue;
    } else {
      throw FormatError("net: unknown head '" + head + "'");
    }
    net.params = j.at("params").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("net schema error: ") + e.what());
  }
  net.spec.validate();
  if (net.params.size() != net.spec.param_count()) {
    throw ValidationError("net: params length " + std::to_string(net.params.size()) +
                          " does not match spec (" + std::to_string(net.spec.param_count()) + ")");
  }
  return net;
}

}  // namespace layersim

#endif  // LAYERSIM_NET_HPP_
