// SPDX-License-Identifier: Apache-2.0

#ifndef LAYERSIM_GRADCHECK_HPP_
#define LAYERSIM_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "layersim/net.hpp"
#include "layersim/ppo.hpp"
#include "layersim/rng.hpp"

namespace layersim {

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  int cases = 0;
  bool pass = false;
};

namespace detail {

// Central finite differences over every parameter.
template <typename LossFn>
std::vector<double> fd_gradient(Net& net, LossFn&& loss, double h = 1e-5) {
  std::vector<double> g(net.params.size());
  for (size_t k = 0; k < net.params.size(); ++k) {
    const double p = net.params[k];
    net.params[k] = p + h;
    const double up = loss(net);
    net.params[k] = p - h;
    const double dn = loss(net);
    net.params[k] = p;
    g[k] = (up - dn) / (2.0 * h);
  }
  return g;
}

// Componentwise |a-b| / max(1, |a|, |b|): relative for large gradients,
// absolute near zero where FD noise dominates any true ratio.
inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    const double denom = std::max({1.0, std::fabs(a[k]), std::fabs(b[k])});
    worst = std::max(worst, std::fabs(a[k] - b[k]) / denom);
  }
  return worst;
}

inline std::vector<double> random_features(Rng& rng, int n) {
  std::vector<double> x(static_cast<size_t>(n));
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

}  // namespace detail

// Gradient of the raw value output.
inline GradCheckResult gradcheck_value_output(uint64_t seed, int cases) {
  GradCheckResult res{"value_output", 0.0, 1e-6, cases, false};
  Rng rng(seed);
  for (int c = 0; c < cases; ++c) {
    Net net = Net::init({{6, 8, 1}, OutputHead::kValue}, rng.next_u64());
    const auto x = detail::random_features(rng, 6);
    const auto tr = net.forward_trace(x);
    const auto analytic = net.backward(tr, {1.0});
    const auto fd = detail::fd_gradient(net, [&](Net& n) { return n.value(x); });
    res.max_rel_err = std::max(res.max_rel_err, detail::max_rel_err(analytic, fd));
  }
  res.pass = res.max_rel_err < res.tolerance;
  return res;
}

// Gradient of log pi(a|x) through the softmax head.
inline GradCheckResult gradcheck_policy_logprob(uint64_t seed, int cases) {
  GradCheckResult res{"policy_logprob", 0.0, 1e-6, cases, false};
  Rng rng(seed);
  for (int c = 0; c < cases; ++c) {
    Net net = Net::init({{6, 8, 2}, OutputHead::kPolicy}, rng.next_u64());
    const auto x = detail::random_features(rng, 6);
    const int a = static_cast<int>(rng.below(2));
    const auto tr = net.forward_trace(x);
    const auto analytic = net.backward(tr, logprob_grad_logits(tr.out, a));
    const auto fd = detail::fd_gradient(
        net, [&](Net& n) { return std::log(n.forward(x)[static_cast<size_t>(a)]); });
    res.max_rel_err = std::max(res.max_rel_err, detail::max_rel_err(analytic, fd));
  }
  res.pass = res.max_rel_err < res.tolerance;
  return res;
}

// Gradient of the policy entropy.
inline GradCheckResult gradcheck_entropy(uint64_t seed, int cases) {
  GradCheckResult res{"policy_entropy", 0.0, 1e-6, cases, false};
  Rng rng(seed);
  for (int c = 0; c < cases; ++c) {
    Net net = Net::init({{6, 8, 2}, OutputHead::kPolicy}, rng.next_u64());
    const auto x = detail::random_features(rng, 6);
    const auto tr = net.forward_trace(x);
    const auto analytic = net.backward(tr, entropy_grad_logits(tr.out));
    const auto fd = detail::fd_gradient(net, [&](Net& n) { return entropy(n.forward(x)); });
    res.max_rel_err = std::max(res.max_rel_err, detail::max_rel_err(analytic, fd));
  }
  res.pass = res.max_rel_err < res.tolerance;
  return res;
}

// Gradient of the squared value-target error.
inline GradCheckResult gradcheck_value_loss(uint64_t seed, int cases) {
  GradCheckResult res{"value_loss", 0.0, 1e-6, cases, false};
  Rng rng(seed);
  for (int c = 0; c < cases; ++c) {
    Net net = Net::init({{6, 8, 1}, OutputHead::kValue}, rng.next_u64());
    const auto x = detail::random_features(rng, 6);
    const double target = rng.uniform(-2.0, 2.0);
    const auto tr = net.forward_trace(x);
    const auto analytic = net.backward(tr, {2.0 * (tr.out[0] - target)});
    const auto fd = detail::fd_gradient(net, [&](Net& n) {
      const double e = n.value(x) - target;
      return e * e;
    });
    res.max_rel_err = std::max(res.max_rel_err, detail::max_rel_err(analytic, fd));
  }
  res.pass = res.max_rel_err < res.tolerance;
  return res;
}

// Gradient of the full minibatch surrogate: mean clipped objective plus
// entropy bonus. Samples sitting within 1e-2 of a clip kink (where the
// objective is not differentiable) are re-rolled.
inline GradCheckResult gradcheck_surrogate(uint64_t seed, int cases) {
  GradCheckResult res{"clipped_surrogate", 0.0, 1e-4, cases, false};
  Rng rng(seed);
  const double eps = 0.2;
  const double ent_coef = 0.01;
  for (int c = 0; c < cases; ++c) {
    Net net = Net::init({{6, 8, 2}, OutputHead::kPolicy}, rng.next_u64());
    const int batch = 4;
    std::vector<std::vector<double>> xs;
    std::vector<int> actions;
    std::vector<double> logp_old;
    std::vector<double> adv;
    for (int b = 0; b < batch; ++b) {
      for (int attempt = 0; attempt < 100; ++attempt) {
        auto x = detail::random_features(rng, 6);
        const int a = static_cast<int>(rng.below(2));
        const auto probs = net.forward(x);
        const double lpo = std::log(probs[static_cast<size_t>(a)]) + rng.uniform(-0.3, 0.3);
        const double aval = rng.uniform(-2.0, 2.0);
        const double ratio = prob_ratio(std::log(probs[static_cast<size_t>(a)]), lpo);
        const bool near_kink = std::fabs(ratio - (1.0 - eps)) < 1e-2 ||
                               std::fabs(ratio - (1.0 + eps)) < 1e-2 || std::fabs(aval) < 0.05;
        if (near_kink) continue;
        xs.push_back(std::move(x));
        actions.push_back(a);
        logp_old.push_back(lpo);
        adv.push_back(aval);
        break;
      }
    }
    if (static_cast<int>(xs.size()) < batch) continue;  // could not find clean samples

    const auto loss = [&](Net& n) {
      double total = 0.0;
      for (int b = 0; b < batch; ++b) {
        const auto probs = n.forward(xs[static_cast<size_t>(b)]);
        const double lp = std::log(probs[static_cast<size_t>(actions[static_cast<size_t>(b)])]);
        const double ratio = prob_ratio(lp, logp_old[static_cast<size_t>(b)]);
        total += clipped_objective(ratio, adv[static_cast<size_t>(b)], eps) + ent_coef * entropy(probs);
      }
      return total / batch;
    };

    std::vector<double> analytic(net.params.size(), 0.0);
    for (int b = 0; b < batch; ++b) {
      const auto tr = net.forward_trace(xs[static_cast<size_t>(b)]);
      const int a = actions[static_cast<size_t>(b)];
      const double lp = std::log(tr.out[static_cast<size_t>(a)]);
      const double ratio = prob_ratio(lp, logp_old[static_cast<size_t>(b)]);
      const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
      const double aval = adv[static_cast<size_t>(b)];
      const double dobj_dlogp = (ratio * aval <= clipped * aval) ? aval * ratio : 0.0;
      auto dlogits = logprob_grad_logits(tr.out, a);
      for (double& g : dlogits) g *= dobj_dlogp;
      const auto hg = entropy_grad_logits(tr.out);
      for (size_t z = 0; z < dlogits.size(); ++z) dlogits[z] += ent_coef * hg[z];
      const auto g = net.backward(tr, dlogits);
      for (size_t z = 0; z < analytic.size(); ++z) analytic[z] += g[z] / batch;
    }
    const auto fd = detail::fd_gradient(net, loss);
    res.max_rel_err = std::max(res.max_rel_err, detail::max_rel_err(analytic, fd));
  }
  res.pass = res.max_rel_err < res.tolerance;
  return res;
}

inline std::vector<GradCheckResult> run_gradcheck(uint64_t seed, int cases_per_suite = 20) {
  return {gradcheck_value_output(Rng::derive(seed, 1), cases_per_suite),
          gradcheck_policy_logprob(Rng::derive(seed, 2), cases_per_suite),
          gradcheck_entropy(Rng::derive(seed, 3), cases_per_suite),
          gradcheck_value_loss(Rng::derive(seed, 4), cases_per_suite),
          gradcheck_surrogate(Rng::derive(seed, 5), cases_per_suite)};
}

}  // namespace layersim

#endif  // LAYERSIM_GRADCHECK_HPP_
