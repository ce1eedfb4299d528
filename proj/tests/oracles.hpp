// Copyright 2026 The UNSG Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Exact enumeration oracles for the optimizer tests and the acceptance
// binary. Everything here works on enumerated action lists and explicit
// prefix walks; none of it calls the samplers or estimators under test.

#ifndef UNSG_TESTS_ORACLES_HPP_
#define UNSG_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "unsg/action_tree.hpp"
#include "unsg/game.hpp"
#include "unsg/policy.hpp"

namespace unsg::oracle {

// Probability of every enumerated action under the per-step mixture
// (1 - eps) * softmax + eps * uniform over valid children, computed from
// full-width masked conditionals along each action's slot sequence.
template <class Policy>
std::vector<double> leaf_probs(const Policy& policy, const std::vector<typename Policy::Action>& actions, double eps) {
  const auto& tree = policy.tree();
  std::vector<double> out;
  out.reserve(actions.size());
  for (const auto& a : actions) {
    auto h = tree.root();
    double prob = 1.0;
    for (int slot : tree.slots_of(a)) {
      ActionMask mask = tree.mask(h);
      std::vector<double> cond = conditional_distribution(policy, h, mask);
      const double k = mask.count();
      prob *= k == 1 ? 1.0 : (1.0 - eps) * cond[slot] + eps / k;
      tree.advance(h, slot);
    }
    out.push_back(prob);
  }
  return out;
}

// Law of the alternative action given the first one.
inline std::vector<double> pruned_given(const std::vector<double>& mixed, std::size_t first) {
  std::vector<double> out(mixed);
  out[first] = 0.0;
  double z = 0.0;
  for (double v : out) z += v;
  for (double& v : out) v /= z;
  return out;
}

// Marginal law of the alternative when first ~ pure.
inline std::vector<double> pruned_marginal(const std::vector<double>& pure, const std::vector<double>& mixed) {
  std::vector<double> out(pure.size(), 0.0);
  for (std::size_t f = 0; f < pure.size(); ++f) {
    auto cond = pruned_given(mixed, f);
    for (std::size_t a = 0; a < pure.size(); ++a) out[a] += pure[f] * cond[a];
  }
  return out;
}

struct PlayerView {
  std::vector<double> pure;   // x
  std::vector<double> mixed;  // x'
  std::vector<double> field;  // F(a) = -E[payoff] + tau log x(a)
};

// F for both players against the opponent's pure policy.
inline std::pair<std::vector<double>, std::vector<double>> fields(const Eigen::MatrixXd& payoff,
                                                                  const std::vector<double>& x,
                                                                  const std::vector<double>& y, double tau) {
  std::vector<double> fa(x.size()), fd(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double u = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) u += payoff(i, j) * y[j];
    fa[i] = -u + tau * std::log(x[i]);
  }
  for (std::size_t j = 0; j < y.size(); ++j) {
    double u = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) u -= payoff(i, j) * x[i];
    fd[j] = -u + tau * std::log(y[j]);
  }
  return {fa, fd};
}

// The NAL value sum_a x(a) F(a) - sum_a xhat(a) F(a) for one player.
inline double nal(const std::vector<double>& x, const std::vector<double>& xhat, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) s += (x[a] - xhat[a]) * f[a];
  return s;
}

// Expected per-sample loss estimate for one player when v is the batch mean
// of r (self included): (1 - 1/S) Cov(r, x(alt)/p).
inline double literal_estimator_mean(const PlayerView& p, int batch, bool prune) {
  const std::size_t n = p.pure.size();
  double e_rw = 0.0, e_w = 0.0, e_r = 0.0;
  if (prune) {
    auto xhat = pruned_marginal(p.pure, p.mixed);
    for (std::size_t a = 0; a < n; ++a) {
      e_rw += p.pure[a] * (1.0 - p.pure[a]) * p.field[a];
      e_w += p.pure[a] * (1.0 - p.pure[a]);
      e_r += xhat[a] * p.field[a];
    }
  } else {
    for (std::size_t a = 0; a < n; ++a) {
      e_rw += p.pure[a] * p.field[a];
      e_w += p.pure[a];
      e_r += p.mixed[a] * p.field[a];
    }
  }
  return (1.0 - 1.0 / batch) * (e_rw - e_r * e_w);
}

// Regularized equilibrium of a zero-sum matrix game in which each side pays
// tau * sum x log x, by damped mirror descent. Returns the regularized gap
// reached.
struct RegularizedEquilibrium {
  std::vector<double> x;
  std::vector<double> y;
  double gap = 0.0;
};

inline double regularized_gap(const Eigen::MatrixXd& a, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              double tau) {
  // Best responses in the regularized game are softmax(Ay / tau) and
  // softmax(-A^T x / tau); the gap is the sum of the two improvements.
  auto ent_value = [&](const Eigen::VectorXd& payoff, const Eigen::VectorXd& s) {
    return payoff.dot(s) - tau * (s.array() * s.array().log()).sum();
  };
  auto best = [&](const Eigen::VectorXd& payoff) {
    const double m = payoff.maxCoeff();
    return m + tau * std::log((((payoff.array() - m) / tau).exp()).sum());
  };
  const Eigen::VectorXd ay = a * y, atx = -(a.transpose() * x);
  return best(ay) - ent_value(ay, x) + best(atx) - ent_value(atx, y);
}

inline RegularizedEquilibrium regularized_equilibrium(const Eigen::MatrixXd& a, double tau, double target = 1e-14,
                                                      int max_iters = 10000000) {
  Eigen::VectorXd x = Eigen::VectorXd::Constant(a.rows(), 1.0 / a.rows());
  Eigen::VectorXd y = Eigen::VectorXd::Constant(a.cols(), 1.0 / a.cols());
  const double l = a.cwiseAbs().maxCoeff();
  const double step = tau / (l * l + tau * tau);
  double gap = regularized_gap(a, x, y, tau);
  for (int it = 0; it < max_iters && gap > target; ++it) {
    // proximal step: x <- argmax <step * Ay, x> + step * tau * H(x) - KL(x, x_t)
    Eigen::ArrayXd lx = (x.array().log() + step * (a * y).array()) / (1.0 + step * tau);
    Eigen::ArrayXd ly = (y.array().log() - step * (a.transpose() * x).array()) / (1.0 + step * tau);
    x = (lx - lx.maxCoeff()).exp().matrix();
    x /= x.sum();
    y = (ly - ly.maxCoeff()).exp().matrix();
    y /= y.sum();
    if (it % 64 == 0) gap = regularized_gap(a, x, y, tau);
  }
  gap = regularized_gap(a, x, y, tau);
  return {{x.data(), x.data() + x.size()}, {y.data(), y.data() + y.size()}, gap};
}

// Sets tabular logits so the policy realizes the leaf distribution `probs`:
// at each node the conditional of a child is its subtree mass.
template <class Policy>
void load_leaf_distribution(Policy& policy, const std::vector<typename Policy::Action>& actions,
                            const std::vector<double>& probs) {
  const auto& tree = policy.tree();
  std::map<std::vector<int>, std::map<int, double>> mass;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    auto h = tree.root();
    for (int slot : tree.slots_of(actions[i])) {
      mass[history_key(h)][slot] += probs[i];
      tree.advance(h, slot);
    }
  }
  for (std::size_t i = 0; i < actions.size(); ++i) {
    auto h = tree.root();
    for (int slot : tree.slots_of(actions[i])) {
      auto& logits = policy.node_logits(h);
      std::vector<int> slots;
      tree.valid_slots(h, slots);
      const auto& m = mass[history_key(h)];
      for (std::size_t c = 0; c < slots.size(); ++c) logits[c] = std::log(m.at(slots[c]));
      tree.advance(h, slot);
    }
  }
}

// Gradient of sum_k c_k sigma_k with respect to every tree edge probability,
// keyed by (node key, slot): sum over actions through the edge of
// c_k * prod of the other edge probabilities on the path.
template <class Policy>
std::map<std::pair<std::vector<int>, int>, double> edge_gradients(const Policy& policy,
                                                                  const std::vector<typename Policy::Action>& actions,
                                                                  const std::vector<double>& c) {
  const auto& tree = policy.tree();
  std::map<std::pair<std::vector<int>, int>, double> out;
  for (std::size_t k = 0; k < actions.size(); ++k) {
    std::vector<std::pair<std::vector<int>, int>> edges;
    std::vector<double> probs;
    auto h = tree.root();
    for (int slot : tree.slots_of(actions[k])) {
      auto cond = conditional_distribution(policy, h);
      edges.emplace_back(history_key(h), slot);
      probs.push_back(cond[slot]);
      tree.advance(h, slot);
    }
    for (std::size_t j = 0; j < edges.size(); ++j) {
      double others = 1.0;
      for (std::size_t l = 0; l < probs.size(); ++l)
        if (l != j) others *= probs[l];
      out[edges[j]] += c[k] * others;
    }
  }
  return out;
}

// d sigma_k / d logits for a tabular policy, keyed by (node key, compact
// child index): sigma_k * (1[i == chosen] - p_i) along the path.
template <class Policy>
std::map<std::pair<std::vector<int>, int>, double> logit_gradient_of_sum(
    const Policy& policy, const std::vector<typename Policy::Action>& actions, const std::vector<double>& c) {
  const auto& tree = policy.tree();
  std::map<std::pair<std::vector<int>, int>, double> out;
  for (std::size_t k = 0; k < actions.size(); ++k) {
    double sigma = 1.0;
    std::vector<std::pair<std::vector<int>, std::vector<double>>> nodes;
    std::vector<int> chosen;
    auto h = tree.root();
    for (int slot : tree.slots_of(actions[k])) {
      std::vector<int> slots;
      tree.valid_slots(h, slots);
      auto full = conditional_distribution(policy, h);
      std::vector<double> p;
      for (int s : slots) p.push_back(full[s]);
      const int ci = static_cast<int>(std::find(slots.begin(), slots.end(), slot) - slots.begin());
      sigma *= p[ci];
      nodes.emplace_back(history_key(h), p);
      chosen.push_back(ci);
      tree.advance(h, slot);
    }
    for (std::size_t n = 0; n < nodes.size(); ++n)
      for (std::size_t i = 0; i < nodes[n].second.size(); ++i)
        out[{nodes[n].first, static_cast<int>(i)}] +=
            c[k] * sigma * ((static_cast<int>(i) == chosen[n] ? 1.0 : 0.0) - nodes[n].second[i]);
  }
  return out;
}

}  // namespace unsg::oracle

#endif  // UNSG_TESTS_ORACLES_HPP_
