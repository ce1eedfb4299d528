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

// Baselines on enumerated action lists: the flat NAL optimizer and an exact
// double oracle with brute-force best responses and a regret-matching-plus
// restricted solver.

#ifndef UNSG_BASELINES_HPP_
#define UNSG_BASELINES_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "unsg/error.hpp"
#include "unsg/evaluator.hpp"
#include "unsg/game.hpp"
#include "unsg/metrics.hpp"
#include "unsg/policy.hpp"
#include "unsg/rng.hpp"
#include "unsg/tso.hpp"

namespace unsg {

// --- flat NAL ----------------------------------------------------------------

struct FlatHistory {
  int choice = -1;
};

inline std::vector<AttackerAction> enumerate_for(const SecurityGame& g, const AttackerAction*, std::size_t cap) {
  return enumerate_attacker_actions(g.graph(), cap);
}
inline std::vector<DefenderAction> enumerate_for(const SecurityGame& g, const DefenderAction*, std::size_t cap) {
  return enumerate_defender_actions(g.defenders(), cap);
}

// A one-level tree whose leaves are the enumerated actions, so a tabular
// policy on it is a single logit vector and per-step mixing is per-action
// mixing.
template <class ActionT>
class FlatTree {
 public:
  using History = FlatHistory;
  using Action = ActionT;

  explicit FlatTree(const SecurityGame& game, std::size_t cap = kDefaultEnumerationCap)
      : actions_(enumerate_for(game, static_cast<const Action*>(nullptr), cap)) {
    for (std::size_t i = 0; i < actions_.size(); ++i) index_.emplace(actions_[i], static_cast<int>(i));
  }

  const std::vector<Action>& actions() const { return actions_; }
  int mask_width() const { return static_cast<int>(actions_.size()); }
  History root() const { return {}; }
  bool is_leaf(const History& h) const { return h.choice >= 0; }

  void valid_slots(const History& h, std::vector<int>& out) const {
    out.clear();
    if (is_leaf(h)) return;
    out.resize(actions_.size());
    for (std::size_t i = 0; i < actions_.size(); ++i) out[i] = static_cast<int>(i);
  }
  ActionMask mask(const History& h) const {
    std::vector<int> slots;
    valid_slots(h, slots);
    return ActionMask::from_slots(mask_width(), slots);
  }
  void advance(History& h, int slot) const { h.choice = slot; }
  Action to_action(const History& h) const { return actions_.at(h.choice); }
  std::vector<int> slots_of(const Action& a) const {
    auto it = index_.find(a);
    if (it == index_.end()) throw InconsistencyError("action is not in the enumerated list");
    return {it->second};
  }
  int feature_width() const { return 1; }
  void features(const History&, SparseFeatures& out) const { out.assign(1, {0, 1.0}); }

 private:
  std::vector<Action> actions_;
  std::map<Action, int> index_;
};

inline std::vector<int> history_key(const FlatHistory& h) {
  return h.choice < 0 ? std::vector<int>{} : std::vector<int>{h.choice};
}
template <class A>
FlatHistory history_from_key(const std::vector<int>& key, const FlatTree<A>*) {
  return {key.empty() ? -1 : key[0]};
}
inline const char* player_name(const FlatTree<AttackerAction>*) { return "attacker"; }
inline const char* player_name(const FlatTree<DefenderAction>*) { return "defender"; }

using FlatNalTrainer = BasicTsoTrainer<FlatTree<AttackerAction>, FlatTree<DefenderAction>>;

// NAL defaults: no prune step, per-action epsilon mixing.
inline TsoHyperparameters flat_nal_defaults() {
  TsoHyperparameters hp;
  hp.total_iterations = 50000;
  hp.batch_size = 100;
  hp.learning_rate = 1e-4;
  hp.tau = 0.1;
  hp.lr_decay = 0.9;
  hp.tau_decay = 0.9;
  hp.update_percentage = 0.1;
  hp.epsilon = 0.8;
  hp.ablate_prune = true;
  return hp;
}

// Probability vector of a flat policy over its enumerated list.
template <class Tree>
MixedStrategy flat_strategy(const TreePolicy<Tree>& policy) {
  return extract_mixed_strategy(policy, policy.tree().actions());
}

// --- best responses ------------------------------------------------------------

enum class Side { kAttacker, kDefender };

struct BestResponse {
  int index = -1;
  double value = 0.0;  // responder's expected utility
};

// Utility of every own pure action against the opponent mixture.
inline Eigen::VectorXd response_values(const PayoffMatrix& payoff, const MixedStrategy& opponent, Side side) {
  if (side == Side::kAttacker) {
    if (opponent.probabilities.size() != payoff.cols()) throw DimensionMismatchError("defender strategy size");
    return payoff * opponent.probabilities;
  }
  if (opponent.probabilities.size() != payoff.rows()) throw DimensionMismatchError("attacker strategy size");
  return -(payoff.transpose() * opponent.probabilities);
}

// Argmax with ties (within 1e-12) broken toward the lowest index.
inline BestResponse best_response(const PayoffMatrix& payoff, const MixedStrategy& opponent, Side side) {
  const Eigen::VectorXd v = response_values(payoff, opponent, side);
  if (v.size() == 0) throw InstanceMismatchError("no actions to respond with");
  const double top = v.maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] >= top - 1e-12) return {static_cast<int>(i), v[i]};
  return {0, v[0]};
}

// --- restricted solver -----------------------------------------------------------

struct RestrictedSolution {
  MixedStrategy attacker;
  MixedStrategy defender;
  double exploitability = 0.0;
  long long iterations = 0;
  bool converged = false;
};

// Predictive regret matching plus on a zero-sum matrix game (row player
// maximizes), with alternating updates and quadratic averaging weights. Uniform weights
// keep the first uniform iterate in the average at weight 1/T, which alone
// blocks a 1e-6 tolerance inside 1e5 iterations. Stops once the averaged (or
// current) profile's gap is below `tolerance` or after `max_iters`; returns
// the best profile seen.
inline RestrictedSolution solve_restricted(const Eigen::MatrixXd& a, double tolerance = 1e-6,
                                           long long max_iters = 100000) {
  if (!a.allFinite()) throw InfeasibleParametersError("restricted payoff matrix is not finite");
  const Eigen::Index n = a.rows(), m = a.cols();
  if (n == 0 || m == 0) throw InfeasibleParametersError("empty restricted game");
  if (max_iters < 1) throw InfeasibleParametersError("restricted solver needs max_iters >= 1");
  Eigen::VectorXd qx = Eigen::VectorXd::Zero(n), qy = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd x(n), y(m), sx = Eigen::VectorXd::Zero(n), sy = Eigen::VectorXd::Zero(m);
  auto normalize = [](const Eigen::VectorXd& q, Eigen::VectorXd& s) {
    const double z = q.sum();
    if (z > 0) s = q / z;
    else s.setConstant(1.0 / static_cast<double>(q.size()));
  };
  auto gap_of = [&](const Eigen::VectorXd& ax, const Eigen::VectorXd& ay) {
    return std::max(0.0, (a * ay).maxCoeff() - (a.transpose() * ax).minCoeff());
  };
  RestrictedSolution out;
  out.exploitability = std::numeric_limits<double>::infinity();
  auto consider = [&](const Eigen::VectorXd& cx, const Eigen::VectorXd& cy) {
    const double g = gap_of(cx, cy);
    if (g < out.exploitability) {
      out.exploitability = g;
      out.attacker.probabilities = cx;
      out.defender.probabilities = cy;
    }
  };
  // predictions: the last instantaneous regret of each player
  Eigen::VectorXd px = Eigen::VectorXd::Zero(n), py = Eigen::VectorXd::Zero(m);
  normalize(qx, x);
  normalize(qy, y);
  long long t = 0;
  while (t < max_iters) {
    ++t;
    const Eigen::VectorXd ux = a * y;
    px = ux.array() - x.dot(ux);
    qx = (qx + px).cwiseMax(0.0);
    normalize((qx + px).cwiseMax(0.0), x);
    const Eigen::VectorXd uy = -(a.transpose() * x);
    py = uy.array() - y.dot(uy);
    qy = (qy + py).cwiseMax(0.0);
    normalize((qy + py).cwiseMax(0.0), y);
    const double w = static_cast<double>(t) * static_cast<double>(t);
    sx += w * x;
    sy += w * y;
    if (t % 10 == 0 || t == max_iters || t < 10) {
      consider(sx / sx.sum(), sy / sy.sum());
      consider(x, y);
      if (out.exploitability < tolerance) break;
    }
  }
  out.iterations = t;
  out.converged = out.exploitability < tolerance;
  return out;
}

// --- double oracle ---------------------------------------------------------------

struct DoubleOracleOptions {
  int max_iterations = 10000;
  double restricted_tolerance = 1e-6;
  long long restricted_max_iters = 100000;
  // stop once the full-game gap of the restricted equilibrium is this small
  double gap_tolerance = 1e-9;
  long long sample_budget = 0;
  bool record_wallclock = false;
};

struct DoubleOracleResult {
  std::vector<int> attacker_pool;  // indices into the enumerated lists
  std::vector<int> defender_pool;
  MixedStrategy attacker_meta;     // over the pools
  MixedStrategy defender_meta;
  MixedStrategy attacker_full;     // embedded in the full lists
  MixedStrategy defender_full;
  double gap = 0.0;
  int iterations = 0;
  long long samples = 0;
  bool converged = false;
  int restricted_warnings = 0;
};

// Starts from one random action per player. Every iteration solves the
// restricted game, computes both exact best responses against the full lists
// and adds them to the pools. Sample accounting: one per newly queried
// restricted payoff cell, plus |A| x |defender pool| and |D| x |attacker
// pool| for the two best responses.
inline DoubleOracleResult double_oracle(const EnumeratedGame& e, std::uint64_t seed, const DoubleOracleOptions& opt = {},
                                        const MetricsSink& sink = {}) {
  const int na = static_cast<int>(e.attacker_actions.size()), nd = static_cast<int>(e.defender_actions.size());
  if (na == 0 || nd == 0) throw InstanceMismatchError("double oracle needs nonempty action lists");
  std::mt19937_64 rng = make_stream({seed, tag(StreamTag::kDoublePool)});
  DoubleOracleResult r;
  r.attacker_pool.push_back(std::uniform_int_distribution<int>(0, na - 1)(rng));
  r.defender_pool.push_back(std::uniform_int_distribution<int>(0, nd - 1)(rng));
  Eigen::MatrixXd restricted(1, 1);
  restricted(0, 0) = e.payoff(r.attacker_pool[0], r.defender_pool[0]);
  r.samples = 1;
  const auto start = std::chrono::steady_clock::now();
  for (int it = 0; it < opt.max_iterations; ++it) {
    const long long br_cost = static_cast<long long>(na) * static_cast<long long>(r.defender_pool.size()) +
                              static_cast<long long>(nd) * static_cast<long long>(r.attacker_pool.size());
    if (opt.sample_budget > 0 && r.samples + br_cost > opt.sample_budget) break;
    RestrictedSolution sol = solve_restricted(restricted, opt.restricted_tolerance, opt.restricted_max_iters);
    if (!sol.converged) ++r.restricted_warnings;
    r.attacker_meta = sol.attacker;
    r.defender_meta = sol.defender;
    r.attacker_full.probabilities = Eigen::VectorXd::Zero(na);
    r.defender_full.probabilities = Eigen::VectorXd::Zero(nd);
    for (std::size_t i = 0; i < r.attacker_pool.size(); ++i)
      r.attacker_full.probabilities[r.attacker_pool[i]] += sol.attacker.probabilities[static_cast<Eigen::Index>(i)];
    for (std::size_t j = 0; j < r.defender_pool.size(); ++j)
      r.defender_full.probabilities[r.defender_pool[j]] += sol.defender.probabilities[static_cast<Eigen::Index>(j)];
    const BestResponse ba = best_response(e.payoff, r.defender_full, Side::kAttacker);
    const BestResponse bd = best_response(e.payoff, r.attacker_full, Side::kDefender);
    r.samples += br_cost;
    r.gap = std::max(0.0, ba.value + bd.value);
    r.iterations = it + 1;
    MetricsRow row;
    row.step = it;
    row.samples = r.samples;
    row.duality_gap = r.gap;
    if (opt.record_wallclock)
      row.wallclock_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (sink) sink(row);

    const bool new_a = std::find(r.attacker_pool.begin(), r.attacker_pool.end(), ba.index) == r.attacker_pool.end();
    const bool new_d = std::find(r.defender_pool.begin(), r.defender_pool.end(), bd.index) == r.defender_pool.end();
    if (r.gap <= opt.gap_tolerance || (!new_a && !new_d)) {
      r.converged = true;
      break;
    }
    const long long add_cost = (new_a ? static_cast<long long>(r.defender_pool.size()) + (new_d ? 1 : 0) : 0) +
                               (new_d ? static_cast<long long>(r.attacker_pool.size()) : 0);
    if (opt.sample_budget > 0 && r.samples + add_cost > opt.sample_budget) break;
    if (new_a) r.attacker_pool.push_back(ba.index);
    if (new_d) r.defender_pool.push_back(bd.index);
    const Eigen::Index rows = static_cast<Eigen::Index>(r.attacker_pool.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(r.defender_pool.size());
    restricted.conservativeResize(rows, cols);
    if (new_a)
      for (Eigen::Index j = 0; j < cols; ++j) restricted(rows - 1, j) = e.payoff(r.attacker_pool.back(), r.defender_pool[j]);
    if (new_d)
      for (Eigen::Index i = 0; i < rows; ++i) restricted(i, cols - 1) = e.payoff(r.attacker_pool[i], r.defender_pool.back());
    r.samples += add_cost;
  }
  return r;
}

inline nlohmann::json pool_manifest(const EnumeratedGame& e, const DoubleOracleResult& r) {
  nlohmann::json j;
  j["attacker_pool"] = nlohmann::json::array();
  for (std::size_t i = 0; i < r.attacker_pool.size(); ++i)
    j["attacker_pool"].push_back({{"path", e.attacker_actions[r.attacker_pool[i]].path},
                                  {"weight", r.attacker_meta.probabilities.size() > static_cast<Eigen::Index>(i)
                                                 ? r.attacker_meta.probabilities[static_cast<Eigen::Index>(i)]
                                                 : 0.0}});
  j["defender_pool"] = nlohmann::json::array();
  for (std::size_t i = 0; i < r.defender_pool.size(); ++i) {
    nlohmann::json edges = nlohmann::json::array();
    for (const Edge& ed : e.defender_actions[r.defender_pool[i]].edges) edges.push_back({ed.u, ed.v});
    j["defender_pool"].push_back({{"edges", edges},
                                  {"weight", r.defender_meta.probabilities.size() > static_cast<Eigen::Index>(i)
                                                 ? r.defender_meta.probabilities[static_cast<Eigen::Index>(i)]
                                                 : 0.0}});
  }
  j["iterations"] = r.iterations;
  j["samples"] = r.samples;
  j["duality_gap"] = r.gap;
  j["converged"] = r.converged;
  j["restricted_warnings"] = r.restricted_warnings;
  return j;
}

}  // namespace unsg

#endif  // UNSG_BASELINES_HPP_
