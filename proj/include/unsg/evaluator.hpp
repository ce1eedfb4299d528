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

#ifndef UNSG_EVALUATOR_HPP_
#define UNSG_EVALUATOR_HPP_

#include <algorithm>
#include <functional>
#include <memory>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "unsg/action_tree.hpp"
#include "unsg/error.hpp"
#include "unsg/game.hpp"
#include "unsg/metrics.hpp"
#include "unsg/policy.hpp"
#include "unsg/rng.hpp"

namespace unsg {

// Both enumerated action lists and the attacker payoff matrix.
struct EnumeratedGame {
  std::vector<AttackerAction> attacker_actions;
  std::vector<DefenderAction> defender_actions;
  PayoffMatrix payoff;

  static EnumeratedGame build(const SecurityGame& game, std::size_t cap = kDefaultEnumerationCap) {
    EnumeratedGame e;
    e.attacker_actions = enumerate_attacker_actions(game.graph(), cap);
    e.defender_actions = enumerate_defender_actions(game.defenders(), cap);
    e.payoff = payoff_matrix(game.graph(), e.attacker_actions, e.defender_actions);
    return e;
  }
};

struct GapReport {
  double gap = 0.0;
  double attacker_term = 0.0;  // max_i (Ay)_i - x^T A y
  double defender_term = 0.0;  // x^T A y - min_j (x^T A)_j
  double value = 0.0;          // x^T A y
};

inline GapReport duality_gap_report(const MixedStrategy& attacker, const MixedStrategy& defender,
                                    const PayoffMatrix& payoff) {
  GapReport r;
  r.value = expected_utility(attacker, defender, payoff);
  const Eigen::VectorXd ay = payoff * defender.probabilities;
  const Eigen::VectorXd xa = payoff.transpose() * attacker.probabilities;
  r.attacker_term = std::max(0.0, ay.maxCoeff() - r.value);
  r.defender_term = std::max(0.0, r.value - xa.minCoeff());
  r.gap = r.attacker_term + r.defender_term;
  return r;
}

inline double duality_gap(const MixedStrategy& attacker, const MixedStrategy& defender, const PayoffMatrix& payoff) {
  return duality_gap_report(attacker, defender, payoff).gap;
}

// Probabilities of every enumerated action, in enumeration order. The tree is
// walked depth first with children in ascending slot order, which visits
// leaves in the same lexicographic order as the enumeration.
template <class Tree>
MixedStrategy extract_mixed_strategy(const TreePolicy<Tree>& policy,
                                     const std::vector<typename Tree::Action>& actions) {
  const Tree& tree = policy.tree();
  MixedStrategy out{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(actions.size()))};
  std::size_t next = 0;
  typename Tree::History h = tree.root();
  auto visit = [&](auto&& self, TabularNode* node, double prob) -> void {
    if (tree.is_leaf(h)) {
      if (next >= actions.size() || tree.to_action(h) != actions[next])
        throw InconsistencyError("tree leaves do not match the enumerated action list");
      out.probabilities[static_cast<Eigen::Index>(next++)] = prob;
      return;
    }
    Step st;
    policy.evaluate(h, node, st);
    for (std::size_t i = 0; i < st.slots.size(); ++i) {
      auto saved = h;
      tree.advance(h, st.slots[i]);
      TabularNode* child = node && !tree.is_leaf(h) ? policy.child_node(node, static_cast<int>(i), h) : nullptr;
      self(self, child, prob * st.probs[i]);
      h = std::move(saved);
    }
  };
  visit(visit, policy.mode() == PolicyMode::kTabular ? policy.root_node() : nullptr, 1.0);
  if (next != actions.size()) throw InconsistencyError("tree has fewer leaves than enumerated actions");
  return out;
}

template <class AttackerPolicy, class DefenderPolicy>
GapReport policy_duality_gap(const AttackerPolicy& attacker, const DefenderPolicy& defender, const EnumeratedGame& e) {
  return duality_gap_report(extract_mixed_strategy(attacker, e.attacker_actions),
                            extract_mixed_strategy(defender, e.defender_actions), e.payoff);
}

// --- win rates ---------------------------------------------------------------

using AttackerSampler = std::function<AttackerAction(std::mt19937_64&)>;
using DefenderSampler = std::function<DefenderAction(std::mt19937_64&)>;

struct WinRateMatrix {
  std::vector<std::string> attacker_labels;
  std::vector<std::string> defender_labels;
  Eigen::MatrixXd rates;
  int rollouts_per_cell = 0;
};

template <class Tree>
std::function<typename Tree::Action(std::mt19937_64&)> policy_sampler(const TreePolicy<Tree>& policy) {
  return [&policy](std::mt19937_64& rng) { return sample_action(policy, rng).action; };
}

template <class Action>
std::function<Action(std::mt19937_64&)> pool_sampler(std::vector<Action> pool, std::vector<double> weights) {
  auto dist = std::make_shared<std::discrete_distribution<std::size_t>>(weights.begin(), weights.end());
  auto shared = std::make_shared<std::vector<Action>>(std::move(pool));
  return [dist, shared](std::mt19937_64& rng) { return (*shared)[(*dist)(rng)]; };
}

// Each cell plays `rollouts` independent joint draws; the rate is the
// fraction the attacker gets through. Cells run in parallel with seeds
// derived from (seed, row, column), so results do not depend on `threads`.
inline WinRateMatrix win_rate_matrix(const SecurityGame& game,
                                     const std::vector<std::pair<std::string, AttackerSampler>>& attackers,
                                     const std::vector<std::pair<std::string, DefenderSampler>>& defenders,
                                     int rollouts, std::uint64_t seed, int threads = 1) {
  if (rollouts < 1) throw InfeasibleParametersError("rollouts must be positive");
  WinRateMatrix m;
  for (const auto& a : attackers) m.attacker_labels.push_back(a.first);
  for (const auto& d : defenders) m.defender_labels.push_back(d.first);
  m.rollouts_per_cell = rollouts;
  const int rows = static_cast<int>(attackers.size()), cols = static_cast<int>(defenders.size());
  m.rates = Eigen::MatrixXd::Zero(rows, cols);
  auto run_cell = [&](int cell) {
    const int i = cell / cols, j = cell % cols;
    std::mt19937_64 rng = make_stream({seed, tag(StreamTag::kWinRate), static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)});
    int wins = 0;
    for (int k = 0; k < rollouts; ++k) {
      AttackerAction a = attackers[i].second(rng);
      DefenderAction d = defenders[j].second(rng);
      if (!intercepts(a.path, d.edges)) ++wins;
    }
    m.rates(i, j) = wins / static_cast<double>(rollouts);
  };
  const int cells = rows * cols;
  const int workers = std::max(1, std::min(threads, cells));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int c = w; c < cells; c += workers) run_cell(c);
    });
  for (int c = 0; c < cells; c += workers) run_cell(c);
  for (auto& t : pool) t.join();
  return m;
}

// Header row "attacker\defender,<labels>", then one row per attacker policy.
inline void write_win_rate_csv(std::ostream& out, const WinRateMatrix& m) {
  out << "attacker\\defender";
  for (const auto& l : m.defender_labels) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < m.attacker_labels.size(); ++i) {
    out << m.attacker_labels[i];
    for (Eigen::Index j = 0; j < m.rates.cols(); ++j) out << ',' << format_double(m.rates(static_cast<Eigen::Index>(i), j));
    out << '\n';
  }
}

}  // namespace unsg

#endif  // UNSG_EVALUATOR_HPP_
