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

// Decision trees over pure actions. A root-to-leaf walk in AttackerTree
// spells out a simple start->target path one vertex at a time; a walk in
// DefenderTree picks one edge per defender in order. Trees are implicit:
// children are generated from the history on demand.
//
// Both trees expose the same surface, which the policy and sampling code are
// written against:
//
//   using History, Action
//   int mask_width()
//   void valid_slots(const History&, std::vector<int>&)  // ascending
//   bool is_leaf(const History&)
//   History root()
//   void advance(History&, int slot)
//   Action to_action(const History&)
//   std::vector<int> slots_of(const Action&)
//   int feature_width(), void features(const History&, SparseFeatures&)

#ifndef UNSG_ACTION_TREE_HPP_
#define UNSG_ACTION_TREE_HPP_

#include <algorithm>
#include <cstdint>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "unsg/error.hpp"
#include "unsg/game.hpp"

namespace unsg {

struct AttackerHistory {
  std::vector<Vertex> visited;

  bool is_root() const { return visited.empty(); }
  Vertex current() const { return visited.back(); }
  friend bool operator==(const AttackerHistory&, const AttackerHistory&) = default;
};

struct DefenderHistory {
  std::vector<int> chosen;  // indices into SecurityGame::defender_edge_union()

  int depth() const { return static_cast<int>(chosen.size()); }
  friend bool operator==(const DefenderHistory&, const DefenderHistory&) = default;
};

struct ActionMask {
  std::vector<std::uint8_t> bits;

  int width() const { return static_cast<int>(bits.size()); }
  int count() const { return static_cast<int>(std::count(bits.begin(), bits.end(), 1)); }
  bool test(int slot) const { return bits[slot] != 0; }

  static ActionMask from_slots(int width, const std::vector<int>& slots) {
    ActionMask m{std::vector<std::uint8_t>(width, 0)};
    for (int s : slots) m.bits[s] = 1;
    return m;
  }
};

// Nonzero network inputs as (index, value) pairs.
using SparseFeatures = std::vector<std::pair<int, double>>;

class AttackerTree {
 public:
  using History = AttackerHistory;
  using Action = AttackerAction;

  explicit AttackerTree(const SecurityGame& game)
      : graph_(&game.graph()),
        distance_(game.graph().distance_to_targets()),
        mask_width_(std::max(game.graph().max_degree(),
                             static_cast<int>(game.graph().start_vertices().size()))) {}

  explicit AttackerTree(SecurityGame&&) = delete;

  const GameGraph& graph() const { return *graph_; }
  int mask_width() const { return mask_width_; }

  History root() const { return {}; }

  bool is_leaf(const History& h) const { return !h.is_root() && graph_->is_target(h.current()); }

  // Vertex reached by taking `slot` at history h.
  Vertex child_vertex(const History& h, int slot) const {
    return h.is_root() ? graph_->start_vertices()[slot] : graph_->neighbors(h.current())[slot];
  }

  void valid_slots(const History& h, std::vector<int>& out) const {
    out.clear();
    const GameGraph& g = *graph_;
    const int max_len = g.max_path_length();
    if (h.is_root()) {
      const auto& starts = g.start_vertices();
      for (int i = 0; i < static_cast<int>(starts.size()); ++i)
        if (distance_[starts[i]] >= 0 && distance_[starts[i]] + 1 <= max_len) out.push_back(i);
      return;
    }
    if (is_leaf(h)) return;
    const int len = static_cast<int>(h.visited.size());
    if (len + 1 > max_len) return;
    const int budget = max_len - len - 1;  // vertices allowed after the child
    std::vector<std::uint8_t> blocked(g.vertex_count(), 0);
    for (Vertex v : h.visited) blocked[v] = 1;
    const auto nb = g.neighbors(h.current());
    for (int i = 0; i < static_cast<int>(nb.size()); ++i) {
      const Vertex w = nb[i];
      if (blocked[w]) continue;
      if (g.is_target(w)) {
        out.push_back(i);
        continue;
      }
      if (distance_[w] < 0 || distance_[w] > budget) continue;
      if (reaches_target(w, budget, blocked)) out.push_back(i);
    }
  }

  std::vector<Vertex> valid_actions(const History& h) const {
    std::vector<int> slots;
    valid_slots(h, slots);
    std::vector<Vertex> out;
    for (int s : slots) out.push_back(child_vertex(h, s));
    return out;
  }

  ActionMask mask(const History& h) const {
    std::vector<int> slots;
    valid_slots(h, slots);
    return ActionMask::from_slots(mask_width_, slots);
  }

  void advance(History& h, int slot) const { h.visited.push_back(child_vertex(h, slot)); }

  Action to_action(const History& h) const { return Action{h.visited}; }

  std::vector<int> slots_of(const Action& a) const {
    std::vector<int> slots;
    History h;
    std::vector<int> valid;
    for (std::size_t i = 0; i < a.path.size(); ++i) {
      if (is_leaf(h)) throw InconsistencyError("attacker path continues past a target");
      valid_slots(h, valid);
      int slot = -1;
      for (int s : valid)
        if (child_vertex(h, s) == a.path[i]) slot = s;
      if (slot < 0)
        throw InconsistencyError("attacker path step to vertex " + std::to_string(a.path[i]) +
                                 " is masked at its node");
      slots.push_back(slot);
      advance(h, slot);
    }
    if (!is_leaf(h)) throw InconsistencyError("attacker path does not end at a leaf");
    return slots;
  }

  // one-hot(current) | visited bitmap | remaining budget fraction
  int feature_width() const { return 2 * graph_->vertex_count() + 1; }

  void features(const History& h, SparseFeatures& out) const {
    out.clear();
    const int n = graph_->vertex_count();
    if (!h.is_root()) out.emplace_back(h.current(), 1.0);
    for (Vertex v : h.visited) out.emplace_back(n + v, 1.0);
    const double len = static_cast<double>(h.visited.size());
    out.emplace_back(2 * n, (graph_->max_path_length() - len) / graph_->max_path_length());
  }

 private:
  // Depth-bounded BFS from `from` to any target, avoiding blocked vertices.
  // Targets are absorbing and non-target vertices may be expanded.
  bool reaches_target(Vertex from, int budget, const std::vector<std::uint8_t>& blocked) const {
    const GameGraph& g = *graph_;
    std::vector<int> depth(g.vertex_count(), -1);
    std::deque<Vertex> queue{from};
    depth[from] = 0;
    while (!queue.empty()) {
      const Vertex v = queue.front();
      queue.pop_front();
      if (depth[v] == budget) continue;
      for (Vertex w : g.neighbors(v)) {
        if (blocked[w] || depth[w] >= 0) continue;
        if (g.is_target(w)) return true;
        depth[w] = depth[v] + 1;
        queue.push_back(w);
      }
    }
    return false;
  }

  const GameGraph* graph_;
  std::vector<int> distance_;
  int mask_width_;
};

class DefenderTree {
 public:
  using History = DefenderHistory;
  using Action = DefenderAction;

  explicit DefenderTree(const SecurityGame& game) : game_(&game) {}
  explicit DefenderTree(SecurityGame&&) = delete;

  const SecurityGame& game() const { return *game_; }
  int mask_width() const { return static_cast<int>(game_->defender_edge_union().size()); }
  int depth_limit() const { return game_->num_defenders(); }

  History root() const { return {}; }
  bool is_leaf(const History& h) const { return h.depth() >= game_->num_defenders(); }

  void valid_slots(const History& h, std::vector<int>& out) const {
    out.clear();
    if (is_leaf(h)) return;
    const auto& candidates = game_->candidate_union_ids(h.depth());
    if (game_->defenders().allow_duplicate_edges) {
      out = candidates;
      return;
    }
    History next = h;
    next.chosen.push_back(-1);
    for (int id : candidates) {
      if (std::find(h.chosen.begin(), h.chosen.end(), id) != h.chosen.end()) continue;
      next.chosen.back() = id;
      if (can_complete(next)) out.push_back(id);
    }
  }

  std::vector<Edge> valid_actions(const History& h) const {
    if (is_leaf(h)) throw InstanceMismatchError("defender history is already complete");
    std::vector<int> slots;
    valid_slots(h, slots);
    std::vector<Edge> out;
    for (int s : slots) out.push_back(game_->defender_edge_union()[s]);
    return out;
  }

  ActionMask mask(const History& h) const {
    std::vector<int> slots;
    valid_slots(h, slots);
    return ActionMask::from_slots(mask_width(), slots);
  }

  void advance(History& h, int slot) const { h.chosen.push_back(slot); }

  Action to_action(const History& h) const {
    Action a;
    for (int id : h.chosen) a.edges.push_back(game_->defender_edge_union()[id]);
    return a;
  }

  std::vector<int> slots_of(const Action& a) const {
    if (static_cast<int>(a.edges.size()) != game_->num_defenders())
      throw InconsistencyError("defender action has the wrong number of edges");
    History h;
    std::vector<int> valid;
    for (const Edge& e : a.edges) {
      valid_slots(h, valid);
      const int id = game_->union_index(Edge(e.u, e.v));
      if (id < 0 || !std::binary_search(valid.begin(), valid.end(), id))
        throw InconsistencyError("defender " + std::to_string(h.depth()) + " edge " + to_string(e) +
                                 " is masked at its node");
      advance(h, id);
    }
    return h.chosen;
  }

  // one-hot(defender index) | chosen-edge bitmap
  int feature_width() const { return game_->num_defenders() + mask_width(); }

  void features(const History& h, SparseFeatures& out) const {
    out.clear();
    const int n = game_->num_defenders();
    if (h.depth() < n) out.emplace_back(h.depth(), 1.0);
    std::vector<int> ids = h.chosen;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (int id : ids) out.emplace_back(n + id, 1.0);
  }

 private:
  // With duplicates disallowed, checks that the defenders after `h` can
  // still pick pairwise distinct unused edges.
  bool can_complete(const History& h) const {
    std::vector<std::uint8_t> taken(mask_width(), 0);
    for (int id : h.chosen) taken[id] = 1;
    return game_->distinct_assignment_exists(h.depth(), taken);
  }

  const SecurityGame* game_;
};

// Leaf count by exhaustive traversal of the implicit tree.
template <class Tree>
std::size_t count_tree_leaves(const Tree& tree, std::size_t cap = kDefaultEnumerationCap) {
  std::size_t leaves = 0;
  typename Tree::History h = tree.root();
  auto visit = [&](auto&& self) -> void {
    if (tree.is_leaf(h)) {
      if (++leaves > cap) throw EnumerationOverflowError("tree has more than " + std::to_string(cap) + " leaves");
      return;
    }
    std::vector<int> slots;
    tree.valid_slots(h, slots);
    for (int s : slots) {
      auto saved = h;
      tree.advance(h, s);
      self(self);
      h = std::move(saved);
    }
  };
  visit(visit);
  return leaves;
}

struct LeafCounts {
  std::size_t attacker = 0;
  std::size_t defender = 0;
};

inline LeafCounts count_leaves(const SecurityGame& game, std::size_t cap = kDefaultEnumerationCap) {
  return {count_tree_leaves(AttackerTree(game), cap), count_tree_leaves(DefenderTree(game), cap)};
}

inline std::vector<Vertex> attacker_valid_actions(const SecurityGame& game, const AttackerHistory& h) {
  return AttackerTree(game).valid_actions(h);
}

inline std::vector<Edge> defender_valid_actions(const SecurityGame& game, const DefenderHistory& h) {
  return DefenderTree(game).valid_actions(h);
}

}  // namespace unsg

#endif  // UNSG_ACTION_TREE_HPP_
