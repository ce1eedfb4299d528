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

// Urban network security game model: the road graph, the defender team, pure
// actions of both players, the payoff oracle and exact enumeration of the
// pure action spaces.

#ifndef UNSG_GAME_HPP_
#define UNSG_GAME_HPP_

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "unsg/error.hpp"

namespace unsg {

using Vertex = int;

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

// Undirected road, stored with u <= v.
struct Edge {
  Vertex u = 0;
  Vertex v = 0;

  constexpr Edge() = default;
  constexpr Edge(Vertex a, Vertex b) : u(std::min(a, b)), v(std::max(a, b)) {}

  friend constexpr auto operator<=>(const Edge&, const Edge&) = default;
};

inline std::string to_string(const Edge& e) {
  return "(" + std::to_string(e.u) + "," + std::to_string(e.v) + ")";
}

class GameGraph {
 public:
  GameGraph() = default;

  GameGraph(int vertex_count, std::vector<Edge> edges,
            std::vector<Vertex> start_vertices,
            std::map<Vertex, double> target_values, int max_path_length)
      : vertex_count_(vertex_count),
        edges_(std::move(edges)),
        starts_(std::move(start_vertices)),
        target_values_(std::move(target_values)),
        max_path_length_(max_path_length) {
    if (vertex_count_ <= 0) throw InstanceMismatchError("graph has no vertices");
    for (Edge& e : edges_) {
      e = Edge(e.u, e.v);
      if (e.u < 0 || e.v >= vertex_count_)
        throw InstanceMismatchError("edge endpoint out of range: " + to_string(e));
      if (e.u == e.v) throw InstanceMismatchError("self loop at vertex " + std::to_string(e.u));
    }
    std::vector<Edge> sorted = edges_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw InstanceMismatchError("duplicate edge in graph");

    std::sort(starts_.begin(), starts_.end());
    starts_.erase(std::unique(starts_.begin(), starts_.end()), starts_.end());
    if (starts_.empty()) throw InstanceMismatchError("no start vertices");
    if (target_values_.empty()) throw InstanceMismatchError("no target vertices");
    is_start_.assign(vertex_count_, false);
    is_target_.assign(vertex_count_, false);
    for (Vertex s : starts_) {
      if (s < 0 || s >= vertex_count_) throw InstanceMismatchError("start vertex out of range");
      is_start_[s] = true;
    }
    for (const auto& [t, value] : target_values_) {
      if (t < 0 || t >= vertex_count_) throw InstanceMismatchError("target vertex out of range");
      if (is_start_[t]) throw InstanceMismatchError("vertex " + std::to_string(t) + " is both start and target");
      if (!(value > 0.0) || !std::isfinite(value))
        throw InstanceMismatchError("target " + std::to_string(t) + " needs a positive value");
      is_target_[t] = true;
      targets_.push_back(t);
    }
    if (max_path_length_ < 2) throw InstanceMismatchError("max_path_length must be at least 2");

    adjacency_.assign(vertex_count_, {});
    adjacent_edge_ids_.assign(vertex_count_, {});
    std::vector<std::vector<std::pair<Vertex, int>>> adj(vertex_count_);
    for (int id = 0; id < static_cast<int>(edges_.size()); ++id) {
      adj[edges_[id].u].emplace_back(edges_[id].v, id);
      adj[edges_[id].v].emplace_back(edges_[id].u, id);
    }
    for (int v = 0; v < vertex_count_; ++v) {
      std::sort(adj[v].begin(), adj[v].end());
      for (auto [w, id] : adj[v]) {
        adjacency_[v].push_back(w);
        adjacent_edge_ids_[v].push_back(id);
      }
      max_degree_ = std::max(max_degree_, static_cast<int>(adj[v].size()));
    }

    if (!has_feasible_path())
      throw InstanceMismatchError("no simple start-to-target path within max_path_length");
  }

  int vertex_count() const { return vertex_count_; }
  const std::vector<Edge>& edges() const { return edges_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Vertex>& start_vertices() const { return starts_; }
  const std::vector<Vertex>& target_vertices() const { return targets_; }
  const std::map<Vertex, double>& target_values() const { return target_values_; }
  int max_path_length() const { return max_path_length_; }
  int max_degree() const { return max_degree_; }

  bool is_start(Vertex v) const { return is_start_[v]; }
  bool is_target(Vertex v) const { return is_target_[v]; }
  double target_value(Vertex t) const { return target_values_.at(t); }

  // Sorted ascending.
  std::span<const Vertex> neighbors(Vertex v) const { return adjacency_[v]; }
  std::span<const int> incident_edge_ids(Vertex v) const { return adjacent_edge_ids_[v]; }

  std::optional<int> edge_id(Edge e) const {
    if (e.u < 0 || e.v >= vertex_count_) return std::nullopt;
    const auto& nb = adjacency_[e.u];
    auto it = std::lower_bound(nb.begin(), nb.end(), e.v);
    if (it == nb.end() || *it != e.v) return std::nullopt;
    return adjacent_edge_ids_[e.u][it - nb.begin()];
  }
  bool has_edge(Edge e) const { return edge_id(e).has_value(); }

  // Hop distances (in edges) from every vertex to the nearest target, where
  // targets absorb: a path may not pass through one target to reach another.
  std::vector<int> distance_to_targets() const {
    std::vector<int> dist(vertex_count_, -1);
    std::deque<Vertex> queue;
    for (Vertex t : targets_) {
      dist[t] = 0;
      queue.push_back(t);
    }
    while (!queue.empty()) {
      Vertex v = queue.front();
      queue.pop_front();
      for (Vertex w : adjacency_[v]) {
        if (dist[w] >= 0 || is_target_[w]) continue;
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
    return dist;
  }

 private:
  bool has_feasible_path() const {
    std::vector<int> dist = distance_to_targets();
    for (Vertex s : starts_)
      if (dist[s] >= 0 && dist[s] + 1 <= max_path_length_) return true;
    return false;
  }

  int vertex_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<Vertex> starts_;
  std::vector<Vertex> targets_;
  std::map<Vertex, double> target_values_;
  int max_path_length_ = 0;
  int max_degree_ = 0;
  std::vector<bool> is_start_;
  std::vector<bool> is_target_;
  std::vector<std::vector<Vertex>> adjacency_;
  std::vector<std::vector<int>> adjacent_edge_ids_;
};

struct DefenderSpec {
  int num_defenders = 0;
  std::vector<std::vector<Edge>> candidate_edges;  // one list per defender
  bool allow_duplicate_edges = true;
};

struct AttackerAction {
  std::vector<Vertex> path;
  friend auto operator<=>(const AttackerAction&, const AttackerAction&) = default;
};

struct DefenderAction {
  std::vector<Edge> edges;
  friend auto operator<=>(const DefenderAction&, const DefenderAction&) = default;
};

// A graph plus a defender team: one complete game instance.
class SecurityGame {
 public:
  SecurityGame() = default;

  SecurityGame(GameGraph graph, DefenderSpec defenders)
      : graph_(std::move(graph)), defenders_(std::move(defenders)) {
    if (defenders_.num_defenders <= 0) throw InstanceMismatchError("need at least one defender");
    if (static_cast<int>(defenders_.candidate_edges.size()) != defenders_.num_defenders)
      throw InstanceMismatchError("candidate edge lists do not match defender count");
    for (auto& list : defenders_.candidate_edges) {
      for (Edge& e : list) {
        e = Edge(e.u, e.v);
        if (!graph_.has_edge(e)) throw InstanceMismatchError("candidate edge " + to_string(e) + " is not in the graph");
      }
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
      if (list.empty()) throw InstanceMismatchError("defender has no candidate edges");
      union_edges_.insert(union_edges_.end(), list.begin(), list.end());
    }
    std::sort(union_edges_.begin(), union_edges_.end());
    union_edges_.erase(std::unique(union_edges_.begin(), union_edges_.end()), union_edges_.end());
    candidate_union_ids_.resize(defenders_.num_defenders);
    for (int m = 0; m < defenders_.num_defenders; ++m)
      for (Edge e : defenders_.candidate_edges[m]) candidate_union_ids_[m].push_back(union_index(e));
    if (!defenders_.allow_duplicate_edges &&
        !distinct_assignment_exists(0, std::vector<std::uint8_t>(union_edges_.size(), 0)))
      throw InstanceMismatchError("defenders cannot pick pairwise distinct candidate edges");
  }

  const GameGraph& graph() const { return graph_; }
  const DefenderSpec& defenders() const { return defenders_; }
  int num_defenders() const { return defenders_.num_defenders; }

  // Sorted union of all defenders' candidate edges.
  const std::vector<Edge>& defender_edge_union() const { return union_edges_; }
  int union_index(Edge e) const {
    auto it = std::lower_bound(union_edges_.begin(), union_edges_.end(), e);
    if (it == union_edges_.end() || *it != e) return -1;
    return static_cast<int>(it - union_edges_.begin());
  }
  // Candidate list of defender m as indices into defender_edge_union().
  const std::vector<int>& candidate_union_ids(int m) const { return candidate_union_ids_[m]; }

  // Whether defenders first..N-1 can pick pairwise distinct union edges that
  // are not marked in `taken` (bipartite matching by augmenting paths).
  bool distinct_assignment_exists(int first, const std::vector<std::uint8_t>& taken) const {
    const int n = defenders_.num_defenders;
    const int width = static_cast<int>(union_edges_.size());
    std::vector<int> owner(width, -1);
    std::vector<std::uint8_t> seen(width, 0);
    auto augment = [&](auto&& self, int m) -> bool {
      for (int id : candidate_union_ids_[m]) {
        if (taken[id] || seen[id]) continue;
        seen[id] = 1;
        if (owner[id] < 0 || self(self, owner[id])) {
          owner[id] = m;
          return true;
        }
      }
      return false;
    };
    for (int m = first; m < n; ++m) {
      std::fill(seen.begin(), seen.end(), 0);
      if (!augment(augment, m)) return false;
    }
    return true;
  }

 private:
  GameGraph graph_;
  DefenderSpec defenders_;
  std::vector<Edge> union_edges_;
  std::vector<std::vector<int>> candidate_union_ids_;
};

inline void validate(const GameGraph& g, const AttackerAction& a) {
  const auto& p = a.path;
  if (p.size() < 2) throw InstanceMismatchError("attacker path needs at least two vertices");
  if (static_cast<int>(p.size()) > g.max_path_length())
    throw InstanceMismatchError("attacker path longer than max_path_length");
  for (Vertex v : p)
    if (v < 0 || v >= g.vertex_count()) throw InstanceMismatchError("attacker path vertex out of range");
  if (!g.is_start(p.front())) throw InstanceMismatchError("attacker path does not begin at a start vertex");
  if (!g.is_target(p.back())) throw InstanceMismatchError("attacker path does not end at a target");
  std::vector<Vertex> seen = p;
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw InstanceMismatchError("attacker path repeats a vertex");
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    if (!g.has_edge(Edge(p[i], p[i + 1]))) throw InstanceMismatchError("attacker path uses a missing edge");
    if (i > 0 && g.is_target(p[i])) throw InstanceMismatchError("attacker path passes through a target");
  }
}

inline void validate(const SecurityGame& game, const DefenderAction& d) {
  const auto& spec = game.defenders();
  if (static_cast<int>(d.edges.size()) != spec.num_defenders)
    throw InstanceMismatchError("defender action has the wrong number of edges");
  for (int m = 0; m < spec.num_defenders; ++m) {
    const auto& list = spec.candidate_edges[m];
    if (!std::binary_search(list.begin(), list.end(), Edge(d.edges[m].u, d.edges[m].v)))
      throw InstanceMismatchError("defender " + std::to_string(m) + " edge not in its candidate set");
  }
  if (!spec.allow_duplicate_edges) {
    std::vector<Edge> e = d.edges;
    for (Edge& x : e) x = Edge(x.u, x.v);
    std::sort(e.begin(), e.end());
    if (std::adjacent_find(e.begin(), e.end()) != e.end())
      throw InstanceMismatchError("defenders share an edge but duplicates are disallowed");
  }
}

// Interception test on normalized undirected edges. No validation.
inline bool intercepts(std::span<const Vertex> path, std::span<const Edge> defended) {
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Edge step(path[i], path[i + 1]);
    for (const Edge& e : defended)
      if (e == step) return true;
  }
  return false;
}

// +U(target) if the path avoids every defended edge, -U(target) otherwise.
inline double attacker_utility_unchecked(const GameGraph& g, const AttackerAction& a,
                                         const DefenderAction& d) {
  const double value = g.target_value(a.path.back());
  return intercepts(a.path, d.edges) ? -value : value;
}

inline double attacker_utility(const SecurityGame& game, const AttackerAction& a,
                               const DefenderAction& d) {
  validate(game.graph(), a);
  validate(game, d);
  return attacker_utility_unchecked(game.graph(), a, d);
}

inline double defender_utility(const SecurityGame& game, const AttackerAction& a,
                               const DefenderAction& d) {
  return -attacker_utility(game, a, d);
}

// Every simple start->target path with at most max_path_length vertices, in
// lexicographic order. Targets end a path.
inline std::vector<AttackerAction> enumerate_attacker_actions(
    const GameGraph& g, std::size_t cap = kDefaultEnumerationCap) {
  std::vector<AttackerAction> out;
  const std::vector<int> dist = g.distance_to_targets();
  std::vector<bool> on_path(g.vertex_count(), false);
  std::vector<Vertex> path;
  const int max_len = g.max_path_length();

  auto dfs = [&](auto&& self, Vertex v) -> void {
    for (Vertex w : g.neighbors(v)) {
      if (on_path[w]) continue;
      const int len = static_cast<int>(path.size()) + 1;
      // dist is a lower bound on the residual distance.
      if (dist[w] < 0 || len + dist[w] > max_len) continue;
      if (g.is_target(w)) {
        if (out.size() >= cap)
          throw EnumerationOverflowError("attacker action space exceeds cap of " + std::to_string(cap));
        path.push_back(w);
        out.push_back(AttackerAction{path});
        path.pop_back();
        continue;
      }
      on_path[w] = true;
      path.push_back(w);
      self(self, w);
      path.pop_back();
      on_path[w] = false;
    }
  };

  for (Vertex s : g.start_vertices()) {
    if (dist[s] < 0 || dist[s] + 1 > max_len) continue;
    on_path[s] = true;
    path.assign(1, s);
    dfs(dfs, s);
    on_path[s] = false;
  }
  return out;
}

// Cartesian product of the candidate sets in lexicographic index order.
inline std::vector<DefenderAction> enumerate_defender_actions(
    const DefenderSpec& spec, std::size_t cap = kDefaultEnumerationCap) {
  const int n = spec.num_defenders;
  if (n <= 0 || static_cast<int>(spec.candidate_edges.size()) != n)
    throw InstanceMismatchError("malformed defender spec");
  std::vector<std::vector<Edge>> lists = spec.candidate_edges;
  double product = 1.0;
  for (auto& l : lists) {
    for (Edge& e : l) e = Edge(e.u, e.v);
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
    if (l.empty()) throw InstanceMismatchError("defender has no candidate edges");
    product *= static_cast<double>(l.size());
  }
  if (spec.allow_duplicate_edges && product > static_cast<double>(cap))
    throw EnumerationOverflowError("defender action space exceeds cap of " + std::to_string(cap));

  std::vector<DefenderAction> out;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    DefenderAction a;
    a.edges.reserve(n);
    for (int m = 0; m < n; ++m) a.edges.push_back(lists[m][idx[m]]);
    bool keep = true;
    if (!spec.allow_duplicate_edges) {
      for (int i = 0; i < n && keep; ++i)
        for (int j = i + 1; j < n && keep; ++j)
          if (a.edges[i] == a.edges[j]) keep = false;
    }
    if (keep) {
      if (out.size() >= cap)
        throw EnumerationOverflowError("defender action space exceeds cap of " + std::to_string(cap));
      out.push_back(std::move(a));
    }
    int m = n - 1;
    while (m >= 0 && ++idx[m] == lists[m].size()) idx[m--] = 0;
    if (m < 0) break;
  }
  return out;
}

struct MixedStrategy {
  Eigen::VectorXd probabilities;

  static MixedStrategy uniform(std::size_t n) {
    return MixedStrategy{Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n))};
  }
  static MixedStrategy pure(std::size_t n, std::size_t index) {
    MixedStrategy s{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))};
    s.probabilities[static_cast<Eigen::Index>(index)] = 1.0;
    return s;
  }

  std::size_t size() const { return static_cast<std::size_t>(probabilities.size()); }

  bool is_valid(double tolerance = 1e-9) const {
    if (probabilities.size() == 0) return false;
    for (double p : probabilities)
      if (!(p >= 0.0) || !std::isfinite(p)) return false;
    return std::abs(probabilities.sum() - 1.0) <= tolerance;
  }
};

// Rows: attacker actions. Columns: defender actions. Entries: attacker payoff.
using PayoffMatrix = Eigen::MatrixXd;

inline PayoffMatrix payoff_matrix(const GameGraph& g, const std::vector<AttackerAction>& attacker,
                                  const std::vector<DefenderAction>& defender) {
  PayoffMatrix m(static_cast<Eigen::Index>(attacker.size()), static_cast<Eigen::Index>(defender.size()));
  for (std::size_t i = 0; i < attacker.size(); ++i)
    for (std::size_t j = 0; j < defender.size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          attacker_utility_unchecked(g, attacker[i], defender[j]);
  return m;
}

// x^T A y: expected attacker utility. The defender's is the negation.
inline double expected_utility(const MixedStrategy& attacker, const MixedStrategy& defender,
                               const PayoffMatrix& payoff) {
  if (static_cast<Eigen::Index>(attacker.size()) != payoff.rows() ||
      static_cast<Eigen::Index>(defender.size()) != payoff.cols())
    throw DimensionMismatchError("strategy sizes do not match payoff matrix " +
                                 std::to_string(payoff.rows()) + "x" + std::to_string(payoff.cols()));
  return attacker.probabilities.dot(payoff * defender.probabilities);
}

}  // namespace unsg

#endif  // UNSG_GAME_HPP_
