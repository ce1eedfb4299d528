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

#ifndef UNSG_GENERATORS_HPP_
#define UNSG_GENERATORS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "unsg/error.hpp"
#include "unsg/game.hpp"
#include "unsg/graph_io.hpp"

namespace unsg {

enum class GeneratorKind { kGrid, kRandom, kFile };

inline std::string to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::kGrid: return "grid";
    case GeneratorKind::kRandom: return "random";
    case GeneratorKind::kFile: return "file";
  }
  return "?";
}

inline GeneratorKind parse_generator_kind(const std::string& s) {
  if (s == "grid") return GeneratorKind::kGrid;
  if (s == "random") return GeneratorKind::kRandom;
  if (s == "file") return GeneratorKind::kFile;
  throw ConfigError("unknown graph generator '" + s + "'");
}

struct GeneratorParams {
  GeneratorKind kind = GeneratorKind::kRandom;
  int nodes = 16;  // random
  int edges = 40;  // random
  int rows = 0;    // grid
  int cols = 0;    // grid
  std::string path;  // file
  int start_count = 1;
  int target_count = 1;
  std::vector<double> target_values;  // empty: every target worth 1
  int max_path_length = 9;
};

namespace detail {

inline std::vector<int> hop_distances(int n, const std::vector<Edge>& edges,
                                      const std::vector<Vertex>& sources) {
  std::vector<std::vector<Vertex>> adj(n);
  for (const Edge& e : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  std::vector<int> dist(n, -1);
  std::deque<Vertex> q;
  for (Vertex s : sources) {
    dist[s] = 0;
    q.push_back(s);
  }
  while (!q.empty()) {
    Vertex v = q.front();
    q.pop_front();
    for (Vertex w : adj[v])
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        q.push_back(w);
      }
  }
  return dist;
}

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

// Starts are drawn at random; targets are the vertices farthest from the
// starts (in hops) that still fit inside the path-length cap.
inline GameGraph place_endpoints(int n, std::vector<Edge> edges, const GeneratorParams& params,
                                 std::mt19937_64& rng) {
  if (params.start_count < 1 || params.target_count < 1 || params.start_count + params.target_count > n)
    throw InfeasibleParametersError("cannot place the requested start and target vertices");
  if (!params.target_values.empty() &&
      static_cast<int>(params.target_values.size()) != params.target_count)
    throw InfeasibleParametersError("target_values must list one value per target");
  std::vector<Vertex> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Vertex> starts(order.begin(), order.begin() + params.start_count);
  std::vector<int> dist = hop_distances(n, edges, starts);

  std::vector<Vertex> candidates;
  for (Vertex v : order)
    if (dist[v] > 0 && dist[v] + 1 <= params.max_path_length) candidates.push_back(v);
  if (static_cast<int>(candidates.size()) < params.target_count)
    throw InfeasibleParametersError("not enough reachable vertices for the targets");
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](Vertex a, Vertex b) { return dist[a] > dist[b]; });
  std::map<Vertex, double> targets;
  for (int i = 0; i < params.target_count; ++i)
    targets[candidates[i]] = params.target_values.empty() ? 1.0 : params.target_values[i];
  return GameGraph(n, std::move(edges), std::move(starts), std::move(targets), params.max_path_length);
}

// Number of lattice pairs within two rows and two columns of each other.
inline int random_candidate_count(int n) {
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  int count = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (j / cols - i / cols > 2) break;
      if (std::abs(j % cols - i % cols) <= 2) ++count;
    }
  return count;
}

inline GameGraph generate_random_once(const GeneratorParams& p, std::mt19937_64& rng) {
  const int n = p.nodes;
  if (n < 2) throw InfeasibleParametersError("random graph needs at least two nodes");
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  std::uniform_real_distribution<double> jitter(-0.35, 0.35);
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = (i % cols) + jitter(rng);
    y[i] = (i / cols) + jitter(rng);
  }
  struct Candidate {
    double weight;
    Edge edge;
  };
  std::vector<Candidate> candidates;
  std::uniform_real_distribution<double> noise(0.75, 1.25);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const int dr = j / cols - i / cols;
      const int dc = j % cols - i % cols;
      if (dr > 2) break;
      if (std::abs(dc) > 2) continue;
      const double d = std::hypot(x[i] - x[j], y[i] - y[j]);
      candidates.push_back({d * noise(rng), Edge(i, j)});
    }
  }
  if (p.edges < n - 1 || p.edges > static_cast<int>(candidates.size()))
    throw InfeasibleParametersError("random graph with " + std::to_string(n) + " nodes cannot have " +
                                    std::to_string(p.edges) + " edges");
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.weight < b.weight; });
  DisjointSets sets(n);
  std::vector<bool> used(candidates.size(), false);
  std::vector<Edge> edges;
  for (std::size_t k = 0; k < candidates.size(); ++k)
    if (sets.unite(candidates[k].edge.u, candidates[k].edge.v)) {
      used[k] = true;
      edges.push_back(candidates[k].edge);
    }
  if (static_cast<int>(edges.size()) != n - 1) throw InfeasibleParametersError("candidate graph is disconnected");
  for (std::size_t k = 0; k < candidates.size() && static_cast<int>(edges.size()) < p.edges; ++k)
    if (!used[k]) edges.push_back(candidates[k].edge);
  std::sort(edges.begin(), edges.end());
  return place_endpoints(n, std::move(edges), p, rng);
}

inline GameGraph generate_grid(const GeneratorParams& p) {
  if (p.rows < 1 || p.cols < 1 || p.rows * p.cols < 2) throw InfeasibleParametersError("grid needs at least two cells");
  const int n = p.rows * p.cols;
  std::vector<Edge> edges;
  for (int r = 0; r < p.rows; ++r)
    for (int c = 0; c < p.cols; ++c) {
      const int v = r * p.cols + c;
      if (c + 1 < p.cols) edges.emplace_back(v, v + 1);
      if (r + 1 < p.rows) edges.emplace_back(v, v + p.cols);
    }
  std::sort(edges.begin(), edges.end());
  if (p.start_count != 1) throw InfeasibleParametersError("grid generator places exactly one start (corner 0)");
  // Targets: cells ordered by decreasing Manhattan distance from corner 0.
  std::vector<Vertex> cells(n);
  std::iota(cells.begin(), cells.end(), 0);
  std::stable_sort(cells.begin(), cells.end(), [&](Vertex a, Vertex b) {
    return a / p.cols + a % p.cols > b / p.cols + b % p.cols;
  });
  if (p.target_count >= n) throw InfeasibleParametersError("too many targets for the grid");
  std::map<Vertex, double> targets;
  for (int i = 0; i < p.target_count; ++i)
    targets[cells[i]] = p.target_values.empty() ? 1.0 : p.target_values.at(i);
  return GameGraph(n, std::move(edges), {0}, std::move(targets), p.max_path_length);
}

}  // namespace detail

enum class CandidateRule { kAll, kRandom, kNearTargets };

inline std::string to_string(CandidateRule r) {
  switch (r) {
    case CandidateRule::kAll: return "all";
    case CandidateRule::kRandom: return "random";
    case CandidateRule::kNearTargets: return "near_targets";
  }
  return "?";
}

inline CandidateRule parse_candidate_rule(const std::string& s) {
  if (s == "all") return CandidateRule::kAll;
  if (s == "random") return CandidateRule::kRandom;
  if (s == "near_targets") return CandidateRule::kNearTargets;
  throw ConfigError("unknown candidate rule '" + s + "'");
}

// `count` graph edges as a defender candidate set, sorted. kNearTargets
// orders edges by the hop distance of their nearer endpoint to a target and
// breaks ties with seeded noise; kRandom is a seeded uniform subset.
inline std::vector<Edge> select_candidate_edges(const GameGraph& g, int count, CandidateRule rule,
                                                std::uint64_t seed) {
  if (count < 1) throw InfeasibleParametersError("candidate count must be positive");
  if (rule == CandidateRule::kAll) return g.edges();
  if (count > g.edge_count())
    throw InfeasibleParametersError("asked for " + std::to_string(count) + " candidate edges but the graph has " +
                                    std::to_string(g.edge_count()));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> key(g.edge_count());
  std::vector<int> dist;
  if (rule == CandidateRule::kNearTargets) dist = detail::hop_distances(g.vertex_count(), g.edges(), g.target_vertices());
  for (int i = 0; i < g.edge_count(); ++i) {
    const Edge& e = g.edges()[i];
    double base = 0.0;
    if (rule == CandidateRule::kNearTargets) {
      int du = dist[e.u] < 0 ? g.vertex_count() : dist[e.u];
      int dv = dist[e.v] < 0 ? g.vertex_count() : dist[e.v];
      base = std::min(du, dv);
    }
    key[i] = base + unit(rng);
  }
  std::vector<int> order(g.edge_count());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] < key[b]; });
  std::vector<Edge> out;
  for (int i = 0; i < count; ++i) out.push_back(g.edges()[order[i]]);
  std::sort(out.begin(), out.end());
  return out;
}

// Deterministic for a fixed (params, seed). Random graphs are retried with
// derived seeds when endpoint placement fails, up to 100 attempts.
inline GameGraph generate_graph(const GeneratorParams& params, std::uint64_t seed) {
  switch (params.kind) {
    case GeneratorKind::kGrid:
      return detail::generate_grid(params);
    case GeneratorKind::kFile: {
      GraphFile file = read_graph_file(params.path);
      return file.build(params.max_path_length);
    }
    case GeneratorKind::kRandom: {
      const int n = params.nodes;
      if (n < 2 || params.edges < n - 1 || params.edges > detail::random_candidate_count(n))
        throw InfeasibleParametersError("random graph with " + std::to_string(n) + " nodes cannot have " +
                                        std::to_string(params.edges) + " edges");
      std::string last;
      for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
        std::seed_seq seq{seed, attempt};
        std::mt19937_64 rng(seq);
        try {
          return detail::generate_random_once(params, rng);
        } catch (const InfeasibleParametersError& e) {
          last = e.what();
        } catch (const InstanceMismatchError& e) {
          last = e.what();
        }
      }
      throw InfeasibleParametersError("random graph generation failed after 100 attempts: " + last);
    }
  }
  throw InfeasibleParametersError("unknown generator");
}

}  // namespace unsg

#endif  // UNSG_GENERATORS_HPP_
