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

// Plain-text graph files.
//
//   # comment (also allowed after a directive)
//   nodes <n>                         first directive, exactly once
//   edge <u> <v>                      one per line, undirected
//   start <v> [<v> ...]               one or more lines
//   target <v> <value> [<v> <value>]  one or more lines, value > 0
//   max_path_length <L>               optional
//
// Any other directive is rejected. Vertices are 0-based.

#ifndef UNSG_GRAPH_IO_HPP_
#define UNSG_GRAPH_IO_HPP_

#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "unsg/error.hpp"
#include "unsg/game.hpp"

namespace unsg {

struct GraphFile {
  int vertex_count = 0;
  std::vector<Edge> edges;
  std::vector<Vertex> starts;
  std::map<Vertex, double> targets;
  std::optional<int> max_path_length;

  GameGraph build(std::optional<int> fallback_max_path_length = std::nullopt) const {
    auto len = max_path_length ? max_path_length : fallback_max_path_length;
    if (!len) throw ConfigError("graph file has no max_path_length and none was configured");
    return GameGraph(vertex_count, edges, starts, targets, *len);
  }
};

inline GraphFile parse_graph(std::istream& in) {
  GraphFile out;
  bool have_nodes = false;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) -> ConfigError {
    return ConfigError("graph file line " + std::to_string(line_no) + ": " + msg);
  };
  auto read_int = [&](std::istringstream& ss, const char* what) {
    long long v;
    if (!(ss >> v)) throw fail(std::string("expected ") + what);
    if (v < 0 || v > std::numeric_limits<int>::max()) throw fail(std::string(what) + " out of range");
    return static_cast<int>(v);
  };
  auto vertex = [&](std::istringstream& ss) {
    int v = read_int(ss, "vertex");
    if (v >= out.vertex_count) throw fail("vertex " + std::to_string(v) + " out of range");
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string directive;
    if (!(ss >> directive)) continue;
    if (!have_nodes && directive != "nodes") throw fail("first directive must be 'nodes'");
    if (directive == "nodes") {
      if (have_nodes) throw fail("duplicate 'nodes' directive");
      out.vertex_count = read_int(ss, "vertex count");
      have_nodes = true;
    } else if (directive == "edge") {
      int u = vertex(ss);
      int v = vertex(ss);
      out.edges.emplace_back(u, v);
    } else if (directive == "start") {
      out.starts.push_back(vertex(ss));
      int v;
      while (ss >> v) {
        if (v < 0 || v >= out.vertex_count) throw fail("start vertex out of range");
        out.starts.push_back(v);
      }
    } else if (directive == "target") {
      bool any = false;
      while (true) {
        long long v;
        if (!(ss >> v)) break;
        if (v < 0 || v >= out.vertex_count) throw fail("target vertex out of range");
        double value;
        if (!(ss >> value)) throw fail("target vertex without a value");
        out.targets[static_cast<Vertex>(v)] = value;
        any = true;
      }
      if (!any) throw fail("'target' needs at least one vertex/value pair");
    } else if (directive == "max_path_length") {
      out.max_path_length = read_int(ss, "path length");
    } else {
      throw fail("unknown directive '" + directive + "'");
    }
    if (directive != "start" && directive != "target") {
      std::string extra;
      if (ss >> extra) throw fail("trailing token '" + extra + "'");
    } else if (!ss.eof()) {
      ss.clear();
      std::string extra;
      if (ss >> extra) throw fail("trailing token '" + extra + "'");
    }
  }
  if (!have_nodes) throw ConfigError("graph file is empty");
  return out;
}

inline GraphFile read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open graph file '" + path + "'");
  return parse_graph(in);
}

inline void write_graph(std::ostream& out, const GameGraph& g) {
  out << "nodes " << g.vertex_count() << "\n";
  for (const Edge& e : g.edges()) out << "edge " << e.u << " " << e.v << "\n";
  out << "start";
  for (Vertex s : g.start_vertices()) out << " " << s;
  out << "\n";
  out << std::setprecision(17);
  for (const auto& [t, value] : g.target_values()) out << "target " << t << " " << value << "\n";
  out << "max_path_length " << g.max_path_length() << "\n";
}

inline void write_graph_file(const std::string& path, const GameGraph& g) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write graph file '" + path + "'");
  write_graph(out, g);
}

}  // namespace unsg

#endif  // UNSG_GRAPH_IO_HPP_
