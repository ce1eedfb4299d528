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

// Scenario files (TOML). Every section and key is optional except where
// noted; unknown sections and keys are errors. `to_toml` writes the
// canonical form: every key, fixed order, shortest round-trip numbers.

#ifndef UNSG_CONFIG_HPP_
#define UNSG_CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <toml.hpp>

#include "unsg/baselines.hpp"
#include "unsg/error.hpp"
#include "unsg/game.hpp"
#include "unsg/generators.hpp"
#include "unsg/metrics.hpp"
#include "unsg/tso.hpp"

namespace unsg {

struct DefenderConfig {
  int count = 1;
  int candidates = 1;
  CandidateRule rule = CandidateRule::kNearTargets;
  // every defender draws from the same candidate list
  bool shared = true;
  bool allow_duplicates = true;
};

struct SweepGrid {
  std::vector<double> tau{0.2, 0.1, 0.05};
  std::vector<double> update_percentage{0.1, 0.05, 0.025};
  std::vector<double> tau_decay{0.9, 0.7, 0.5};
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 3407;  // training seed
  std::string output_dir = "runs";
  GeneratorParams graph;
  std::uint64_t graph_seed = 1;
  DefenderConfig defenders;
  TsoHyperparameters tso;
  PolicyOptions tso_policy;
  TsoHyperparameters nal = flat_nal_defaults();
  PolicyOptions nal_policy;
  DoubleOracleOptions double_oracle;
  int rollouts = 1000;
  long long enumeration_cap = static_cast<long long>(kDefaultEnumerationCap);
  SweepGrid sweep;

  void validate() const {
    tso.validate();
    nal.validate();
    if (tso_policy.hidden < 1 || nal_policy.hidden < 1) throw ConfigError("hidden width must be positive");
    if (defenders.count < 1) throw ConfigError("defenders.count must be positive");
    if (defenders.candidates < 1) throw ConfigError("defenders.candidates must be positive");
    if (rollouts < 1) throw ConfigError("evaluation.rollouts must be positive");
    if (enumeration_cap < 1) throw ConfigError("evaluation.enumeration_cap must be positive");
    if (double_oracle.max_iterations < 1) throw ConfigError("double_oracle.max_iterations must be positive");
    if (!(double_oracle.restricted_tolerance > 0)) throw ConfigError("double_oracle.restricted_tolerance must be positive");
    if (double_oracle.restricted_max_iters < 1) throw ConfigError("double_oracle.restricted_max_iters must be positive");
    if (double_oracle.sample_budget < 0) throw ConfigError("double_oracle.sample_budget must be nonnegative");
    if (graph.kind == GeneratorKind::kFile && graph.path.empty()) throw ConfigError("graph.path is required for file graphs");
    if (graph.max_path_length < 1) throw ConfigError("graph.max_path_length must be positive");
    if (sweep.tau.empty() || sweep.update_percentage.empty() || sweep.tau_decay.empty())
      throw ConfigError("sweep lists must be nonempty");
  }
};

// Builds the instance: graph from (graph, graph_seed), candidate edges from
// graph_seed + 1 (+ defender index when not shared).
inline SecurityGame build_game(const ScenarioConfig& c) {
  GameGraph g = generate_graph(c.graph, c.graph_seed);
  DefenderSpec spec;
  spec.num_defenders = c.defenders.count;
  spec.allow_duplicate_edges = c.defenders.allow_duplicates;
  for (int i = 0; i < c.defenders.count; ++i) {
    const std::uint64_t s = c.graph_seed + 1 + (c.defenders.shared ? 0 : static_cast<std::uint64_t>(i));
    spec.candidate_edges.push_back(select_candidate_edges(g, c.defenders.candidates, c.defenders.rule, s));
  }
  return SecurityGame(std::move(g), std::move(spec));
}

namespace detail {

// Reads typed values out of one table and remembers which keys were used.
class TableReader {
 public:
  TableReader(const toml::table* t, std::string name) : table_(t), name_(std::move(name)) {}

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!table_) return;
    const toml::node* n = table_->get(key);
    if (!n) return;
    read(*n, key, out);
  }

  void finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_)
      if (!seen_.count(std::string(k.str())))
        throw ConfigError("unknown key '" + name_ + "." + std::string(k.str()) + "'");
  }

 private:
  [[noreturn]] void wrong(const char* key, const char* want) const {
    throw ConfigError("'" + name_ + "." + key + "' must be " + want);
  }
  void read(const toml::node& n, const char* key, double& out) const {
    if (auto v = n.value_exact<double>()) out = *v;
    else if (auto i = n.value_exact<std::int64_t>()) out = static_cast<double>(*i);
    else wrong(key, "a number");
  }
  void read(const toml::node& n, const char* key, bool& out) const {
    if (auto v = n.value_exact<bool>()) out = *v;
    else wrong(key, "a boolean");
  }
  void read(const toml::node& n, const char* key, std::string& out) const {
    if (auto v = n.value_exact<std::string>()) out = *v;
    else wrong(key, "a string");
  }
  void read(const toml::node& n, const char* key, long long& out) const {
    if (auto v = n.value_exact<std::int64_t>()) out = *v;
    else wrong(key, "an integer");
  }
  void read(const toml::node& n, const char* key, int& out) const {
    long long v = 0;
    read(n, key, v);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) wrong(key, "a 32-bit integer");
    out = static_cast<int>(v);
  }
  void read(const toml::node& n, const char* key, std::uint64_t& out) const {
    long long v = 0;
    read(n, key, v);
    if (v < 0) wrong(key, "a nonnegative integer");
    out = static_cast<std::uint64_t>(v);
  }
  void read(const toml::node& n, const char* key, std::vector<double>& out) const {
    const toml::array* a = n.as_array();
    if (!a) wrong(key, "an array of numbers");
    out.clear();
    for (const toml::node& e : *a) {
      double d = 0;
      read(e, key, d);
      out.push_back(d);
    }
  }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> seen_;
};

inline void read_tso(TableReader& r, TsoHyperparameters& hp, PolicyOptions& po) {
  r.get("total_iterations", hp.total_iterations);
  r.get("batch_size", hp.batch_size);
  r.get("learning_rate", hp.learning_rate);
  r.get("tau", hp.tau);
  r.get("epsilon", hp.epsilon);
  r.get("update_percentage", hp.update_percentage);
  r.get("lr_decay", hp.lr_decay);
  r.get("tau_decay", hp.tau_decay);
  r.get("update_epsilon", hp.update_epsilon);
  r.get("ablate_prune", hp.ablate_prune);
  r.get("log_prob_floor", hp.log_prob_floor);
  r.get("rejection_limit", hp.rejection_limit);
  r.get("eval_interval", hp.eval_interval);
  r.get("sample_budget", hp.sample_budget);
  r.get("record_wallclock", hp.record_wallclock);
  std::string mode = to_string(po.mode), opt = to_string(po.optimizer.kind);
  r.get("mode", mode);
  r.get("optimizer", opt);
  po.mode = parse_policy_mode(mode);
  po.optimizer.kind = parse_optimizer(opt);
  r.get("adam_beta1", po.optimizer.beta1);
  r.get("adam_beta2", po.optimizer.beta2);
  r.get("adam_epsilon", po.optimizer.epsilon);
  r.get("hidden", po.hidden);
  r.finish();
}

inline std::string toml_double(double x) {
  std::string s = format_double(x);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string toml_string(const std::string& s) {
  std::ostringstream out;
  out << toml::value<std::string>(s);
  return out.str();
}

inline std::string toml_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + toml_double(v[i]);
  return s + "]";
}

inline void write_tso(std::ostream& o, const char* section, const TsoHyperparameters& hp, const PolicyOptions& po) {
  o << "\n[" << section << "]\n";
  o << "total_iterations = " << hp.total_iterations << "\n";
  o << "batch_size = " << hp.batch_size << "\n";
  o << "learning_rate = " << toml_double(hp.learning_rate) << "\n";
  o << "tau = " << toml_double(hp.tau) << "\n";
  o << "epsilon = " << toml_double(hp.epsilon) << "\n";
  o << "update_percentage = " << toml_double(hp.update_percentage) << "\n";
  o << "lr_decay = " << toml_double(hp.lr_decay) << "\n";
  o << "tau_decay = " << toml_double(hp.tau_decay) << "\n";
  o << "update_epsilon = " << (hp.update_epsilon ? "true" : "false") << "\n";
  o << "ablate_prune = " << (hp.ablate_prune ? "true" : "false") << "\n";
  o << "log_prob_floor = " << toml_double(hp.log_prob_floor) << "\n";
  o << "rejection_limit = " << hp.rejection_limit << "\n";
  o << "eval_interval = " << hp.eval_interval << "\n";
  o << "sample_budget = " << hp.sample_budget << "\n";
  o << "record_wallclock = " << (hp.record_wallclock ? "true" : "false") << "\n";
  o << "mode = " << toml_string(to_string(po.mode)) << "\n";
  o << "optimizer = " << toml_string(to_string(po.optimizer.kind)) << "\n";
  o << "adam_beta1 = " << toml_double(po.optimizer.beta1) << "\n";
  o << "adam_beta2 = " << toml_double(po.optimizer.beta2) << "\n";
  o << "adam_epsilon = " << toml_double(po.optimizer.epsilon) << "\n";
  o << "hidden = " << po.hidden << "\n";
}

}  // namespace detail

inline ScenarioConfig parse_config(std::string_view text, const std::string& source = "config") {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  static const std::set<std::string> sections{"scenario", "graph", "defenders", "tso", "nal",
                                              "double_oracle", "evaluation", "sweep"};
  for (const auto& [k, v] : root) {
    if (!sections.count(std::string(k.str()))) throw ConfigError("unknown section '" + std::string(k.str()) + "'");
    if (!v.is_table()) throw ConfigError("'" + std::string(k.str()) + "' must be a table");
  }
  ScenarioConfig c;
  {
    detail::TableReader r(root["scenario"].as_table(), "scenario");
    r.get("name", c.name);
    r.get("seed", c.seed);
    r.get("output_dir", c.output_dir);
    r.finish();
  }
  {
    detail::TableReader r(root["graph"].as_table(), "graph");
    std::string kind = to_string(c.graph.kind);
    r.get("generator", kind);
    c.graph.kind = parse_generator_kind(kind);
    r.get("seed", c.graph_seed);
    r.get("nodes", c.graph.nodes);
    r.get("edges", c.graph.edges);
    r.get("rows", c.graph.rows);
    r.get("cols", c.graph.cols);
    r.get("path", c.graph.path);
    r.get("starts", c.graph.start_count);
    r.get("targets", c.graph.target_count);
    r.get("target_values", c.graph.target_values);
    r.get("max_path_length", c.graph.max_path_length);
    r.finish();
  }
  {
    detail::TableReader r(root["defenders"].as_table(), "defenders");
    r.get("count", c.defenders.count);
    r.get("candidates", c.defenders.candidates);
    std::string rule = to_string(c.defenders.rule);
    r.get("rule", rule);
    c.defenders.rule = parse_candidate_rule(rule);
    r.get("shared", c.defenders.shared);
    r.get("allow_duplicates", c.defenders.allow_duplicates);
    r.finish();
  }
  {
    detail::TableReader r(root["tso"].as_table(), "tso");
    detail::read_tso(r, c.tso, c.tso_policy);
  }
  {
    detail::TableReader r(root["nal"].as_table(), "nal");
    detail::read_tso(r, c.nal, c.nal_policy);
  }
  {
    detail::TableReader r(root["double_oracle"].as_table(), "double_oracle");
    r.get("max_iterations", c.double_oracle.max_iterations);
    r.get("restricted_tolerance", c.double_oracle.restricted_tolerance);
    r.get("restricted_max_iters", c.double_oracle.restricted_max_iters);
    r.get("gap_tolerance", c.double_oracle.gap_tolerance);
    r.get("sample_budget", c.double_oracle.sample_budget);
    r.get("record_wallclock", c.double_oracle.record_wallclock);
    r.finish();
  }
  {
    detail::TableReader r(root["evaluation"].as_table(), "evaluation");
    r.get("rollouts", c.rollouts);
    r.get("enumeration_cap", c.enumeration_cap);
    r.finish();
  }
  {
    detail::TableReader r(root["sweep"].as_table(), "sweep");
    r.get("tau", c.sweep.tau);
    r.get("update_percentage", c.sweep.update_percentage);
    r.get("tau_decay", c.sweep.tau_decay);
    r.finish();
  }
  try {
    c.validate();
  } catch (const InfeasibleParametersError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

inline std::string to_toml(const ScenarioConfig& c) {
  using detail::toml_double;
  using detail::toml_string;
  std::ostringstream o;
  o << "[scenario]\n";
  o << "name = " << toml_string(c.name) << "\n";
  o << "seed = " << c.seed << "\n";
  o << "output_dir = " << toml_string(c.output_dir) << "\n";
  o << "\n[graph]\n";
  o << "generator = " << toml_string(to_string(c.graph.kind)) << "\n";
  o << "seed = " << c.graph_seed << "\n";
  o << "nodes = " << c.graph.nodes << "\n";
  o << "edges = " << c.graph.edges << "\n";
  o << "rows = " << c.graph.rows << "\n";
  o << "cols = " << c.graph.cols << "\n";
  o << "path = " << toml_string(c.graph.path) << "\n";
  o << "starts = " << c.graph.start_count << "\n";
  o << "targets = " << c.graph.target_count << "\n";
  o << "target_values = " << detail::toml_list(c.graph.target_values) << "\n";
  o << "max_path_length = " << c.graph.max_path_length << "\n";
  o << "\n[defenders]\n";
  o << "count = " << c.defenders.count << "\n";
  o << "candidates = " << c.defenders.candidates << "\n";
  o << "rule = " << toml_string(to_string(c.defenders.rule)) << "\n";
  o << "shared = " << (c.defenders.shared ? "true" : "false") << "\n";
  o << "allow_duplicates = " << (c.defenders.allow_duplicates ? "true" : "false") << "\n";
  detail::write_tso(o, "tso", c.tso, c.tso_policy);
  detail::write_tso(o, "nal", c.nal, c.nal_policy);
  o << "\n[double_oracle]\n";
  o << "max_iterations = " << c.double_oracle.max_iterations << "\n";
  o << "restricted_tolerance = " << toml_double(c.double_oracle.restricted_tolerance) << "\n";
  o << "restricted_max_iters = " << c.double_oracle.restricted_max_iters << "\n";
  o << "gap_tolerance = " << toml_double(c.double_oracle.gap_tolerance) << "\n";
  o << "sample_budget = " << c.double_oracle.sample_budget << "\n";
  o << "record_wallclock = " << (c.double_oracle.record_wallclock ? "true" : "false") << "\n";
  o << "\n[evaluation]\n";
  o << "rollouts = " << c.rollouts << "\n";
  o << "enumeration_cap = " << c.enumeration_cap << "\n";
  o << "\n[sweep]\n";
  o << "tau = " << detail::toml_list(c.sweep.tau) << "\n";
  o << "update_percentage = " << detail::toml_list(c.sweep.update_percentage) << "\n";
  o << "tau_decay = " << detail::toml_list(c.sweep.tau_decay) << "\n";
  return o.str();
}

// FNV-1a of the canonical text; recorded in run manifests.
inline std::string config_hash(const ScenarioConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : to_toml(c)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << h;
  return o.str();
}

}  // namespace unsg

#endif  // UNSG_CONFIG_HPP_
