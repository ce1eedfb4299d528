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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "unsg/unsg.hpp"

#ifndef UNSG_PRESET_DIR
#define UNSG_PRESET_DIR "presets"
#endif

namespace unsg {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("unsg_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ScenarioConfig tiny_config() {
  ScenarioConfig c;
  c.name = "tiny";
  c.graph.nodes = 8;
  c.graph.edges = 12;
  c.graph.max_path_length = 5;
  c.defenders.count = 1;
  c.defenders.candidates = 4;
  c.tso.total_iterations = 60;
  c.tso.batch_size = 16;
  c.nal.total_iterations = 60;
  c.nal.batch_size = 16;
  return c;
}

ScenarioConfig preset(const std::string& file) { return load_config(std::string(UNSG_PRESET_DIR) + "/" + file); }

TEST(Config, DefaultsRoundTripCanonically) {
  ScenarioConfig c;
  const std::string text = to_toml(c);
  EXPECT_EQ(to_toml(parse_config(text)), text);
}

TEST(Config, PresetsRoundTripCanonically) {
  for (const char* f : {"s1.toml", "m1.toml", "m2.toml", "m3.toml", "m4.toml", "l1.toml"}) {
    const std::string raw = slurp(std::string(UNSG_PRESET_DIR) + "/" + f);
    const ScenarioConfig once = parse_config(raw);
    const std::string canonical = to_toml(once);
    EXPECT_EQ(to_toml(parse_config(canonical)), canonical) << f;
    EXPECT_EQ(config_hash(once), config_hash(parse_config(canonical))) << f;
  }
}

TEST(Config, PartialFileTakesDefaults) {
  ScenarioConfig c = parse_config("[tso]\nlearning_rate = 0.5\nbatch_size = 8\n");
  EXPECT_EQ(c.tso.learning_rate, 0.5);
  EXPECT_EQ(c.tso.batch_size, 8);
  EXPECT_EQ(c.tso.tau, 0.05);
  EXPECT_EQ(c.nal.tau, 0.1);
  EXPECT_TRUE(c.nal.ablate_prune);
  // integers are accepted where numbers are expected
  EXPECT_EQ(parse_config("[tso]\ntau = 1\n").tso.tau, 1.0);
}

TEST(Config, RejectsUnknownKeysSectionsAndTypes) {
  EXPECT_THROW(parse_config("[graph]\nnodez = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("[graphs]\nnodes = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("[tso]\nbatch_size = \"big\"\n"), ConfigError);
  EXPECT_THROW(parse_config("[tso]\nbatch_size = 2.5\n"), ConfigError);
  EXPECT_THROW(parse_config("[defenders]\nrule = \"closest\"\n"), ConfigError);
  EXPECT_THROW(parse_config("[tso]\nmode = \"deep\"\n"), ConfigError);
  EXPECT_THROW(parse_config("graph = 3\n"), ConfigError);
  // validation failures surface as configuration errors too
  EXPECT_THROW(parse_config("[tso]\nepsilon = 1.0\n"), ConfigError);
  EXPECT_THROW(parse_config("[evaluation]\nrollouts = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("[graph]\ngenerator = \"file\"\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/x.toml"), ConfigError);
}

TEST(Config, ParseErrorsCarryLineNumbers) {
  try {
    parse_config("[tso]\nbatch_size = 4\ntau = = 3\n", "bad.toml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.toml:3"), std::string::npos) << e.what();
  }
}

// Published scenario shapes.
TEST(Presets, MatchScenarioShapes) {
  struct Row {
    const char* file;
    const char* name;
    int nodes, edges, exits, len, defenders, locations;
  };
  const Row rows[] = {{"s1.toml", "S-1", 16, 40, 1, 9, 2, 11},       {"m1.toml", "M-1", 64, 300, 4, 8, 1, 150},
                      {"m2.toml", "M-2", 64, 300, 4, 9, 1, 150},     {"m3.toml", "M-3", 64, 300, 4, 10, 1, 150},
                      {"m4.toml", "M-4", 64, 300, 4, 7, 2, 150},     {"l1.toml", "L-1", 10000, 31660, 4, 100, 1, 31660}};
  for (const Row& r : rows) {
    ScenarioConfig c = preset(r.file);
    EXPECT_EQ(c.name, r.name);
    EXPECT_EQ(c.graph.nodes, r.nodes) << r.file;
    EXPECT_EQ(c.graph.edges, r.edges) << r.file;
    EXPECT_EQ(c.graph.target_count, r.exits) << r.file;
    EXPECT_EQ(c.graph.max_path_length, r.len) << r.file;
    EXPECT_EQ(c.defenders.count, r.defenders) << r.file;
    const int locations = c.defenders.rule == CandidateRule::kAll ? c.graph.edges : c.defenders.candidates;
    EXPECT_EQ(locations, r.locations) << r.file;
    EXPECT_TRUE(c.defenders.shared);
    EXPECT_TRUE(c.defenders.allow_duplicates);
    // shipped training defaults
    EXPECT_EQ(c.tso.learning_rate, 1e-4);
    EXPECT_EQ(c.tso.tau, 0.05);
    EXPECT_EQ(c.tso.batch_size, 100);
    EXPECT_EQ(c.tso.total_iterations, 50000);
    EXPECT_EQ(c.tso.lr_decay, 0.8);
    EXPECT_EQ(c.tso.tau_decay, 0.7);
    EXPECT_EQ(c.tso.update_percentage, 0.01);
    EXPECT_EQ(c.tso.epsilon, 0.8);
    EXPECT_FALSE(c.tso.update_epsilon);
    EXPECT_EQ(c.seed, 3407u);
    EXPECT_EQ(c.nal.tau, 0.1);
    EXPECT_EQ(c.nal.lr_decay, 0.9);
    EXPECT_EQ(c.nal.update_percentage, 0.1);
  }
}

TEST(Presets, BuildS1AndM1Shapes) {
  SecurityGame s1 = build_game(preset("s1.toml"));
  EXPECT_EQ(s1.graph().vertex_count(), 16);
  EXPECT_EQ(s1.graph().edge_count(), 40);
  EXPECT_EQ(s1.graph().target_vertices().size(), 1u);
  EXPECT_EQ(enumerate_defender_actions(s1.defenders()).size(), 121u);
  SecurityGame m1 = build_game(preset("m1.toml"));
  EXPECT_EQ(m1.graph().edge_count(), 300);
  EXPECT_EQ(m1.graph().target_vertices().size(), 4u);
  EXPECT_EQ(enumerate_defender_actions(m1.defenders()).size(), 150u);
}

TEST(Experiment, IdenticalMetricsForSameSeedAcrossThreadCounts) {
  for (Algorithm alg : {Algorithm::kTso, Algorithm::kNal, Algorithm::kDoubleOracle}) {
    const fs::path d = scratch_dir("determinism_" + to_string(alg));
    ScenarioConfig c = tiny_config();
    run_experiment(c, alg, {d / "a", 1});
    run_experiment(c, alg, {d / "b", 3});
    const std::string a = slurp(d / "a" / "metrics.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(d / "b" / "metrics.csv")) << to_string(alg);
    std::istringstream in(a);
    EXPECT_GT(validate_metrics_csv(in), 1u);
    c.seed += 1;
    run_experiment(c, alg, {d / "c", 1});
    if (alg != Algorithm::kDoubleOracle) EXPECT_NE(a, slurp(d / "c" / "metrics.csv"));
  }
}

TEST(Experiment, ManifestAndCheckpointsReload) {
  const fs::path d = scratch_dir("manifest");
  ScenarioConfig c = tiny_config();
  RunSummary s = run_experiment(c, Algorithm::kTso, {d, 2});
  nlohmann::json m = read_manifest(d);
  EXPECT_EQ(m["status"], "ok");
  EXPECT_EQ(m["algorithm"], "tso");
  EXPECT_EQ(m["config_hash"], config_hash(c));
  EXPECT_EQ(m["seed"], c.seed);
  EXPECT_EQ(std::string(m["version"]).rfind("v", 0), 0u);
  EXPECT_TRUE(m.contains("wallclock_ms"));
  EXPECT_EQ(m["samples"], s.samples);
  // the stored canonical config reproduces the hash
  EXPECT_EQ(config_hash(load_config((d / "config.toml").string())), config_hash(c));
  SecurityGame game = build_game(c);
  EnumeratedGame e = EnumeratedGame::build(game);
  auto [x, y] = load_run_strategies(game, c, e, d);
  ASSERT_TRUE(s.final_gap.has_value());
  EXPECT_NEAR(duality_gap(x, y, e.payoff), *s.final_gap, 1e-12);
}

TEST(Experiment, MatchedBudgetCapsEveryAlgorithm) {
  const fs::path d = scratch_dir("budget");
  ScenarioConfig c = tiny_config();
  c.tso.total_iterations = 1000;
  c.tso.sample_budget = 5000;
  c.double_oracle.sample_budget = 5000;
  RunSummary t = run_experiment(c, Algorithm::kTso, {d / "tso", 1});
  RunSummary o = run_experiment(c, Algorithm::kDoubleOracle, {d / "do", 1});
  EXPECT_LE(t.samples, 5000);
  EXPECT_GT(t.samples, 5000 - 2 * c.tso.batch_size);
  EXPECT_LE(o.samples, 5000);
}

TEST(Experiment, FailedRunStillWritesManifest) {
  const fs::path d = scratch_dir("failed");
  {
    std::ofstream g(d / "line.txt");
    g << "nodes 2\nedge 0 1\nstart 0\ntarget 1 1.0\nmax_path_length 2\n";
  }
  ScenarioConfig c = tiny_config();
  c.graph.kind = GeneratorKind::kFile;
  c.graph.path = (d / "line.txt").string();
  c.defenders.candidates = 1;
  EXPECT_THROW(run_experiment(c, Algorithm::kTso, {d / "run", 1}), DegenerateInstanceError);
  nlohmann::json m = read_manifest(d / "run");
  EXPECT_EQ(m["status"], "failed");
  EXPECT_FALSE(std::string(m["error"]).empty());
}

TEST(Experiment, NonEnumerableRequestsAreRefused) {
  ScenarioConfig c = tiny_config();
  c.enumeration_cap = 3;
  const fs::path d = scratch_dir("refuse");
  EXPECT_THROW(run_experiment(c, Algorithm::kDoubleOracle, {d / "do", 1}), EnumerationOverflowError);
  EXPECT_THROW(run_experiment(c, Algorithm::kNal, {d / "nal", 1}), EnumerationOverflowError);
  // TSO still trains, without gap columns
  RunSummary s = run_experiment(c, Algorithm::kTso, {d / "tso", 1});
  EXPECT_FALSE(s.final_gap.has_value());
  std::ifstream in(d / "tso" / "metrics.csv");
  EXPECT_GT(validate_metrics_csv(in), 1u);
}

TEST(Experiment, SweepRunsTheFullGrid) {
  const fs::path d = scratch_dir("sweep");
  ScenarioConfig c = tiny_config();
  c.tso.total_iterations = 10;
  c.tso.batch_size = 4;
  auto runs = run_sweep(c, {d, 1});
  EXPECT_EQ(runs.size(), 27u);
  std::ifstream in(d / "summary.csv");
  std::string line;
  int rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line, "run,tau,update_percentage,tau_decay,final_duality_gap,samples");
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 27);
  for (const auto& r : runs) {
    std::ifstream csv(r.dir / "metrics.csv");
    EXPECT_GT(validate_metrics_csv(csv), 1u);
  }
  ScenarioConfig best = load_config((d / run_label(0.1, 0.1, 0.5) / "config.toml").string());
  EXPECT_EQ(best.tso.tau, 0.1);
  EXPECT_EQ(best.tso.update_percentage, 0.1);
  EXPECT_EQ(best.tso.tau_decay, 0.5);
}

TEST(Experiment, AblationPairDiffersOnlyInPrune) {
  const fs::path d = scratch_dir("ablate");
  auto [a, b] = run_ablation(tiny_config(), {d, 1});
  std::istringstream ta(slurp(a.dir / "config.toml")), tb(slurp(b.dir / "config.toml"));
  std::string la, lb;
  int differing = 0;
  while (std::getline(ta, la) && std::getline(tb, lb))
    if (la != lb) {
      ++differing;
      EXPECT_EQ(la, "ablate_prune = false");
      EXPECT_EQ(lb, "ablate_prune = true");
    }
  EXPECT_EQ(differing, 1);
  EXPECT_TRUE(fs::exists(d / "summary.csv"));
}

TEST(Experiment, WinRateFromRunsAndUniform) {
  const fs::path d = scratch_dir("winrate");
  ScenarioConfig c = tiny_config();
  run_experiment(c, Algorithm::kTso, {d / "tso", 1});
  run_experiment(c, Algorithm::kDoubleOracle, {d / "do", 1});
  SecurityGame game = build_game(c);
  std::vector<std::pair<std::string, AttackerSampler>> as{{"tso", load_run_samplers(game, c, d / "tso").attacker},
                                                          {"uniform", load_run_samplers(game, c, {}).attacker}};
  std::vector<std::pair<std::string, DefenderSampler>> ds{{"do", load_run_samplers(game, c, d / "do").defender}};
  WinRateMatrix m = win_rate_matrix(game, as, ds, 4000, 1, 2);
  // the double-oracle defender holds every attacker to the game value
  EnumeratedGame e = EnumeratedGame::build(game);
  auto [x, y] = load_run_strategies(game, c, e, d / "do");
  const double value = x.probabilities.dot(e.payoff * y.probabilities);
  const double win_at_value = (1.0 + value) / 2.0;  // unit target values
  EXPECT_LE(m.rates(0, 0), win_at_value + 4 * std::sqrt(0.25 / 4000));
  EXPECT_LE(m.rates(1, 0), win_at_value + 4 * std::sqrt(0.25 / 4000));
}

}  // namespace
}  // namespace unsg
