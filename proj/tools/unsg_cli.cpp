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

// unsg: command-line front end.
//
// Exit codes: 0 success, 2 configuration error (bad flags, bad config,
// instance too large for the request), 3 runtime abort.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "unsg/unsg.hpp"

#ifndef UNSG_PRESET_DIR
#define UNSG_PRESET_DIR "presets"
#endif

namespace fs = std::filesystem;

namespace {

constexpr int kConfigExit = 2;
constexpr int kAbortExit = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 1;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config = true) {
  auto* opt = cmd->add_option("--config", c.config, "scenario TOML file");
  if (needs_config) opt->required();
  cmd->add_option("--seed", c.seed, "training seed (overrides the config)");
  cmd->add_option("--out", c.out, "output directory (overrides the config)");
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

unsg::ScenarioConfig load(const Common& c) {
  unsg::ScenarioConfig cfg = unsg::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

void report(const unsg::RunSummary& s) {
  std::cout << unsg::to_string(s.algorithm) << ": " << s.steps << " steps, " << s.samples << " samples";
  if (s.final_gap) std::cout << ", duality gap " << unsg::format_double(*s.final_gap);
  std::cout << " -> " << s.dir.string() << "\n";
}

std::string label_of(const std::string& run) {
  if (run == "uniform") return run;
  fs::path p(run);
  if (p.filename().empty()) p = p.parent_path();
  return p.filename().string();
}

int list_presets(const std::string& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw unsg::ConfigError("preset directory '" + dir + "' not found");
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".toml") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::cout << "name,nodes,edges,exits,max_path_length,defenders,locations,file\n";
  for (const auto& f : files) {
    unsg::ScenarioConfig c = unsg::load_config(f.string());
    std::cout << c.name << ',' << c.graph.nodes << ',' << c.graph.edges << ',' << c.graph.target_count << ','
              << c.graph.max_path_length << ',' << c.defenders.count << ','
              << (c.defenders.rule == unsg::CandidateRule::kAll ? c.graph.edges : c.defenders.candidates) << ','
              << f.filename().string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solver workbench for urban network security games"};
  app.require_subcommand(1);
  Common common;

  auto* gen = app.add_subcommand("gen-graph", "generate the scenario graph and write it as a graph file");
  add_common(gen, common);
  auto* tso = app.add_subcommand("train-tso", "train tree-based policies");
  add_common(tso, common);
  auto* nal = app.add_subcommand("train-nal", "train flat NAL policies");
  add_common(nal, common);
  auto* dor = app.add_subcommand("run-do", "exact double oracle");
  add_common(dor, common);

  std::vector<std::string> runs;
  auto* gap = app.add_subcommand("eval-gap", "exact duality gap of finished runs");
  add_common(gap, common);
  gap->add_option("--run", runs, "run directory")->required();

  std::vector<std::string> attackers, defenders;
  int rollouts = 0;
  auto* win = app.add_subcommand("eval-winrate", "Monte-Carlo attacker win-rate matrix");
  add_common(win, common);
  win->add_option("--attacker", attackers, "run directory or 'uniform'")->required();
  win->add_option("--defender", defenders, "run directory or 'uniform'")->required();
  win->add_option("--rollouts", rollouts, "rollouts per cell (default from the config)");

  auto* abl = app.add_subcommand("ablate-sp", "TSO with and without the prune step");
  add_common(abl, common);
  auto* sweep = app.add_subcommand("sweep", "grid over tau, update percentage and tau decay");
  add_common(sweep, common);

  std::string preset_dir = UNSG_PRESET_DIR;
  auto* presets = app.add_subcommand("presets", "list the shipped scenario presets");
  presets->add_option("--dir", preset_dir, "preset directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (presets->parsed()) return list_presets(preset_dir);
    const unsg::ScenarioConfig cfg = load(common);
    const fs::path out = cfg.output_dir;
    unsg::RunOptions ro{out, common.threads};

    if (gen->parsed()) {
      const unsg::SecurityGame game = unsg::build_game(cfg);
      fs::create_directories(out);
      unsg::write_graph_file((out / "graph.txt").string(), game.graph());
      std::cout << "graph: " << game.graph().vertex_count() << " nodes, " << game.graph().edge_count()
                << " edges -> " << (out / "graph.txt").string() << "\n";
      std::cout << "defender candidates:";
      for (const auto& list : game.defenders().candidate_edges) std::cout << " " << list.size();
      std::cout << "\n";
    } else if (tso->parsed()) {
      report(unsg::run_experiment(cfg, unsg::Algorithm::kTso, ro));
    } else if (nal->parsed()) {
      report(unsg::run_experiment(cfg, unsg::Algorithm::kNal, ro));
    } else if (dor->parsed()) {
      report(unsg::run_experiment(cfg, unsg::Algorithm::kDoubleOracle, ro));
    } else if (abl->parsed()) {
      auto [a, b] = unsg::run_ablation(cfg, ro);
      report(a);
      report(b);
    } else if (sweep->parsed()) {
      for (const auto& s : unsg::run_sweep(cfg, ro)) report(s);
    } else if (gap->parsed()) {
      const unsg::SecurityGame game = unsg::build_game(cfg);
      const unsg::EnumeratedGame e = unsg::EnumeratedGame::build(game, static_cast<std::size_t>(cfg.enumeration_cap));
      std::cout << "run,duality_gap,attacker_term,defender_term,value\n";
      for (const auto& r : runs) {
        auto [x, y] = unsg::load_run_strategies(game, cfg, e, r);
        const unsg::GapReport g = unsg::duality_gap_report(x, y, e.payoff);
        std::cout << r << ',' << unsg::format_double(g.gap) << ',' << unsg::format_double(g.attacker_term) << ','
                  << unsg::format_double(g.defender_term) << ',' << unsg::format_double(g.value) << "\n";
      }
    } else if (win->parsed()) {
      const unsg::SecurityGame game = unsg::build_game(cfg);
      std::vector<std::pair<std::string, unsg::AttackerSampler>> as;
      std::vector<std::pair<std::string, unsg::DefenderSampler>> ds;
      for (const auto& r : attackers)
        as.emplace_back(label_of(r), unsg::load_run_samplers(game, cfg, r == "uniform" ? fs::path() : fs::path(r)).attacker);
      for (const auto& r : defenders)
        ds.emplace_back(label_of(r), unsg::load_run_samplers(game, cfg, r == "uniform" ? fs::path() : fs::path(r)).defender);
      const unsg::WinRateMatrix m =
          unsg::win_rate_matrix(game, as, ds, rollouts > 0 ? rollouts : cfg.rollouts, cfg.seed, common.threads);
      fs::create_directories(out);
      std::ofstream csv(out / "winrate.csv");
      unsg::write_win_rate_csv(csv, m);
      unsg::write_win_rate_csv(std::cout, m);
    }
    return 0;
  } catch (const unsg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const unsg::InfeasibleParametersError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const unsg::EnumerationOverflowError& e) {
    std::cerr << "refused: " << e.what() << " (this scenario is not enumerable)\n";
    return kConfigExit;
  } catch (const unsg::InstanceMismatchError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return kAbortExit;
  }
}
