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

// Run orchestration: one algorithm on one scenario into one directory.
//
//   <dir>/config.toml      canonical scenario
//   <dir>/metrics.csv      shared schema, keyed by samples consumed
//   <dir>/manifest.json    hash, seed, version, wall-clock, status
//   <dir>/attacker.json    policy checkpoints (TSO, NAL)
//   <dir>/defender.json
//   <dir>/pools.json       double oracle only

#ifndef UNSG_EXPERIMENT_HPP_
#define UNSG_EXPERIMENT_HPP_

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "unsg/baselines.hpp"
#include "unsg/config.hpp"
#include "unsg/evaluator.hpp"
#include "unsg/metrics.hpp"
#include "unsg/policy.hpp"
#include "unsg/tso.hpp"

#ifndef UNSG_VERSION_STRING
#define UNSG_VERSION_STRING "v0.1.0"
#endif

namespace unsg {

inline constexpr const char* kVersion = UNSG_VERSION_STRING;

enum class Algorithm { kTso, kNal, kDoubleOracle };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kTso: return "tso";
    case Algorithm::kNal: return "nal";
    case Algorithm::kDoubleOracle: return "double_oracle";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "tso") return Algorithm::kTso;
  if (s == "nal") return Algorithm::kNal;
  if (s == "double_oracle") return Algorithm::kDoubleOracle;
  throw ConfigError("unknown algorithm '" + s + "'");
}

struct RunOptions {
  std::filesystem::path out_dir;
  int threads = 1;
};

struct RunSummary {
  Algorithm algorithm = Algorithm::kTso;
  std::filesystem::path dir;
  std::optional<double> final_gap;
  long long samples = 0;
  long long steps = 0;
  double wallclock_ms = 0.0;
};

namespace detail {

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  out << j.dump(2) << '\n';
}

inline std::shared_ptr<const EnumeratedGame> try_enumerate(const SecurityGame& game, long long cap) {
  try {
    return std::make_shared<const EnumeratedGame>(EnumeratedGame::build(game, static_cast<std::size_t>(cap)));
  } catch (const EnumerationOverflowError&) {
    return nullptr;
  }
}

template <class Trainer>
void train_into(Trainer& trainer, const std::filesystem::path& dir, const std::shared_ptr<const EnumeratedGame>& e,
                RunSummary& s, nlohmann::json& manifest) {
  if (e) trainer.set_enumerated(e);
  std::ofstream csv(dir / "metrics.csv");
  if (!csv) throw ConfigError("cannot write metrics in '" + dir.string() + "'");
  MetricsWriter writer(csv);
  auto checkpoint = [&] {
    const std::uint64_t fp = instance_fingerprint(trainer.game());
    write_json(dir / "attacker.json", trainer.attacker_policy().to_json(fp));
    write_json(dir / "defender.json", trainer.defender_policy().to_json(fp));
    manifest["checkpoints"] = {{"attacker", "attacker.json"}, {"defender", "defender.json"}};
  };
  try {
    trainer.train([&](const MetricsRow& r) {
      writer.write(r);
      s.steps = r.step;
      s.samples = r.samples;
      if (r.duality_gap) s.final_gap = *r.duality_gap;
    });
  } catch (const TrainingAbortError&) {
    // the failing step never reaches the optimizer, so these are last-good
    checkpoint();
    throw;
  }
  checkpoint();
}

}  // namespace detail

// Runs one algorithm. On failure the manifest is still written, with
// status "failed", and the error is rethrown.
inline RunSummary run_experiment(const ScenarioConfig& config, Algorithm algorithm, const RunOptions& opt) {
  namespace fs = std::filesystem;
  config.validate();
  fs::create_directories(opt.out_dir);
  {
    std::ofstream out(opt.out_dir / "config.toml");
    out << to_toml(config);
  }
  RunSummary s;
  s.algorithm = algorithm;
  s.dir = opt.out_dir;
  nlohmann::json manifest;
  manifest["format"] = "unsg-run";
  manifest["algorithm"] = to_string(algorithm);
  manifest["scenario"] = config.name;
  manifest["config_hash"] = config_hash(config);
  manifest["seed"] = config.seed;
  manifest["version"] = kVersion;
  manifest["threads"] = opt.threads;
  manifest["metrics"] = "metrics.csv";
  const auto start = std::chrono::steady_clock::now();
  auto finish = [&](const std::string& status, const std::string& error) {
    s.wallclock_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    manifest["status"] = status;
    if (!error.empty()) manifest["error"] = error;
    manifest["wallclock_ms"] = s.wallclock_ms;
    manifest["samples"] = s.samples;
    manifest["steps"] = s.steps;
    manifest["final_duality_gap"] = s.final_gap ? nlohmann::json(*s.final_gap) : nlohmann::json(nullptr);
    detail::write_json(opt.out_dir / "manifest.json", manifest);
  };
  try {
    const SecurityGame game = build_game(config);
    manifest["instance_fingerprint"] = instance_fingerprint(game);
    switch (algorithm) {
      case Algorithm::kTso: {
        auto e = detail::try_enumerate(game, config.enumeration_cap);
        TsoHyperparameters hp = config.tso;
        hp.evaluate_gap = e != nullptr;
        TsoTrainer trainer(game, hp, config.tso_policy, config.seed, opt.threads);
        detail::train_into(trainer, opt.out_dir, e, s, manifest);
        break;
      }
      case Algorithm::kNal: {
        auto e = detail::try_enumerate(game, config.enumeration_cap);
        if (!e) throw EnumerationOverflowError("flat NAL needs an enumerable instance");
        FlatNalTrainer trainer(game, config.nal, config.nal_policy, config.seed, opt.threads);
        detail::train_into(trainer, opt.out_dir, e, s, manifest);
        break;
      }
      case Algorithm::kDoubleOracle: {
        auto e = detail::try_enumerate(game, config.enumeration_cap);
        if (!e) throw EnumerationOverflowError("double oracle needs an enumerable instance");
        std::ofstream csv(opt.out_dir / "metrics.csv");
        MetricsWriter writer(csv);
        DoubleOracleResult r = double_oracle(*e, config.seed, config.double_oracle, [&](const MetricsRow& row) {
          writer.write(row);
          s.steps = row.step;
          s.samples = row.samples;
          s.final_gap = row.duality_gap;
        });
        detail::write_json(opt.out_dir / "pools.json", pool_manifest(*e, r));
        manifest["pools"] = "pools.json";
        manifest["converged"] = r.converged;
        break;
      }
    }
  } catch (const std::exception& ex) {
    finish("failed", ex.what());
    throw;
  }
  finish("ok", "");
  return s;
}

// --- drivers -------------------------------------------------------------------

inline std::string run_label(double tau, double up, double decay) {
  return "tau" + format_double(tau) + "_up" + format_double(up) + "_wt" + format_double(decay);
}

// Grid over (tau, update_percentage, tau_decay) on the TSO section; one run
// directory each and summary.csv with the final gaps.
inline std::vector<RunSummary> run_sweep(const ScenarioConfig& config, const RunOptions& opt) {
  std::vector<RunSummary> out;
  std::filesystem::create_directories(opt.out_dir);
  std::ofstream summary(opt.out_dir / "summary.csv");
  summary << "run,tau,update_percentage,tau_decay,final_duality_gap,samples\n";
  for (double tau : config.sweep.tau)
    for (double up : config.sweep.update_percentage)
      for (double decay : config.sweep.tau_decay) {
        ScenarioConfig c = config;
        c.tso.tau = tau;
        c.tso.update_percentage = up;
        c.tso.tau_decay = decay;
        RunOptions o = opt;
        const std::string label = run_label(tau, up, decay);
        o.out_dir = opt.out_dir / label;
        RunSummary s = run_experiment(c, Algorithm::kTso, o);
        summary << label << ',' << format_double(tau) << ',' << format_double(up) << ',' << format_double(decay) << ','
                << (s.final_gap ? format_double(*s.final_gap) : "") << ',' << s.samples << '\n';
        summary.flush();
        out.push_back(std::move(s));
      }
  return out;
}

// TSO with and without the prune step, otherwise identical.
inline std::pair<RunSummary, RunSummary> run_ablation(const ScenarioConfig& config, const RunOptions& opt) {
  std::filesystem::create_directories(opt.out_dir);
  ScenarioConfig with = config, without = config;
  with.tso.ablate_prune = false;
  without.tso.ablate_prune = true;
  RunOptions a = opt, b = opt;
  a.out_dir = opt.out_dir / "tso";
  b.out_dir = opt.out_dir / "tso_without_sp";
  RunSummary sa = run_experiment(with, Algorithm::kTso, a);
  RunSummary sb = run_experiment(without, Algorithm::kTso, b);
  std::ofstream summary(opt.out_dir / "summary.csv");
  summary << "variant,ablate_prune,final_duality_gap,samples\n";
  summary << "tso,false," << (sa.final_gap ? format_double(*sa.final_gap) : "") << ',' << sa.samples << '\n';
  summary << "tso_without_sp,true," << (sb.final_gap ? format_double(*sb.final_gap) : "") << ',' << sb.samples << '\n';
  return {sa, sb};
}

// --- reloading runs ----------------------------------------------------------------

inline nlohmann::json read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ConfigError("no manifest.json in '" + dir.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed manifest in '" + dir.string() + "': " + e.what());
  }
  if (j.value("format", "") != "unsg-run") throw ConfigError("'" + dir.string() + "' is not a run directory");
  return j;
}

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open '" + p.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed JSON in '" + p.string() + "': " + e.what());
  }
  return j;
}

// Mixed strategies of a finished run over the enumerated lists of `e`.
inline std::pair<MixedStrategy, MixedStrategy> load_run_strategies(const SecurityGame& game,
                                                                   const ScenarioConfig& config,
                                                                   const EnumeratedGame& e,
                                                                   const std::filesystem::path& dir) {
  const nlohmann::json m = read_manifest(dir);
  const Algorithm alg = parse_algorithm(m.at("algorithm").get<std::string>());
  const std::uint64_t fp = instance_fingerprint(game);
  auto load = [&](auto& policy, const char* file) { policy.load_json(read_json_file(dir / file), fp); };
  switch (alg) {
    case Algorithm::kTso: {
      AttackerTree at(game);
      DefenderTree dt(game);
      TreePolicy<AttackerTree> ap(at, config.tso_policy.mode, 0, config.tso_policy.hidden, config.tso_policy.optimizer);
      TreePolicy<DefenderTree> dp(dt, config.tso_policy.mode, 0, config.tso_policy.hidden, config.tso_policy.optimizer);
      load(ap, "attacker.json");
      load(dp, "defender.json");
      return {extract_mixed_strategy(ap, e.attacker_actions), extract_mixed_strategy(dp, e.defender_actions)};
    }
    case Algorithm::kNal: {
      FlatTree<AttackerAction> at(game);
      FlatTree<DefenderAction> dt(game);
      TreePolicy<FlatTree<AttackerAction>> ap(at, config.nal_policy.mode, 0, config.nal_policy.hidden,
                                              config.nal_policy.optimizer);
      TreePolicy<FlatTree<DefenderAction>> dp(dt, config.nal_policy.mode, 0, config.nal_policy.hidden,
                                              config.nal_policy.optimizer);
      load(ap, "attacker.json");
      load(dp, "defender.json");
      return {extract_mixed_strategy(ap, e.attacker_actions), extract_mixed_strategy(dp, e.defender_actions)};
    }
    case Algorithm::kDoubleOracle: {
      const nlohmann::json pools = read_json_file(dir / "pools.json");
      std::map<AttackerAction, Eigen::Index> ai;
      std::map<DefenderAction, Eigen::Index> di;
      for (std::size_t i = 0; i < e.attacker_actions.size(); ++i) ai[e.attacker_actions[i]] = static_cast<Eigen::Index>(i);
      for (std::size_t j = 0; j < e.defender_actions.size(); ++j) di[e.defender_actions[j]] = static_cast<Eigen::Index>(j);
      MixedStrategy x{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(e.attacker_actions.size()))};
      MixedStrategy y{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(e.defender_actions.size()))};
      for (const auto& a : pools.at("attacker_pool")) {
        AttackerAction act{a.at("path").get<std::vector<Vertex>>()};
        auto it = ai.find(act);
        if (it == ai.end()) throw InstanceMismatchError("pool path is not an action of this instance");
        x.probabilities[it->second] += a.at("weight").get<double>();
      }
      for (const auto& d : pools.at("defender_pool")) {
        DefenderAction act;
        for (const auto& ed : d.at("edges")) act.edges.emplace_back(ed.at(0).get<Vertex>(), ed.at(1).get<Vertex>());
        auto it = di.find(act);
        if (it == di.end()) throw InstanceMismatchError("pool allocation is not an action of this instance");
        y.probabilities[it->second] += d.at("weight").get<double>();
      }
      return {x, y};
    }
  }
  throw ConfigError("unreachable");
}

// Samplers that play a finished run's policies (or the tree-uniform policy
// when `dir` is empty). They keep the loaded policies alive themselves.
struct RunSamplers {
  AttackerSampler attacker;
  DefenderSampler defender;
};

namespace detail {

template <class ATree, class DTree>
struct LoadedPolicies {
  ATree at;
  DTree dt;
  TreePolicy<ATree> ap;
  TreePolicy<DTree> dp;
  LoadedPolicies(const SecurityGame& g, const PolicyOptions& po)
      : at(g), dt(g), ap(at, po.mode, 0, po.hidden, po.optimizer), dp(dt, po.mode, 0, po.hidden, po.optimizer) {}
};

template <class ATree, class DTree>
RunSamplers samplers_from(std::shared_ptr<LoadedPolicies<ATree, DTree>> held) {
  return {[held](std::mt19937_64& rng) { return sample_action(held->ap, rng).action; },
          [held](std::mt19937_64& rng) { return sample_action(held->dp, rng).action; }};
}

}  // namespace detail

inline RunSamplers load_run_samplers(const SecurityGame& game, const ScenarioConfig& config,
                                     const std::filesystem::path& dir) {
  using Tree = detail::LoadedPolicies<AttackerTree, DefenderTree>;
  using Flat = detail::LoadedPolicies<FlatTree<AttackerAction>, FlatTree<DefenderAction>>;
  if (dir.empty()) return detail::samplers_from(std::make_shared<Tree>(game, PolicyOptions{}));
  const nlohmann::json m = read_manifest(dir);
  const std::uint64_t fp = instance_fingerprint(game);
  switch (parse_algorithm(m.at("algorithm").get<std::string>())) {
    case Algorithm::kTso: {
      auto held = std::make_shared<Tree>(game, config.tso_policy);
      held->ap.load_json(read_json_file(dir / "attacker.json"), fp);
      held->dp.load_json(read_json_file(dir / "defender.json"), fp);
      return detail::samplers_from(held);
    }
    case Algorithm::kNal: {
      auto held = std::make_shared<Flat>(game, config.nal_policy);
      held->ap.load_json(read_json_file(dir / "attacker.json"), fp);
      held->dp.load_json(read_json_file(dir / "defender.json"), fp);
      return detail::samplers_from(held);
    }
    case Algorithm::kDoubleOracle: {
      const nlohmann::json pools = read_json_file(dir / "pools.json");
      std::vector<AttackerAction> ap;
      std::vector<DefenderAction> dp;
      std::vector<double> aw, dw;
      for (const auto& a : pools.at("attacker_pool")) {
        ap.push_back({a.at("path").get<std::vector<Vertex>>()});
        aw.push_back(a.at("weight").get<double>());
      }
      for (const auto& d : pools.at("defender_pool")) {
        DefenderAction act;
        for (const auto& ed : d.at("edges")) act.edges.emplace_back(ed.at(0).get<Vertex>(), ed.at(1).get<Vertex>());
        dp.push_back(std::move(act));
        dw.push_back(d.at("weight").get<double>());
      }
      return {pool_sampler(std::move(ap), std::move(aw)), pool_sampler(std::move(dp), std::move(dw))};
    }
  }
  throw ConfigError("unreachable");
}

}  // namespace unsg

#endif  // UNSG_EXPERIMENT_HPP_
