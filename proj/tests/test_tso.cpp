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

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "checks.hpp"
#include "oracles.hpp"
#include "test_instances.hpp"
#include "unsg/tso.hpp"

namespace unsg {
namespace {

using testing::diamond_game;
using testing::k4_game;

TEST(SampleAndPrune, DiamondExamples) {
  SecurityGame game = diamond_game();
  AttackerTree tree(game);
  TreePolicy<AttackerTree> policy(tree, PolicyMode::kTabular);
  AttackerHistory fork = tree.root();
  tree.advance(fork, 0);  // the single start
  policy.node_logits(fork) = {std::log(0.9), std::log(0.1)};
  std::mt19937_64 rng(1);
  PrunedDraw<AttackerTree> d;
  DrawScratch<AttackerTree> s;
  for (int i = 0; i < 200; ++i) {
    sample_and_prune(policy, 0.0, rng, d, s);
    EXPECT_NE(d.alt.action, d.first.action);
    EXPECT_NEAR(d.p, 1.0, 1e-12);
  }
  TreePolicy<AttackerTree> uniform(tree, PolicyMode::kTabular);
  sample_and_prune(uniform, 0.8, rng, d, s);
  EXPECT_NEAR(d.p, 1.0, 1e-12);
  EXPECT_NEAR(std::exp(d.alt.log_pure), 0.5, 1e-15);
}

TEST(SampleAndPrune, ChiSquareOnK4) {
  SecurityGame game = k4_game();
  AttackerTree tree(game);
  auto actions = enumerate_attacker_actions(game.graph());
  ASSERT_EQ(actions.size(), 5u);
  TreePolicy<AttackerTree> policy(tree, PolicyMode::kTabular);
  std::mt19937_64 rng(3);
  testing::randomize_tabular(policy, rng, 1.5);
  auto law = testing::prune_law(policy, actions, 0.8, 100000, 64, 5);
  EXPECT_GT(law.p_value, 0.001);
  EXPECT_EQ(law.alt_equal_first, 0);
  EXPECT_LT(law.max_prob_error, 1e-12);
  // the guided draw alone, with heavy concentration to stress it
  testing::randomize_tabular(policy, rng, 3.0);
  law = testing::prune_law(policy, actions, 0.3, 100000, 0, 6);
  EXPECT_GT(law.p_value, 0.001);
  EXPECT_EQ(law.alt_equal_first, 0);
  EXPECT_LT(law.max_prob_error, 1e-12);
}

TEST(SampleAndPrune, ChiSquareOnDefenderProduct) {
  SecurityGame game = testing::s1_shape_game(21);
  DefenderTree tree(game);
  auto actions = enumerate_defender_actions(game.defenders());
  TreePolicy<DefenderTree> policy(tree, PolicyMode::kTabular);
  std::mt19937_64 rng(8);
  testing::randomize_tabular(policy, rng, 2.0);
  // concentrate on one action so the grouped test has enough rows
  policy.node_logits(tree.root())[3] += 6.0;
  auto law = testing::prune_law(policy, actions, 0.5, 100000, 1, 9);
  EXPECT_GT(law.p_value, 0.001);
  EXPECT_EQ(law.alt_equal_first, 0);
  EXPECT_LT(law.max_prob_error, 1e-12);
}

TEST(SampleAndPrune, AblationDrawsFromMixture) {
  SecurityGame game = k4_game();
  AttackerTree tree(game);
  auto actions = enumerate_attacker_actions(game.graph());
  TreePolicy<AttackerTree> policy(tree, PolicyMode::kTabular);
  std::mt19937_64 rng(4);
  testing::randomize_tabular(policy, rng, 1.0);
  auto mixed = oracle::leaf_probs(policy, actions, 0.8);
  PrunedDraw<AttackerTree> d;
  DrawScratch<AttackerTree> s;
  std::vector<double> counts(actions.size(), 0.0);
  int same = 0;
  const int n = 100000;
  for (int t = 0; t < n; ++t) {
    sample_and_prune(policy, 0.8, rng, d, s, 64, true);
    const auto i = std::find(actions.begin(), actions.end(), d.alt.action) - actions.begin();
    EXPECT_NEAR(d.p, mixed[i], 1e-12);
    counts[i] += 1;
    same += d.alt.action == d.first.action;
  }
  EXPECT_GT(same, 0);
  for (std::size_t i = 0; i < actions.size(); ++i)
    EXPECT_NEAR(counts[i] / n, mixed[i], 4 * std::sqrt(mixed[i] * (1 - mixed[i]) / n));
}

TEST(SampleAndPrune, SingleActionIsDegenerate) {
  SecurityGame game(GameGraph(3, {{0, 1}, {1, 2}}, {0}, {{2, 1.0}}, 3), DefenderSpec{1, {{{0, 1}, {1, 2}}}, true});
  AttackerTree tree(game);
  TreePolicy<AttackerTree> policy(tree, PolicyMode::kTabular);
  std::mt19937_64 rng(1);
  PrunedDraw<AttackerTree> d;
  DrawScratch<AttackerTree> s;
  EXPECT_THROW(sample_and_prune(policy, 0.5, rng, d, s), DegenerateInstanceError);
  EXPECT_NO_THROW(sample_and_prune(policy, 0.5, rng, d, s, 64, true));
}

TsoHyperparameters small_hp() {
  TsoHyperparameters hp;
  hp.total_iterations = 10;
  hp.batch_size = 8;
  hp.learning_rate = 0.01;
  hp.evaluate_gap = true;
  return hp;
}

TEST(Tso, RewardArithmetic) {
  // direct substitution: payoff +1, tau 0.05, x = 0.5
  EXPECT_NEAR(-1.0 + 0.05 * std::log(0.5), -1.03466, 1e-5);
  EXPECT_DOUBLE_EQ((0.5 - 0.2) / 0.25, 1.2);

  SecurityGame game = testing::s1_shape_game(5);
  TsoHyperparameters hp = small_hp();
  hp.tau = 0.3;
  TsoTrainer trainer(game, hp);
  std::mt19937_64 rng(2);
  testing::randomize_tabular(trainer.attacker_policy(), rng, 2.0);
  SampleRecord<AttackerAction> atk;
  SampleRecord<DefenderAction> def;
  TsoTrainer::Scratch scratch;
  long long fallbacks = 0;
  for (int i = 0; i < 50; ++i) {
    trainer.make_sample(rng, atk, def, scratch, fallbacks);
    const auto& d_first = scratch.def_draw.first.action;
    const auto& a_first = scratch.atk_draw.first.action;
    EXPECT_EQ(atk.payoff, attacker_utility(game, atk.alt_action, d_first));
    EXPECT_EQ(def.payoff, -attacker_utility(game, a_first, def.alt_action));
    const double xa = action_probability(trainer.attacker_policy(), atk.alt_action);
    const double xd = action_probability(trainer.defender_policy(), def.alt_action);
    EXPECT_NEAR(atk.policy_prob, xa, 1e-12);
    EXPECT_NEAR(atk.reward, -atk.payoff + 0.3 * std::max(std::log(xa), std::log(1e-12)), 1e-9);
    EXPECT_NEAR(def.reward, -def.payoff + 0.3 * std::log(xd), 1e-9);
    EXPECT_NE(atk.alt_action, a_first);
    EXPECT_NE(def.alt_action, d_first);
  }
}

TEST(Tso, LogProbabilityFloor) {
  SecurityGame game = diamond_game();
  TsoHyperparameters hp = small_hp();
  hp.tau = 1.0;
  hp.log_prob_floor = 1e-3;
  TsoTrainer trainer(game, hp);
  AttackerTree tree(game);
  AttackerHistory fork = tree.root();
  tree.advance(fork, 0);
  trainer.attacker_policy().node_logits(fork) = {0.0, -40.0};
  std::mt19937_64 rng(2);
  SampleRecord<AttackerAction> atk;
  SampleRecord<DefenderAction> def;
  TsoTrainer::Scratch scratch;
  long long fallbacks = 0;
  bool saw_rare = false;
  for (int i = 0; i < 20; ++i) {
    trainer.make_sample(rng, atk, def, scratch, fallbacks);
    if (atk.policy_prob < 1e-3) {
      saw_rare = true;
      EXPECT_NEAR(atk.reward, -atk.payoff + std::log(1e-3), 1e-12);
    }
  }
  EXPECT_TRUE(saw_rare);
}

// Every joint outcome of a batch of two samples, weighted exactly. Checks the
// closed form used by the acceptance suite.
TEST(Tso, EstimatorMeanMatchesBatchEnumeration) {
  for (bool prune : {true, false}) {
    SecurityGame game = k4_game();
    EnumeratedGame e = EnumeratedGame::build(game);
    AttackerTree at(game);
    DefenderTree dt(game);
    TreePolicy<AttackerTree> ap(at, PolicyMode::kTabular);
    TreePolicy<DefenderTree> dp(dt, PolicyMode::kTabular);
    std::mt19937_64 rng(prune ? 12 : 13);
    testing::randomize_tabular(ap, rng, 1.0);
    testing::randomize_tabular(dp, rng, 1.0);
    const double eps = 0.5, tau = 0.2;
    auto x = oracle::leaf_probs(ap, e.attacker_actions, 0.0);
    auto y = oracle::leaf_probs(dp, e.defender_actions, 0.0);
    auto xm = oracle::leaf_probs(ap, e.attacker_actions, eps);
    const std::size_t n = x.size(), m = y.size();
    // one sample: (first attacker f, alt a, first defender d) with weight
    struct Outcome {
      double prob, r, w;
    };
    std::vector<Outcome> outs;
    for (std::size_t f = 0; f < n; ++f) {
      auto cond = prune ? oracle::pruned_given(xm, f) : xm;
      for (std::size_t a = 0; a < n; ++a) {
        if (cond[a] == 0.0) continue;
        for (std::size_t d = 0; d < m; ++d)
          outs.push_back({x[f] * cond[a] * y[d], -e.payoff(a, d) + tau * std::log(x[a]), x[a] / cond[a]});
      }
    }
    double brute = 0.0;
    for (const auto& o1 : outs)
      for (const auto& o2 : outs) {
        const double v = 0.5 * (o1.r + o2.r);
        brute += o1.prob * o2.prob * ((o1.r - v) * o1.w + (o2.r - v) * o2.w) / 2.0;
      }
    auto [fa, fd] = oracle::fields(e.payoff, x, y, tau);
    oracle::PlayerView view{x, xm, fa};
    EXPECT_NEAR(oracle::literal_estimator_mean(view, 2, prune), brute, 1e-12);
  }
}

// Monte-Carlo mean of the accumulated tabular gradient against the exact
// expectation (1 - 1/S) sum_a w_a (F(a) - m) grad x(a), where w_a = 1 - x(a)
// and m = <F, xhat> with prune, and w_a = 1, m = <F, x'> without.
TEST(Tso, ExpectedGradientMatchesEnumeration) {
  for (bool prune : {true, false}) {
    SecurityGame game = k4_game();
    EnumeratedGame e = EnumeratedGame::build(game);
    TsoHyperparameters hp;
    hp.batch_size = 10;
    hp.tau = 0.1;
    hp.epsilon = 0.5;
    hp.ablate_prune = !prune;
    TsoTrainer trainer(game, hp, {}, 77);
    std::mt19937_64 rng(21);
    testing::randomize_tabular(trainer.attacker_policy(), rng, 1.0);
    testing::randomize_tabular(trainer.defender_policy(), rng, 1.0);
    const auto& ap = trainer.attacker_policy();
    auto x = oracle::leaf_probs(ap, e.attacker_actions, 0.0);
    auto y = oracle::leaf_probs(trainer.defender_policy(), e.defender_actions, 0.0);
    auto xm = oracle::leaf_probs(ap, e.attacker_actions, hp.epsilon);
    auto [fa, fd] = oracle::fields(e.payoff, x, y, hp.tau);
    const auto xhat = prune ? oracle::pruned_marginal(x, xm) : xm;
    double mbar = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) mbar += xhat[a] * fa[a];
    std::vector<double> c(x.size());
    for (std::size_t a = 0; a < x.size(); ++a)
      c[a] = (1.0 - 1.0 / hp.batch_size) * (prune ? 1.0 - x[a] : 1.0) * (fa[a] - mbar);
    auto exact = oracle::logit_gradient_of_sum(ap, e.attacker_actions, c);

    std::map<std::pair<std::vector<int>, int>, double> sum, sum_sq;
    const int batches = 40000;
    for (int b = 0; b < batches; ++b) {
      trainer.mutable_state().iteration = b;
      trainer.train_step(false);
      const auto& g = trainer.attacker_gradient();
      std::map<std::pair<std::vector<int>, int>, double> one;
      for (std::size_t r = 0; r < g.nodes.size(); ++r)
        for (std::size_t i = 0; i < g.rows[r].size(); ++i) one[{g.nodes[r]->key, static_cast<int>(i)}] += g.rows[r][i];
      for (const auto& [k, v] : exact) {
        const double s = one.count(k) ? one[k] / hp.batch_size : 0.0;
        sum[k] += s;
        sum_sq[k] += s * s;
      }
    }
    int outside = 0;
    for (const auto& [k, v] : exact) {
      const double mean = sum[k] / batches;
      const double se = std::sqrt(std::max(0.0, sum_sq[k] / batches - mean * mean) / batches);
      if (std::abs(mean - v) > 4 * se + 1e-12) ++outside;
    }
    EXPECT_EQ(outside, 0) << (prune ? "prune" : "ablation");
  }
}

TEST(Tso, ZeroCoefficientsLeaveParametersUnchanged) {
  // every attacker path reaches the target and no candidate edge lies on a
  // path, so all rewards are equal when tau = 0
  GameGraph g(6, {{0, 1}, {1, 2}, {0, 4}, {4, 2}, {0, 3}, {3, 5}}, {0}, {{2, 1.0}}, 3);
  SecurityGame game(g, DefenderSpec{1, {{{0, 3}, {3, 5}}}, true});
  TsoHyperparameters hp = small_hp();
  hp.tau = 0.0;
  TsoTrainer trainer(game, hp);
  std::mt19937_64 rng(1);
  testing::randomize_tabular(trainer.attacker_policy(), rng, 1.0);
  AttackerTree tree(game);
  const auto before = trainer.attacker_policy().node_logits(tree.root());
  BatchStats s = trainer.train_step();
  EXPECT_EQ(s.loss_estimate, 0.0);
  EXPECT_EQ(trainer.attacker_policy().node_logits(tree.root()), before);
}

TEST(Tso, DecaySchedule) {
  TsoHyperparameters hp;
  EXPECT_EQ(hp.decay_period(), 500);
  EXPECT_EQ(hp.total_iterations / hp.decay_period(), 100);
  EXPECT_EQ(hp.effective_eval_interval(), 250);

  SecurityGame game = diamond_game();
  hp = small_hp();
  hp.total_iterations = 10;
  hp.update_percentage = 0.2;
  hp.learning_rate = 1e-4;
  hp.lr_decay = 0.8;
  hp.tau = 0.05;
  hp.tau_decay = 0.7;
  hp.eval_interval = 1;
  TsoTrainer trainer(game, hp);
  std::vector<MetricsRow> rows;
  trainer.train([&](const MetricsRow& r) { rows.push_back(r); });
  ASSERT_EQ(rows.size(), 11u);
  EXPECT_EQ(rows[0].step, 0);
  EXPECT_FALSE(rows[0].loss_estimate.has_value());
  EXPECT_DOUBLE_EQ(rows[3].eta, 1e-4 * 0.8);
  EXPECT_NEAR(rows[4].eta, 6.4e-5, 1e-19);
  EXPECT_NEAR(rows[4].tau, 0.05 * 0.49, 1e-16);
  EXPECT_EQ(rows[10].samples, 10 * 2 * hp.batch_size);
  for (const auto& r : rows) EXPECT_TRUE(r.duality_gap.has_value());
}

TEST(Tso, SampleBudgetAndEpsilonDecay) {
  SecurityGame game = k4_game();
  TsoHyperparameters hp = small_hp();
  hp.total_iterations = 100;
  hp.sample_budget = 170;
  hp.update_epsilon = true;
  TsoTrainer trainer(game, hp);
  std::vector<MetricsRow> rows;
  trainer.train([&](const MetricsRow& r) { rows.push_back(r); });
  EXPECT_EQ(trainer.state().iteration, 10);
  EXPECT_EQ(trainer.state().samples_consumed, 160);
  EXPECT_EQ(rows.back().samples, 160);
  EXPECT_NEAR(trainer.state().epsilon, 0.8 * (1 - 9.0 / 100), 1e-15);
}

TEST(Tso, RejectsBadHyperparameters) {
  SecurityGame game = diamond_game();
  auto with = [&](auto f) {
    TsoHyperparameters hp;
    f(hp);
    return hp;
  };
  EXPECT_THROW(TsoTrainer(game, with([](auto& h) { h.epsilon = 1.0; })), InfeasibleParametersError);
  EXPECT_THROW(TsoTrainer(game, with([](auto& h) { h.batch_size = 1; })), InfeasibleParametersError);
  EXPECT_THROW(TsoTrainer(game, with([](auto& h) { h.lr_decay = 0.0; })), InfeasibleParametersError);
  EXPECT_THROW(TsoTrainer(game, with([](auto& h) { h.learning_rate = -1; })), InfeasibleParametersError);
}

std::string run_csv(const SecurityGame& game, PolicyMode mode, int threads, std::uint64_t seed) {
  TsoHyperparameters hp;
  hp.total_iterations = 40;
  hp.batch_size = 16;
  hp.learning_rate = 0.01;
  hp.update_percentage = 0.1;
  hp.eval_interval = 5;
  std::ostringstream out;
  MetricsWriter w(out);
  PolicyOptions po;
  po.mode = mode;
  po.hidden = 16;
  TsoTrainer trainer(game, hp, po, seed, threads);
  trainer.train(w.sink());
  return out.str();
}

TEST(Tso, DeterministicAcrossThreadCounts) {
  SecurityGame game = testing::s1_shape_game(3);
  for (PolicyMode mode : {PolicyMode::kTabular, PolicyMode::kNetwork}) {
    const std::string one = run_csv(game, mode, 1, 42);
    EXPECT_EQ(one, run_csv(game, mode, 1, 42));
    EXPECT_EQ(one, run_csv(game, mode, 3, 42));
    EXPECT_NE(one, run_csv(game, mode, 1, 43));
    std::istringstream in(one);
    EXPECT_EQ(validate_metrics_csv(in), 9u);
  }
}

TEST(Tso, ConvergesOnDiamond) {
  SecurityGame game = diamond_game();
  TsoHyperparameters hp;
  hp.total_iterations = 3000;
  hp.batch_size = 32;
  hp.learning_rate = 0.01;
  hp.update_percentage = 0.1;
  hp.tau = 0.1;
  hp.tau_decay = 0.9;
  PolicyOptions po;
  po.optimizer.kind = OptimizerKind::kSgd;
  TsoTrainer trainer(game, hp, po, 5);
  std::mt19937_64 rng(5);
  testing::randomize_tabular(trainer.attacker_policy(), rng, 1.0);
  testing::randomize_tabular(trainer.defender_policy(), rng, 1.0);
  const double start = trainer.current_gap()->gap;
  trainer.train();
  EXPECT_GT(start, 0.3);
  EXPECT_LT(trainer.current_gap()->gap, std::min(0.15, 0.5 * start));
}

// At the regularized equilibrium every tree-edge gradient of
// the exact loss vanishes; away from it an action with a nonzero coefficient
// has a nonzero gradient on its terminal edge.
TEST(TreeNal, EdgeGradientsVanishExactlyAtRegularizedEquilibrium) {
  for (int which = 0; which < 2; ++which) {
    SecurityGame game = which == 0 ? diamond_game() : k4_game();
    EnumeratedGame e = EnumeratedGame::build(game);
    const double tau = 0.1;
    auto eq = oracle::regularized_equilibrium(e.payoff, tau);
    ASSERT_LT(eq.gap, 1e-10);
    AttackerTree at(game);
    DefenderTree dt(game);
    TreePolicy<AttackerTree> ap(at, PolicyMode::kTabular);
    TreePolicy<DefenderTree> dp(dt, PolicyMode::kTabular);
    oracle::load_leaf_distribution(ap, e.attacker_actions, eq.x);
    oracle::load_leaf_distribution(dp, e.defender_actions, eq.y);
    auto x = oracle::leaf_probs(ap, e.attacker_actions, 0.0);
    auto y = oracle::leaf_probs(dp, e.defender_actions, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(x[i], eq.x[i], 1e-12);
    auto [fa, fd] = oracle::fields(e.payoff, x, y, tau);
    for (auto [f, probs, pol] : {std::tuple{fa, x, 0}, std::tuple{fd, y, 1}}) {
      double m = 0.0;  // any xhat works at the equilibrium; use the policy itself
      for (std::size_t k = 0; k < f.size(); ++k) m += probs[k] * f[k];
      std::vector<double> g(f.size());
      for (std::size_t k = 0; k < f.size(); ++k) g[k] = f[k] - m;
      auto grads = pol == 0 ? oracle::edge_gradients(ap, e.attacker_actions, g)
                            : oracle::edge_gradients(dp, e.defender_actions, g);
      for (const auto& [edge, v] : grads) EXPECT_LT(std::abs(v), 1e-6);
    }
  }
}

TEST(TreeNal, TerminalEdgeGradientNonzeroAwayFromEquilibrium) {
  SecurityGame game = k4_game();
  EnumeratedGame e = EnumeratedGame::build(game);
  AttackerTree at(game);
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    TreePolicy<AttackerTree> ap(at, PolicyMode::kTabular);
    testing::randomize_tabular(ap, rng, 1.0);
    auto x = oracle::leaf_probs(ap, e.attacker_actions, 0.0);
    std::vector<double> y(e.defender_actions.size(), 1.0 / e.defender_actions.size());
    auto [fa, fd] = oracle::fields(e.payoff, x, y, 0.1);
    double m = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) m += x[k] * fa[k];
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double g = fa[k] - m;
      if (std::abs(g) <= 1e-6 || x[k] <= 1e-6) continue;
      // the terminal edge is used by action k only
      std::vector<double> c(x.size(), 0.0);
      c[k] = g;
      auto grads = oracle::edge_gradients(ap, e.attacker_actions, c);
      auto h = at.root();
      auto slots = at.slots_of(e.attacker_actions[k]);
      for (std::size_t i = 0; i + 1 < slots.size(); ++i) at.advance(h, slots[i]);
      EXPECT_GT(std::abs(grads.at({history_key(h), slots.back()})), 1e-9);
    }
  }
}

}  // namespace
}  // namespace unsg
