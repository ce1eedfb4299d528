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

// Tree-based stochastic optimization: sample-and-prune draws, the batch loss
// estimator, parameter updates and the learning-rate / temperature decay.

#ifndef UNSG_TSO_HPP_
#define UNSG_TSO_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "unsg/action_tree.hpp"
#include "unsg/error.hpp"
#include "unsg/evaluator.hpp"
#include "unsg/game.hpp"
#include "unsg/metrics.hpp"
#include "unsg/policy.hpp"
#include "unsg/rng.hpp"

namespace unsg {

struct TsoHyperparameters {
  long long total_iterations = 50000;
  int batch_size = 100;
  double learning_rate = 1e-4;
  double tau = 0.05;
  double epsilon = 0.8;
  // fraction of total_iterations between decays
  double update_percentage = 0.01;
  double lr_decay = 0.8;
  double tau_decay = 0.7;
  bool ablate_prune = false;
  double log_prob_floor = 1e-12;
  // linear decay of epsilon to zero over the run
  bool update_epsilon = false;
  int rejection_limit = 64;
  // 0 = max(T / 200, 1)
  long long eval_interval = 0;
  // stop before exceeding this many simulator queries; 0 = unlimited
  long long sample_budget = 0;
  bool record_wallclock = false;
  bool evaluate_gap = true;

  long long decay_period() const {
    return std::max<long long>(1, std::llround(update_percentage * static_cast<double>(total_iterations)));
  }
  long long effective_eval_interval() const {
    return eval_interval > 0 ? eval_interval : std::max<long long>(1, total_iterations / 200);
  }

  void validate() const {
    auto bad = [](const std::string& m) { return InfeasibleParametersError("tso: " + m); };
    if (total_iterations < 0) throw bad("total_iterations must be nonnegative");
    if (batch_size < 2) throw bad("batch_size must be at least 2");
    if (!(learning_rate > 0)) throw bad("learning_rate must be positive");
    if (!(tau >= 0)) throw bad("tau must be nonnegative");
    if (!(epsilon >= 0 && epsilon < 1)) throw bad("epsilon must lie in [0, 1)");
    if (!(update_percentage > 0 && update_percentage <= 1)) throw bad("update_percentage must lie in (0, 1]");
    if (!(lr_decay > 0 && lr_decay <= 1)) throw bad("lr_decay must lie in (0, 1]");
    if (!(tau_decay > 0 && tau_decay <= 1)) throw bad("tau_decay must lie in (0, 1]");
    if (!(log_prob_floor > 0 && log_prob_floor < 1)) throw bad("log_prob_floor must lie in (0, 1)");
    if (rejection_limit < 0) throw bad("rejection_limit must be nonnegative");
    if (eval_interval < 0 || sample_budget < 0) throw bad("eval_interval and sample_budget must be nonnegative");
  }
};

struct PolicyOptions {
  PolicyMode mode = PolicyMode::kTabular;
  OptimizerConfig optimizer;
  int hidden = 128;
};

// Per-step epsilon mixing: q(c) = (1 - eps) p(c) + eps / K.
inline double mixed_prob(double pure, std::size_t k, double eps) {
  if (k == 1) return 1.0;
  return (1.0 - eps) * pure + eps / static_cast<double>(k);
}

inline double log_mixed_prob(const StepLog& log, double eps) {
  double s = 0.0;
  for (const Step& st : log.steps) s += std::log(mixed_prob(st.probs[st.chosen], st.slots.size(), eps));
  return s;
}

template <class Tree>
struct Walk {
  typename Tree::Action action;
  StepLog log;  // pure conditionals and choices, for gradients
  double log_pure = 0.0;
  double log_mixed = 0.0;
};

namespace detail {

// What the guided draw must avoid: the compact choices of one leaf and
// log Q_i, the mixed mass of that leaf inside the subtree at depth i.
struct AvoidPath {
  std::vector<int> chosen;
  std::vector<double> log_tail;
};

template <class Tree>
void mixed_walk(const TreePolicy<Tree>& policy, double eps, std::mt19937_64& rng, Walk<Tree>& out,
                const AvoidPath* avoid, std::vector<double>& weights) {
  const Tree& tree = policy.tree();
  typename Tree::History h = tree.root();
  TabularNode* node = policy.mode() == PolicyMode::kTabular ? policy.root_node() : nullptr;
  out.log_pure = out.log_mixed = 0.0;
  std::size_t n = 0;
  bool on_path = avoid != nullptr;
  while (!tree.is_leaf(h)) {
    if (n == out.log.steps.size()) out.log.steps.emplace_back();
    Step& st = out.log.steps[n];
    policy.evaluate(h, node, st);
    const std::size_t k = st.slots.size();
    weights.resize(k);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) total += weights[i] = mixed_prob(st.probs[i], k, eps);
    int forbidden = -1;
    double kept = 0.0;
    if (on_path) {
      forbidden = avoid->chosen[n];
      kept = weights[forbidden];
      const double w = kept * -std::expm1(avoid->log_tail[n + 1]);
      total += w - kept;
      weights[forbidden] = w;
    }
    for (double& w : weights) w /= total;
    const int idx = draw_index(weights, rng);
    st.chosen = idx;
    const double q = idx == forbidden ? kept : weights[idx] * total;
    out.log_mixed += std::log(q);
    out.log_pure += std::log(st.probs[idx]);
    on_path = on_path && idx == forbidden;
    tree.advance(h, st.slots[idx]);
    if (node && !tree.is_leaf(h)) node = policy.child_node(node, idx, h);
    ++n;
  }
  out.log.steps.resize(n);
  if (on_path) throw InconsistencyError("pruned draw returned the pruned action");
  out.action = tree.to_action(h);
}

}  // namespace detail

template <class Tree>
struct PrunedDraw {
  Walk<Tree> first;
  Walk<Tree> alt;
  // sampling probability of alt under the law it was drawn from
  double p = 0.0;
  int rejections = 0;
  bool used_fallback = false;
};

// Scratch reused across draws to keep allocations out of the hot loop.
template <class Tree>
struct DrawScratch {
  detail::AvoidPath avoid;
  std::vector<double> weights;
};

// first ~ pure policy; alt ~ eps-mixed policy with first removed and the
// remainder renormalized, p = x'(alt) / (1 - x'(first)). Rejection first,
// then an exact guided draw. With `ablate` the removal is skipped and
// p = x'(alt).
template <class Tree>
void sample_and_prune(const TreePolicy<Tree>& policy, double eps, std::mt19937_64& rng, PrunedDraw<Tree>& out,
                      DrawScratch<Tree>& scratch, int rejection_limit = 64, bool ablate = false) {
  detail::mixed_walk(policy, 0.0, rng, out.first, nullptr, scratch.weights);
  out.first.log_mixed = log_mixed_prob(out.first.log, eps);
  out.rejections = 0;
  out.used_fallback = false;
  if (ablate) {
    detail::mixed_walk(policy, eps, rng, out.alt, nullptr, scratch.weights);
    out.p = std::exp(out.alt.log_mixed);
    return;
  }
  bool degenerate = true;
  for (const Step& st : out.first.log.steps) degenerate = degenerate && st.slots.size() == 1;
  if (degenerate)
    throw DegenerateInstanceError(std::string(player_name(&policy.tree())) + " has a single action; nothing to prune");
  const double remaining = -std::expm1(out.first.log_mixed);
  if (!(remaining > 0.0)) throw TrainingAbortError("pruned distribution has no mass left");
  bool accepted = false;
  for (int t = 0; t < rejection_limit; ++t) {
    detail::mixed_walk(policy, eps, rng, out.alt, nullptr, scratch.weights);
    if (out.alt.action != out.first.action) {
      accepted = true;
      break;
    }
    ++out.rejections;
  }
  if (!accepted) {
    const auto& steps = out.first.log.steps;
    scratch.avoid.chosen.resize(steps.size());
    scratch.avoid.log_tail.assign(steps.size() + 1, 0.0);
    for (std::size_t i = steps.size(); i-- > 0;) {
      scratch.avoid.chosen[i] = steps[i].chosen;
      scratch.avoid.log_tail[i] =
          scratch.avoid.log_tail[i + 1] + std::log(mixed_prob(steps[i].probs[steps[i].chosen], steps[i].slots.size(), eps));
    }
    detail::mixed_walk(policy, eps, rng, out.alt, &scratch.avoid, scratch.weights);
    out.used_fallback = true;
  }
  out.p = std::exp(out.alt.log_mixed) / remaining;
}

template <class Action>
struct SampleRecord {
  Action alt_action;
  double reward = 0.0;      // r
  double sample_prob = 0.0; // p
  double policy_prob = 0.0; // x(alt) under the pure policy
  double payoff = 0.0;      // simulator payoff to this player
  StepLog log;
};

struct BatchStats {
  double loss_estimate = 0.0;  // sum over players and samples of g * x(alt)
  double attacker_v = 0.0;
  double defender_v = 0.0;
  long long fallback_draws = 0;
};

struct TsoState {
  long long iteration = 0;
  double eta = 0.0;
  double tau = 0.0;
  double epsilon = 0.0;
  double attacker_v = 0.0;
  double defender_v = 0.0;
  long long samples_consumed = 0;
};

// The optimizer loop, generic over the two action trees so the flat
// baseline can reuse it with single-level trees.
template <class ATree, class DTree>
class BasicTsoTrainer {
 public:
  using AttackerPolicy = TreePolicy<ATree>;
  using DefenderPolicy = TreePolicy<DTree>;

  struct Scratch {
    PrunedDraw<ATree> atk_draw;
    PrunedDraw<DTree> def_draw;
    DrawScratch<ATree> atk;
    DrawScratch<DTree> def;
  };

  BasicTsoTrainer(const SecurityGame& game, TsoHyperparameters hp, PolicyOptions opts = {}, std::uint64_t seed = 0,
                  int threads = 1)
      : game_(std::make_unique<SecurityGame>(game)),
        attacker_tree_(std::make_unique<ATree>(*game_)),
        defender_tree_(std::make_unique<DTree>(*game_)),
        attacker_(*attacker_tree_, opts.mode, derive_seed({seed, tag(StreamTag::kInitAttacker)}), opts.hidden,
                  opts.optimizer),
        defender_(*defender_tree_, opts.mode, derive_seed({seed, tag(StreamTag::kInitDefender)}), opts.hidden,
                  opts.optimizer),
        hp_(hp),
        seed_(seed),
        threads_(std::max(1, threads)) {
    hp_.validate();
    state_.eta = hp_.learning_rate;
    state_.tau = hp_.tau;
    state_.epsilon = hp_.epsilon;
  }

  BasicTsoTrainer(const SecurityGame&&, TsoHyperparameters, PolicyOptions = {}, std::uint64_t = 0, int = 1) = delete;

  const SecurityGame& game() const { return *game_; }
  const TsoHyperparameters& hyperparameters() const { return hp_; }
  const TsoState& state() const { return state_; }
  TsoState& mutable_state() { return state_; }
  AttackerPolicy& attacker_policy() { return attacker_; }
  DefenderPolicy& defender_policy() { return defender_; }
  const AttackerPolicy& attacker_policy() const { return attacker_; }
  const DefenderPolicy& defender_policy() const { return defender_; }
  const ATree& attacker_tree() const { return *attacker_tree_; }
  const DTree& defender_tree() const { return *defender_tree_; }
  std::uint64_t seed() const { return seed_; }
  // Gradients of the most recent batch loss.
  const GradientAccumulator& attacker_gradient() const { return atk_grad_; }
  const GradientAccumulator& defender_gradient() const { return def_grad_; }

  // Shares an enumeration built elsewhere; otherwise the first gap request
  // enumerates and caches (or records that the game is too large).
  void set_enumerated(std::shared_ptr<const EnumeratedGame> e) { enumerated_ = std::move(e); }

  std::optional<GapReport> current_gap() {
    if (!enumerated_ && !enumeration_failed_) {
      try {
        enumerated_ = std::make_shared<const EnumeratedGame>(EnumeratedGame::build(*game_));
      } catch (const EnumerationOverflowError&) {
        enumeration_failed_ = true;
      }
    }
    if (!enumerated_) return std::nullopt;
    return policy_duality_gap(attacker_, defender_, *enumerated_);
  }

  // One joint sample: first actions for both players, then a pruned
  // alternative for each, scored against the other's first action.
  void make_sample(std::mt19937_64& rng, SampleRecord<AttackerAction>& atk, SampleRecord<DefenderAction>& def,
                   Scratch& scratch, long long& fallbacks) const {
    const double eps = state_.epsilon;
    sample_and_prune(attacker_, eps, rng, scratch.atk_draw, scratch.atk, hp_.rejection_limit, hp_.ablate_prune);
    sample_and_prune(defender_, eps, rng, scratch.def_draw, scratch.def, hp_.rejection_limit, hp_.ablate_prune);
    fallbacks += scratch.atk_draw.used_fallback + scratch.def_draw.used_fallback;
    const double log_floor = std::log(hp_.log_prob_floor);
    const GameGraph& g = game_->graph();

    atk.payoff = attacker_utility_unchecked(g, scratch.atk_draw.alt.action, scratch.def_draw.first.action);
    atk.policy_prob = std::exp(scratch.atk_draw.alt.log_pure);
    atk.reward = -atk.payoff + state_.tau * std::max(scratch.atk_draw.alt.log_pure, log_floor);
    atk.sample_prob = scratch.atk_draw.p;
    std::swap(atk.alt_action, scratch.atk_draw.alt.action);
    std::swap(atk.log, scratch.atk_draw.alt.log);

    def.payoff = -attacker_utility_unchecked(g, scratch.atk_draw.first.action, scratch.def_draw.alt.action);
    def.policy_prob = std::exp(scratch.def_draw.alt.log_pure);
    def.reward = -def.payoff + state_.tau * std::max(scratch.def_draw.alt.log_pure, log_floor);
    def.sample_prob = scratch.def_draw.p;
    std::swap(def.alt_action, scratch.def_draw.alt.action);
    std::swap(def.log, scratch.def_draw.alt.log);
  }

  // Collects one batch, forms g = (r - v) / p, accumulates the gradient of
  // the batch loss and, if `apply`, takes an optimizer step on both players.
  // Does not touch the decay schedule.
  BatchStats train_step(bool apply = true) {
    const int s_count = hp_.batch_size;
    atk_records_.resize(s_count);
    def_records_.resize(s_count);
    if (scratch_.size() < static_cast<std::size_t>(threads_)) scratch_.resize(threads_);
    std::vector<long long> fallbacks(threads_, 0);
    const std::uint64_t iter = static_cast<std::uint64_t>(state_.iteration);
    auto work = [&](int w) {
      for (int s = w; s < s_count; s += threads_) {
        std::mt19937_64 rng = make_stream({seed_, tag(StreamTag::kSample), iter, static_cast<std::uint64_t>(s)});
        make_sample(rng, atk_records_[s], def_records_[s], scratch_[w], fallbacks[w]);
      }
    };
    if (threads_ == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(threads_);
      for (int w = 0; w < threads_; ++w)
        pool.emplace_back([&, w] {
          try {
            work(w);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      for (auto& t : pool) t.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }

    BatchStats stats;
    for (long long f : fallbacks) stats.fallback_draws += f;
    auto player_pass = [&](auto& policy, auto& records, double& v_out, GradientAccumulator& acc) {
      double v = 0.0;
      for (const auto& rec : records) v += rec.reward;
      v /= s_count;
      v_out = v;
      acc = policy.make_accumulator();
      for (const auto& rec : records) {
        const double g = (rec.reward - v) / rec.sample_prob;
        const double w = g * rec.policy_prob;
        stats.loss_estimate += w;
        policy.accumulate(rec.log, w, acc);
      }
    };
    player_pass(attacker_, atk_records_, stats.attacker_v, atk_grad_);
    player_pass(defender_, def_records_, stats.defender_v, def_grad_);
    if (!std::isfinite(stats.loss_estimate))
      throw TrainingAbortError("non-finite loss estimate at iteration " + std::to_string(state_.iteration + 1));
    state_.attacker_v = stats.attacker_v;
    state_.defender_v = stats.defender_v;
    if (apply) {
      attacker_.apply_update(atk_grad_, state_.eta);
      defender_.apply_update(def_grad_, state_.eta);
    }
    state_.samples_consumed += 2LL * s_count;
    return stats;
  }

  // Runs the remaining iterations with decay, evaluation rows and the sample
  // budget. `on_eval` (optional) sees every emitted row after it is written.
  void train(const MetricsSink& sink = {}, const std::function<void(const MetricsRow&)>& on_eval = {}) {
    const auto start = std::chrono::steady_clock::now();
    const long long total = hp_.total_iterations;
    const long long every = hp_.effective_eval_interval();
    const long long decay_every = hp_.decay_period();
    double loss_sum = 0.0;
    long long loss_n = 0;
    auto emit = [&](bool with_loss) {
      MetricsRow row;
      row.step = state_.iteration;
      row.samples = state_.samples_consumed;
      if (with_loss && loss_n > 0) row.loss_estimate = loss_sum / (static_cast<double>(loss_n) * hp_.batch_size);
      if (hp_.evaluate_gap)
        if (auto gap = current_gap()) row.duality_gap = gap->gap;
      row.eta = state_.eta;
      row.tau = state_.tau;
      row.epsilon = state_.epsilon;
      if (hp_.record_wallclock)
        row.wallclock_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      if (sink) sink(row);
      if (on_eval) on_eval(row);
      loss_sum = 0.0;
      loss_n = 0;
    };
    if (state_.iteration == 0) emit(false);
    while (state_.iteration < total) {
      if (hp_.sample_budget > 0 && state_.samples_consumed + 2LL * hp_.batch_size > hp_.sample_budget) break;
      if (hp_.update_epsilon)
        state_.epsilon = hp_.epsilon * (1.0 - static_cast<double>(state_.iteration) / static_cast<double>(total));
      BatchStats b = train_step(true);
      ++state_.iteration;
      loss_sum += b.loss_estimate;
      ++loss_n;
      if (state_.iteration % decay_every == 0) {
        state_.eta *= hp_.lr_decay;
        state_.tau *= hp_.tau_decay;
      }
      if (state_.iteration % every == 0) emit(true);
    }
    if (loss_n > 0) emit(true);
  }

 private:
  std::unique_ptr<SecurityGame> game_;
  std::unique_ptr<ATree> attacker_tree_;
  std::unique_ptr<DTree> defender_tree_;
  AttackerPolicy attacker_;
  DefenderPolicy defender_;
  TsoHyperparameters hp_;
  std::uint64_t seed_;
  int threads_;
  TsoState state_;
  std::shared_ptr<const EnumeratedGame> enumerated_;
  bool enumeration_failed_ = false;
  std::vector<SampleRecord<AttackerAction>> atk_records_;
  std::vector<SampleRecord<DefenderAction>> def_records_;
  std::vector<Scratch> scratch_;
  GradientAccumulator atk_grad_;
  GradientAccumulator def_grad_;
};

using TsoTrainer = BasicTsoTrainer<AttackerTree, DefenderTree>;

}  // namespace unsg

#endif  // UNSG_TSO_HPP_
