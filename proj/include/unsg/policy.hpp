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

// Tree policies: one masked softmax per decision node, parameterized either
// by a logit table keyed on the exact history or by a shared two-layer ReLU
// network. Gradients of log-probabilities are computed by hand.

#ifndef UNSG_POLICY_HPP_
#define UNSG_POLICY_HPP_

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "unsg/action_tree.hpp"
#include "unsg/error.hpp"
#include "unsg/game.hpp"

namespace unsg {

enum class PolicyMode { kTabular, kNetwork };
enum class OptimizerKind { kSgd, kAdam };

inline std::string to_string(PolicyMode m) { return m == PolicyMode::kTabular ? "tabular" : "network"; }
inline std::string to_string(OptimizerKind k) { return k == OptimizerKind::kSgd ? "sgd" : "adam"; }

inline PolicyMode parse_policy_mode(const std::string& s) {
  if (s == "tabular") return PolicyMode::kTabular;
  if (s == "network") return PolicyMode::kNetwork;
  throw ConfigError("unknown policy mode '" + s + "'");
}

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + s + "'");
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Masked softmax over a full-width logit vector. Masked entries are exactly 0.
inline std::vector<double> masked_softmax(const std::vector<double>& logits, const ActionMask& mask) {
  if (static_cast<int>(logits.size()) != mask.width())
    throw DimensionMismatchError("logit vector and mask differ in width");
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < mask.width(); ++i)
    if (mask.test(i)) top = std::max(top, logits[i]);
  if (top == -std::numeric_limits<double>::infinity())
    throw InstanceMismatchError("conditional distribution over an all-masked node");
  std::vector<double> p(logits.size(), 0.0);
  double z = 0.0;
  for (int i = 0; i < mask.width(); ++i)
    if (mask.test(i)) z += p[i] = std::exp(logits[i] - top);
  for (double& x : p) x /= z;
  return p;
}

// Softmax over a compact logit list (every entry valid).
inline void softmax_inplace(std::vector<double>& v) {
  const double top = *std::max_element(v.begin(), v.end());
  double z = 0.0;
  for (double& x : v) z += x = std::exp(x - top);
  for (double& x : v) x /= z;
}

namespace detail {

inline void fnv1a(std::uint64_t& h, std::uint64_t word) {
  for (int i = 0; i < 8; ++i) {
    h ^= (word >> (8 * i)) & 0xff;
    h *= 0x100000001b3ull;
  }
}

struct VectorHash {
  std::size_t operator()(const std::vector<int>& v) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (int x : v) fnv1a(h, static_cast<std::uint32_t>(x));
    return static_cast<std::size_t>(h);
  }
};

}  // namespace detail

// Identifies an instance in checkpoints.
inline std::uint64_t instance_fingerprint(const SecurityGame& game) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  const GameGraph& g = game.graph();
  detail::fnv1a(h, static_cast<std::uint64_t>(g.vertex_count()));
  for (const Edge& e : g.edges()) {
    detail::fnv1a(h, static_cast<std::uint64_t>(e.u));
    detail::fnv1a(h, static_cast<std::uint64_t>(e.v));
  }
  for (Vertex s : g.start_vertices()) detail::fnv1a(h, static_cast<std::uint64_t>(s));
  for (const auto& [t, value] : g.target_values()) {
    detail::fnv1a(h, static_cast<std::uint64_t>(t));
    detail::fnv1a(h, std::bit_cast<std::uint64_t>(value));
  }
  detail::fnv1a(h, static_cast<std::uint64_t>(g.max_path_length()));
  detail::fnv1a(h, static_cast<std::uint64_t>(game.num_defenders()));
  detail::fnv1a(h, game.defenders().allow_duplicate_edges ? 1u : 0u);
  for (int m = 0; m < game.num_defenders(); ++m) {
    detail::fnv1a(h, 0xffffffffull);
    for (int id : game.candidate_union_ids(m)) detail::fnv1a(h, static_cast<std::uint64_t>(id));
  }
  return h;
}

inline std::vector<int> history_key(const AttackerHistory& h) { return h.visited; }
inline std::vector<int> history_key(const DefenderHistory& h) { return h.chosen; }
inline AttackerHistory history_from_key(const std::vector<int>& key, const AttackerTree*) { return {key}; }
inline DefenderHistory history_from_key(const std::vector<int>& key, const DefenderTree*) { return {key}; }

inline const char* player_name(const AttackerTree*) { return "attacker"; }
inline const char* player_name(const DefenderTree*) { return "defender"; }

// One decision node of a tabular policy. Children are linked lazily so that
// walks after the first visit skip the hash lookup.
struct TabularNode {
  std::vector<int> key;
  std::vector<int> slots;      // valid slots, ascending
  std::vector<double> logits;  // one per valid slot
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  std::unique_ptr<std::atomic<TabularNode*>[]> children;
};

struct NetworkParams {
  Eigen::MatrixXd w1;  // hidden x features
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // hidden x hidden
  Eigen::VectorXd b2;
  Eigen::MatrixXd w3;  // hidden x outputs (column j feeds logit j)
  Eigen::VectorXd b3;

  void resize_like(const NetworkParams& o) {
    w1 = Eigen::MatrixXd::Zero(o.w1.rows(), o.w1.cols());
    b1 = Eigen::VectorXd::Zero(o.b1.size());
    w2 = Eigen::MatrixXd::Zero(o.w2.rows(), o.w2.cols());
    b2 = Eigen::VectorXd::Zero(o.b2.size());
    w3 = Eigen::MatrixXd::Zero(o.w3.rows(), o.w3.cols());
    b3 = Eigen::VectorXd::Zero(o.b3.size());
  }
  void set_zero() {
    w1.setZero();
    b1.setZero();
    w2.setZero();
    b2.setZero();
    w3.setZero();
    b3.setZero();
  }
  template <class F>
  void for_each(F&& f) {
    f(w1);
    f(b1);
    f(w2);
    f(b2);
    f(w3);
    f(b3);
  }
  template <class F>
  void for_each2(NetworkParams& o, F&& f) {
    f(w1, o.w1);
    f(b1, o.b1);
    f(w2, o.w2);
    f(b2, o.b2);
    f(w3, o.w3);
    f(b3, o.b3);
  }
};

// One decision along a walk: the node's valid slots, the pure conditional
// probabilities over them, and the compact index of the chosen child.
struct Step {
  TabularNode* node = nullptr;
  std::vector<int> slots;
  std::vector<double> probs;
  int chosen = -1;
  // network mode only
  SparseFeatures features;
  Eigen::VectorXd h1;
  Eigen::VectorXd h2;
};

struct StepLog {
  std::vector<Step> steps;

  double log_prob() const {
    double s = 0.0;
    for (const Step& st : steps) s += std::log(st.probs[st.chosen]);
    return s;
  }
  double prob() const {
    double s = 1.0;
    for (const Step& st : steps) s *= st.probs[st.chosen];
    return s;
  }
};

// Weighted sum of log-probability gradients. Tabular rows are sparse per
// node; network gradients are dense.
struct GradientAccumulator {
  PolicyMode mode = PolicyMode::kTabular;
  std::vector<TabularNode*> nodes;
  std::vector<std::vector<double>> rows;
  std::unordered_map<const TabularNode*, std::size_t> row_of;
  NetworkParams dense;

  std::vector<double>& row(TabularNode* node) {
    auto [it, fresh] = row_of.emplace(node, nodes.size());
    if (fresh) {
      nodes.push_back(node);
      rows.emplace_back(node->slots.size(), 0.0);
    }
    return rows[it->second];
  }

  void clear() {
    nodes.clear();
    rows.clear();
    row_of.clear();
    if (mode == PolicyMode::kNetwork) dense.set_zero();
  }

  // this += other, row by row in other's insertion order.
  void merge(const GradientAccumulator& other) {
    if (mode == PolicyMode::kTabular) {
      for (std::size_t i = 0; i < other.nodes.size(); ++i) {
        auto& r = row(other.nodes[i]);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] += other.rows[i][j];
      }
    } else {
      NetworkParams& d = dense;
      NetworkParams& o = const_cast<NetworkParams&>(other.dense);
      d.for_each2(o, [](auto& a, auto& b) { a += b; });
    }
  }
};

template <class Tree>
class TreePolicy {
 public:
  using History = typename Tree::History;
  using Action = typename Tree::Action;

  TreePolicy(const Tree& tree, PolicyMode mode, std::uint64_t init_seed = 0, int hidden = 128,
             OptimizerConfig opt = {})
      : tree_(&tree), mode_(mode), hidden_(hidden), opt_(opt), state_(std::make_unique<Shared>()) {
    if (mode_ == PolicyMode::kNetwork) init_network(init_seed);
  }

  TreePolicy(const Tree&&, PolicyMode, std::uint64_t = 0, int = 128, OptimizerConfig = {}) = delete;
  TreePolicy(TreePolicy&&) noexcept = default;
  TreePolicy& operator=(TreePolicy&&) noexcept = default;

  const Tree& tree() const { return *tree_; }
  PolicyMode mode() const { return mode_; }
  int mask_width() const { return tree_->mask_width(); }
  int hidden() const { return hidden_; }
  const OptimizerConfig& optimizer() const { return opt_; }
  void set_optimizer(OptimizerConfig opt) { opt_ = opt; }
  long long optimizer_steps() const { return steps_; }
  const NetworkParams& network() const { return net_; }
  NetworkParams& mutable_network() { return net_; }
  std::size_t tabular_node_count() const { return state_->nodes.size(); }

  // --- node access -------------------------------------------------------

  TabularNode* root_node() const {
    TabularNode* r = state_->root.load(std::memory_order_acquire);
    if (r) return r;
    r = node_for(tree_->root());
    state_->root.store(r, std::memory_order_release);
    return r;
  }

  // Node reached from `parent` by compact child index `i`; `child` is the
  // history after that step.
  TabularNode* child_node(TabularNode* parent, int i, const History& child) const {
    TabularNode* c = parent->children[i].load(std::memory_order_acquire);
    if (c) return c;
    c = node_for(child);
    parent->children[i].store(c, std::memory_order_release);
    return c;
  }

  TabularNode* node_for(const History& h) const {
    std::vector<int> key = history_key(h);
    std::lock_guard<std::mutex> lock(state_->mutex);
    auto it = state_->index.find(key);
    if (it != state_->index.end()) return it->second;
    TabularNode& n = state_->nodes.emplace_back();
    n.key = key;
    tree_->valid_slots(h, n.slots);
    if (n.slots.empty()) throw InstanceMismatchError("tabular node requested at a leaf or dead end");
    n.logits.assign(n.slots.size(), 0.0);
    n.children = std::make_unique<std::atomic<TabularNode*>[]>(n.slots.size());
    for (std::size_t i = 0; i < n.slots.size(); ++i) n.children[i].store(nullptr);
    state_->index.emplace(std::move(key), &n);
    return &n;
  }

  TabularNode* find_node(const History& h) const {
    std::lock_guard<std::mutex> lock(state_->mutex);
    auto it = state_->index.find(history_key(h));
    return it == state_->index.end() ? nullptr : it->second;
  }

  // Fills slots and pure conditional probabilities at history h. `node` is
  // the tabular node of h (ignored in network mode).
  void evaluate(const History& h, TabularNode* node, Step& step) const {
    step.node = node;
    step.chosen = -1;
    if (mode_ == PolicyMode::kTabular) {
      step.slots = node->slots;
      step.probs = node->logits;
      softmax_inplace(step.probs);
      return;
    }
    tree_->valid_slots(h, step.slots);
    if (step.slots.empty()) throw InstanceMismatchError("policy evaluated at a leaf");
    tree_->features(h, step.features);
    forward(step);
  }

  // Full-width logits at h: tabular zeros outside the node's slots.
  std::vector<double> logits(const History& h) const {
    std::vector<double> out(mask_width(), 0.0);
    if (mode_ == PolicyMode::kTabular) {
      TabularNode* n = node_for(h);
      for (std::size_t i = 0; i < n->slots.size(); ++i) out[n->slots[i]] = n->logits[i];
      return out;
    }
    Step st;
    tree_->features(h, st.features);
    st.slots.resize(mask_width());
    for (int i = 0; i < mask_width(); ++i) st.slots[i] = i;
    std::vector<double> raw = forward_logits(st);
    return raw;
  }

  void set_logits(const History& h, const std::vector<double>& full_width) {
    if (mode_ != PolicyMode::kTabular) throw InstanceMismatchError("set_logits needs a tabular policy");
    if (static_cast<int>(full_width.size()) != mask_width())
      throw DimensionMismatchError("logit vector has the wrong width");
    TabularNode* n = node_for(h);
    for (std::size_t i = 0; i < n->slots.size(); ++i) n->logits[i] = full_width[n->slots[i]];
  }

  // Compact logits of the node at h (tabular).
  std::vector<double>& node_logits(const History& h) { return node_for(h)->logits; }

  // --- gradients ---------------------------------------------------------

  GradientAccumulator make_accumulator() const {
    GradientAccumulator acc;
    acc.mode = mode_;
    if (mode_ == PolicyMode::kNetwork) acc.dense.resize_like(net_);
    return acc;
  }

  // acc += weight * grad log pi(action) for the walk recorded in log.
  void accumulate(const StepLog& log, double weight, GradientAccumulator& acc) const {
    if (weight == 0.0) return;
    for (const Step& st : log.steps) {
      const std::size_t k = st.slots.size();
      if (mode_ == PolicyMode::kTabular) {
        auto& r = acc.row(st.node);
        for (std::size_t i = 0; i < k; ++i)
          r[i] += weight * ((static_cast<int>(i) == st.chosen ? 1.0 : 0.0) - st.probs[i]);
        continue;
      }
      NetworkParams& d = acc.dense;
      Eigen::VectorXd dh2 = Eigen::VectorXd::Zero(hidden_);
      for (std::size_t i = 0; i < k; ++i) {
        const double g = weight * ((static_cast<int>(i) == st.chosen ? 1.0 : 0.0) - st.probs[i]);
        const int j = st.slots[i];
        d.w3.col(j) += g * st.h2;
        d.b3[j] += g;
        dh2 += g * net_.w3.col(j);
      }
      Eigen::VectorXd dz2 = (st.h2.array() > 0.0).select(dh2, 0.0);
      d.w2.noalias() += dz2 * st.h1.transpose();
      d.b2 += dz2;
      Eigen::VectorXd dh1 = net_.w2.transpose() * dz2;
      Eigen::VectorXd dz1 = (st.h1.array() > 0.0).select(dh1, 0.0);
      for (const auto& [idx, val] : st.features) d.w1.col(idx) += val * dz1;
      d.b1 += dz1;
    }
  }

  // Descent step on the loss whose gradient is `grad`.
  void apply_update(const GradientAccumulator& grad, double learning_rate) {
    check_finite(grad);
    ++steps_;
    const double b1 = opt_.beta1, b2 = opt_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    if (mode_ == PolicyMode::kTabular) {
      if (opt_.kind == OptimizerKind::kSgd) {
        for (std::size_t i = 0; i < grad.nodes.size(); ++i) {
          auto& l = grad.nodes[i]->logits;
          for (std::size_t j = 0; j < l.size(); ++j) l[j] -= learning_rate * grad.rows[i][j];
        }
        return;
      }
      // Dense Adam over every node created so far; untouched nodes see a
      // zero gradient.
      std::lock_guard<std::mutex> lock(state_->mutex);
      for (TabularNode& n : state_->nodes) {
        if (n.adam_m.empty()) {
          n.adam_m.assign(n.logits.size(), 0.0);
          n.adam_v.assign(n.logits.size(), 0.0);
        }
        auto it = grad.row_of.find(&n);
        const std::vector<double>* g = it == grad.row_of.end() ? nullptr : &grad.rows[it->second];
        for (std::size_t j = 0; j < n.logits.size(); ++j) {
          const double gj = g ? (*g)[j] : 0.0;
          n.adam_m[j] = b1 * n.adam_m[j] + (1.0 - b1) * gj;
          n.adam_v[j] = b2 * n.adam_v[j] + (1.0 - b2) * gj * gj;
          n.logits[j] -= learning_rate * (n.adam_m[j] / c1) / (std::sqrt(n.adam_v[j] / c2) + opt_.epsilon);
        }
      }
      return;
    }
    NetworkParams& g = const_cast<NetworkParams&>(grad.dense);
    if (opt_.kind == OptimizerKind::kSgd) {
      net_.for_each2(g, [&](auto& p, auto& d) { p -= learning_rate * d; });
      return;
    }
    if (adam_m_.w1.size() == 0) {
      adam_m_.resize_like(net_);
      adam_v_.resize_like(net_);
    }
    auto update = [&](auto& p, auto& d, auto& m, auto& v) {
      m = b1 * m + (1.0 - b1) * d;
      v = b2 * v + (1.0 - b2) * d.cwiseProduct(d);
      p.array() -= learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + opt_.epsilon);
    };
    update(net_.w1, g.w1, adam_m_.w1, adam_v_.w1);
    update(net_.b1, g.b1, adam_m_.b1, adam_v_.b1);
    update(net_.w2, g.w2, adam_m_.w2, adam_v_.w2);
    update(net_.b2, g.b2, adam_m_.b2, adam_v_.b2);
    update(net_.w3, g.w3, adam_m_.w3, adam_v_.w3);
    update(net_.b3, g.b3, adam_m_.b3, adam_v_.b3);
  }

  // --- checkpoints -------------------------------------------------------

  nlohmann::json to_json(std::uint64_t fingerprint) const {
    nlohmann::json j;
    j["format"] = "unsg-policy";
    j["version"] = 1;
    j["player"] = player_name(tree_);
    j["mode"] = to_string(mode_);
    j["fingerprint"] = fingerprint;
    j["optimizer_steps"] = steps_;
    if (mode_ == PolicyMode::kTabular) {
      std::vector<const TabularNode*> sorted;
      for (const TabularNode& n : state_->nodes) sorted.push_back(&n);
      std::sort(sorted.begin(), sorted.end(),
                [](const TabularNode* a, const TabularNode* b) { return a->key < b->key; });
      nlohmann::json nodes = nlohmann::json::array();
      for (const TabularNode* n : sorted) nodes.push_back({{"key", n->key}, {"logits", n->logits}});
      j["nodes"] = std::move(nodes);
    } else {
      j["hidden"] = hidden_;
      auto flat = [](const auto& m) { return std::vector<double>(m.data(), m.data() + m.size()); };
      j["w1"] = flat(net_.w1);
      j["b1"] = flat(net_.b1);
      j["w2"] = flat(net_.w2);
      j["b2"] = flat(net_.b2);
      j["w3"] = flat(net_.w3);
      j["b3"] = flat(net_.b3);
    }
    return j;
  }

  void load_json(const nlohmann::json& j, std::uint64_t fingerprint) {
    if (j.value("format", "") != "unsg-policy" || j.value("version", 0) != 1)
      throw ConfigError("not a version-1 policy checkpoint");
    if (j.at("player").get<std::string>() != player_name(tree_))
      throw InstanceMismatchError("checkpoint belongs to the other player");
    if (j.at("fingerprint").get<std::uint64_t>() != fingerprint)
      throw InstanceMismatchError("checkpoint was written for a different instance");
    if (parse_policy_mode(j.at("mode").get<std::string>()) != mode_)
      throw InstanceMismatchError("checkpoint mode differs from the policy mode");
    steps_ = j.value("optimizer_steps", 0LL);
    if (mode_ == PolicyMode::kTabular) {
      for (const auto& n : j.at("nodes")) {
        History h = history_from_key(n.at("key").get<std::vector<int>>(), tree_);
        TabularNode* node = node_for(h);
        auto logits = n.at("logits").get<std::vector<double>>();
        if (logits.size() != node->logits.size()) throw InstanceMismatchError("checkpoint node has wrong arity");
        node->logits = std::move(logits);
      }
      return;
    }
    if (j.at("hidden").get<int>() != hidden_) throw InstanceMismatchError("checkpoint hidden width differs");
    auto fill = [&](auto& m, const char* name) {
      auto v = j.at(name).get<std::vector<double>>();
      if (static_cast<Eigen::Index>(v.size()) != m.size()) throw InstanceMismatchError("checkpoint tensor size");
      std::copy(v.begin(), v.end(), m.data());
    };
    fill(net_.w1, "w1");
    fill(net_.b1, "b1");
    fill(net_.w2, "w2");
    fill(net_.b2, "b2");
    fill(net_.w3, "w3");
    fill(net_.b3, "b3");
  }

 private:
  struct Shared {
    std::mutex mutex;
    std::deque<TabularNode> nodes;
    std::unordered_map<std::vector<int>, TabularNode*, detail::VectorHash> index;
    std::atomic<TabularNode*> root{nullptr};
  };

  void init_network(std::uint64_t seed) {
    const int f = tree_->feature_width();
    const int w = tree_->mask_width();
    std::mt19937_64 rng(seed);
    auto he = [&](Eigen::MatrixXd& m, int fan_in) {
      std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    };
    net_.w1.resize(hidden_, f);
    he(net_.w1, f);
    net_.b1 = Eigen::VectorXd::Zero(hidden_);
    net_.w2.resize(hidden_, hidden_);
    he(net_.w2, hidden_);
    net_.b2 = Eigen::VectorXd::Zero(hidden_);
    net_.w3 = Eigen::MatrixXd::Zero(hidden_, w);
    net_.b3 = Eigen::VectorXd::Zero(w);
  }

  std::vector<double> forward_logits(Step& st) const {
    st.h1 = net_.b1;
    for (const auto& [idx, val] : st.features) st.h1 += val * net_.w1.col(idx);
    st.h1 = st.h1.cwiseMax(0.0);
    st.h2 = (net_.w2 * st.h1 + net_.b2).cwiseMax(0.0);
    std::vector<double> out(st.slots.size());
    for (std::size_t i = 0; i < st.slots.size(); ++i)
      out[i] = net_.w3.col(st.slots[i]).dot(st.h2) + net_.b3[st.slots[i]];
    return out;
  }

  void forward(Step& st) const {
    st.probs = forward_logits(st);
    softmax_inplace(st.probs);
  }

  void check_finite(const GradientAccumulator& g) const {
    if (mode_ == PolicyMode::kTabular) {
      for (std::size_t i = 0; i < g.rows.size(); ++i)
        for (double x : g.rows[i])
          if (!std::isfinite(x))
            throw TrainingAbortError(std::string("non-finite gradient at ") + player_name(tree_) + " node of depth " +
                                     std::to_string(g.nodes[i]->key.size()));
      return;
    }
    bool ok = true;
    const_cast<NetworkParams&>(g.dense).for_each([&](auto& m) { ok = ok && m.allFinite(); });
    if (!ok) throw TrainingAbortError(std::string("non-finite network gradient for ") + player_name(tree_));
  }

  const Tree* tree_;
  PolicyMode mode_;
  int hidden_;
  OptimizerConfig opt_;
  std::unique_ptr<Shared> state_;
  NetworkParams net_;
  NetworkParams adam_m_;
  NetworkParams adam_v_;
  long long steps_ = 0;
};

// --- walks -----------------------------------------------------------------

template <class Tree>
struct SampledAction {
  typename Tree::Action action;
  double prob = 0.0;
  StepLog log;
};

template <class Tree>
std::vector<double> conditional_distribution(const TreePolicy<Tree>& policy, const typename Tree::History& h,
                                             const ActionMask& mask) {
  if (mask.count() == 0) throw InstanceMismatchError("conditional distribution over an all-masked node");
  return masked_softmax(policy.logits(h), mask);
}

template <class Tree>
std::vector<double> conditional_distribution(const TreePolicy<Tree>& policy, const typename Tree::History& h) {
  return conditional_distribution(policy, h, policy.tree().mask(h));
}

// Chain-rule probability of `action` with its replay log.
template <class Tree>
double action_probability(const TreePolicy<Tree>& policy, const typename Tree::Action& action,
                          StepLog* log = nullptr) {
  const Tree& tree = policy.tree();
  std::vector<int> slots = tree.slots_of(action);
  typename Tree::History h = tree.root();
  TabularNode* node = policy.mode() == PolicyMode::kTabular ? policy.root_node() : nullptr;
  StepLog local;
  StepLog& out = log ? *log : local;
  out.steps.clear();
  out.steps.resize(slots.size());
  double prob = 1.0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    Step& st = out.steps[i];
    policy.evaluate(h, node, st);
    st.chosen = static_cast<int>(std::lower_bound(st.slots.begin(), st.slots.end(), slots[i]) - st.slots.begin());
    prob *= st.probs[st.chosen];
    tree.advance(h, slots[i]);
    if (node && !tree.is_leaf(h)) node = policy.child_node(node, st.chosen, h);
  }
  return prob;
}

inline int draw_index(const std::vector<double>& probs, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  // rounding: last positive entry
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return static_cast<int>(i);
  return static_cast<int>(probs.size()) - 1;
}

template <class Tree>
SampledAction<Tree> sample_action(const TreePolicy<Tree>& policy, std::mt19937_64& rng) {
  const Tree& tree = policy.tree();
  SampledAction<Tree> out;
  typename Tree::History h = tree.root();
  TabularNode* node = policy.mode() == PolicyMode::kTabular ? policy.root_node() : nullptr;
  out.prob = 1.0;
  while (!tree.is_leaf(h)) {
    Step& st = out.log.steps.emplace_back();
    policy.evaluate(h, node, st);
    st.chosen = draw_index(st.probs, rng);
    out.prob *= st.probs[st.chosen];
    tree.advance(h, st.slots[st.chosen]);
    if (node && !tree.is_leaf(h)) node = policy.child_node(node, st.chosen, h);
  }
  out.action = tree.to_action(h);
  return out;
}

template <class Tree>
GradientAccumulator action_log_prob_grad(const TreePolicy<Tree>& policy, const StepLog& log) {
  GradientAccumulator acc = policy.make_accumulator();
  policy.accumulate(log, 1.0, acc);
  return acc;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << j.dump(1) << "\n";
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed JSON in '" + path + "': " + e.what());
  }
}

}  // namespace unsg

#endif  // UNSG_POLICY_HPP_
