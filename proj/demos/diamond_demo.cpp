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

// Diamond demo: two roads into one exit, one defender who can guard either
// road's last edge. The equilibrium is uniform for both sides; TSO, flat
// NAL and the double oracle should all get there.

#include <iostream>

#include "unsg/unsg.hpp"

int main() {
  using namespace unsg;
  GameGraph g(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}}, {0}, {{3, 1.0}}, 3);
  SecurityGame game(std::move(g), DefenderSpec{1, {{{1, 3}, {2, 3}}}, true});
  EnumeratedGame e = EnumeratedGame::build(game);

  TsoHyperparameters hp;
  hp.total_iterations = 3000;
  hp.batch_size = 32;
  hp.learning_rate = 0.01;
  hp.tau = 0.1;
  hp.update_percentage = 0.1;
  hp.tau_decay = 0.9;
  PolicyOptions po;
  po.optimizer.kind = OptimizerKind::kSgd;
  TsoTrainer tso(game, hp, po, 7);
  tso.train();
  auto show = [&](const char* name, const MixedStrategy& x, const MixedStrategy& y) {
    std::cout << name << ": attacker (" << x.probabilities[0] << ", " << x.probabilities[1] << ")  defender ("
              << y.probabilities[0] << ", " << y.probabilities[1] << ")  gap " << duality_gap(x, y, e.payoff) << "\n";
  };
  show("tso", extract_mixed_strategy(tso.attacker_policy(), e.attacker_actions),
       extract_mixed_strategy(tso.defender_policy(), e.defender_actions));

  TsoHyperparameters nh = flat_nal_defaults();
  nh.total_iterations = 3000;
  FlatNalTrainer nal(game, nh, {}, 7);
  nal.train();
  show("nal", flat_strategy(nal.attacker_policy()), flat_strategy(nal.defender_policy()));

  DoubleOracleResult r = double_oracle(e, 7);
  show("double oracle", r.attacker_full, r.defender_full);
  std::cout << "double oracle used " << r.samples << " payoff queries in " << r.iterations << " iterations\n";
  return 0;
}
