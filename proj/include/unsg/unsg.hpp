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

// Everything in one include.

#ifndef UNSG_UNSG_HPP_
#define UNSG_UNSG_HPP_

#include "unsg/action_tree.hpp"
#include "unsg/baselines.hpp"
#include "unsg/config.hpp"
#include "unsg/error.hpp"
#include "unsg/evaluator.hpp"
#include "unsg/experiment.hpp"
#include "unsg/game.hpp"
#include "unsg/generators.hpp"
#include "unsg/graph_io.hpp"
#include "unsg/metrics.hpp"
#include "unsg/policy.hpp"
#include "unsg/rng.hpp"
#include "unsg/tso.hpp"

#endif  // UNSG_UNSG_HPP_
