// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef EPIC_SIM_H_
#define EPIC_SIM_H_

// End-to-end experiment drivers behind the command-line tool: the
// blobs-plus-attack simulation and a single selection round over an
// external gradient dump.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epic/attack.h"
#include "epic/dataset.h"
#include "epic/defense.h"
#include "epic/grad_dump.h"
#include "epic/model.h"
#include "epic/report.h"

namespace epic {

struct PlantedExample {
  std::vector<double> x;
  size_t label = 0;
};

struct SimAttack {
  AttackObjective objective = AttackObjective::kGradientMatch;
  size_t num_poisons = 20;
  double epsilon = 1.0;
  size_t steps = kDefaultCraftSteps;
  double step_size = 0.0;
  size_t target_class = 0;
  size_t adv_class = 1;
};

struct SimConfig {
  uint64_t seed = 0;
  size_t trials = 1;

  BlobsSpec dataset;
  size_t test_per_class = 100;
  // Appended to every training set and marked in the poison mask.
  std::vector<PlantedExample> outliers;

  Architecture arch = Architecture::kLinear;
  size_t hidden = kDefaultHiddenWidth;

  size_t epochs = 40;
  LrSchedule schedule{0.5, {}, 10.0};
  size_t batch_size = 0;  // 0 = full batch

  bool defense_enabled = true;
  DefenseConfig defense;

  std::optional<SimAttack> attack;
  bool run_undefended = true;
  bool theorem = false;

  // Strict parse: unknown keys and mistyped values throw InvalidInput naming
  // the dotted key path.
  static SimConfig FromJson(const Json& json);
  Json ToJson() const;
  void Validate() const;
};

struct TrialOutcome {
  uint64_t seed = 0;
  std::optional<size_t> target_index;  // index in the test set
  std::vector<size_t> poison_indices;
  double initial_alignment = 0.0;
  double final_alignment = 0.0;
  std::optional<bool> defended_success;
  std::optional<bool> undefended_success;
  std::optional<double> defended_accuracy;
  std::optional<double> undefended_accuracy;
  size_t dropped_clean = 0;
  size_t dropped_poison = 0;
};

struct SimResult {
  std::vector<TrialOutcome> trials;
  std::optional<double> defended_rate;
  std::optional<double> undefended_rate;
  std::optional<double> defended_accuracy;    // mean test accuracy
  std::optional<double> undefended_accuracy;
  std::optional<TheoremReport> theorem_epic;
  std::optional<TheoremReport> theorem_random;
  Json report;
};

SimResult RunSimulation(const SimConfig& config);

struct SelectResult {
  RoundReport round;
  std::string listing;  // human-readable medoid and drop listing
  Json report;
};

// One elimination round over externally computed proxies. Classes with at
// most `guard` examples are left untouched (0 disables the guard).
SelectResult RunSelect(const GradDump& dump, const Labels& labels,
                       double fraction, GreedyMode mode, uint64_t seed,
                       size_t guard = 0);

}  // namespace epic

#endif  // EPIC_SIM_H_
