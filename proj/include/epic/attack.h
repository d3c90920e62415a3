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

#ifndef EPIC_ATTACK_H_
#define EPIC_ATTACK_H_

// Desk-scale targeted clean-label poisoning against the toy models.
//
// Poisons keep their labels and move inside an L-inf box of radius epsilon.
// Gradient matching maximizes the cosine between the mean poison gradient
// and the gradient of the target under the adversarial label, both taken at
// a fixed surrogate model; feature collision pulls each poison's embedding
// onto the target's.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "epic/dataset.h"
#include "epic/defense.h"
#include "epic/model.h"

namespace epic {

enum class AttackObjective { kGradientMatch, kFeatureCollision };

std::string_view AttackObjectiveName(AttackObjective objective);
AttackObjective ParseAttackObjective(std::string_view name);

inline constexpr size_t kDefaultCraftSteps = 250;

struct AttackSpec {
  std::vector<size_t> base_indices;  // V_p
  std::vector<double> target_x;
  size_t adv_label = 0;
  double epsilon = 0.0;
  size_t steps = kDefaultCraftSteps;
  double step_size = 0.0;  // 0 selects epsilon / steps
  AttackObjective objective = AttackObjective::kGradientMatch;
};

struct AttackResult {
  std::vector<double> perturbations;  // |V_p| x dim, aligned with base_indices
  double initial_alignment = 0.0;
  double final_alignment = 0.0;
  // Objective value after each step (cosine for gradient matching, negative
  // summed squared embedding distance for feature collision).
  std::vector<double> objective_trace;
  size_t rejected_steps = 0;
  std::optional<bool> success;
};

// Cosine between the mean gradient of the (perturbed) poisons and the
// target gradient under adv_label.
double PoisonAlignment(const ToyModel& surrogate, const Dataset& data,
                       std::span<const size_t> base_indices,
                       std::span<const double> perturbations,
                       std::span<const double> target_x, size_t adv_label);

// d(alignment)/d(x_i) for every poison, aligned with base_indices. Closed
// form for linear models, central differences on the inputs otherwise.
std::vector<double> AlignmentInputGradient(const ToyModel& surrogate,
                                           const Dataset& data,
                                           std::span<const size_t> base_indices,
                                           std::span<const double> perturbations,
                                           std::span<const double> target_x,
                                           size_t adv_label);

// Signed-gradient ascent with box projection after every step. A step that
// would lower the objective is retried at half size (up to 4 times) and
// otherwise skipped, so the recorded objective never decreases. Throws
// DegenerateTarget for a zero target gradient.
AttackResult Craft(const AttackSpec& spec, const ToyModel& surrogate,
                   const Dataset& data);

// Copy of `data` with the perturbations added and the poison mask set.
Dataset ApplyPoisons(const Dataset& data, std::span<const size_t> base_indices,
                     std::span<const double> perturbations);

struct VictimConfig {
  Architecture arch = Architecture::kLinear;
  size_t hidden = kDefaultHiddenWidth;
  LrSchedule schedule;
  BatchMode batch;
  size_t epochs = 40;
  std::optional<DefenseConfig> defense;
  // Record full-data loss and gradients every epoch (see Instrumentation).
  bool instrument = false;
};

ToyModel InitVictim(const VictimConfig& config, const Dataset& data,
                    uint64_t seed);

// Trains one victim from a fresh seeded init (running the defense when
// configured) and returns it together with its trace.
struct VictimRun {
  ToyModel model;
  TrainTrace trace;
};
VictimRun TrainVictim(const Dataset& data, const VictimConfig& config,
                      uint64_t seed, const EpochObserver& observer = {});

// Fraction of seeded victims that classify the target as adv_label.
double EvaluateAttack(const Dataset& poisoned, const VictimConfig& config,
                      std::span<const double> target_x, size_t adv_label,
                      std::span<const uint64_t> seeds);

enum class SubsetSearch { kExhaustive, kGreedyAblation };

inline constexpr size_t kExhaustiveSubsetLimit = 16;

struct EffectiveSubset {
  std::vector<size_t> poisons;  // dataset indices, ascending
  bool subset_succeeds = false;
  bool complement_fails = false;
  size_t evaluations = 0;  // distinct subsets trained
};

// Smallest set of poisons such that training with only those poisons
// (the others removed from the data) succeeds, while training with only the
// remaining poisons fails. Success means a success rate >= threshold over
// the seeds. Throws NoEffectiveSubset when the full poison set fails or the
// attack succeeds without any poison.
EffectiveSubset FindEffectiveSubset(const Dataset& poisoned,
                                    std::span<const size_t> poison_indices,
                                    const VictimConfig& config,
                                    std::span<const double> target_x,
                                    size_t adv_label,
                                    std::span<const uint64_t> seeds,
                                    SubsetSearch mode,
                                    double success_threshold = 0.5);

}  // namespace epic

#endif  // EPIC_ATTACK_H_
