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

#ifndef EPIC_DEFENSE_H_
#define EPIC_DEFENSE_H_

// Iterative elimination of isolated gradient medoids during training.
//
// After `warmup_epochs` of plain training, and then every
// `interval_epochs`, each class's active examples are clustered around
// greedy facility-location medoids in proxy space. A medoid that no other
// example is nearest to (gamma == 1) is dropped from the active set for the
// rest of the run.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "epic/dataset.h"
#include "epic/facility_location.h"
#include "epic/model.h"
#include "epic/proxy.h"
#include "epic/trace.h"
#include "epic/trainer.h"

namespace epic {

inline constexpr size_t kDefaultClassGuard = 10;

struct DefenseConfig {
  size_t warmup_epochs = 10;
  size_t interval_epochs = 2;
  double medoid_fraction = 0.1;
  GreedyMode greedy_mode = GreedyMode::kLazy;
  ProxyMode proxy_mode = ProxyMode::kClassResidual;
  bool unit_norm = false;
  uint64_t seed = 0;
  // Classes with at most this many active examples are never pruned;
  // 0 disables the guard.
  size_t min_class_size_guard = kDefaultClassGuard;

  void Validate() const;

  // Medoid fraction 0.1 / 0.2 / 0.3 with warmup 10 / 20 / 30 and the given
  // interval (2 for a 40-epoch run, 10 for a 200-epoch run).
  static DefenseConfig Preset(double fraction, size_t interval = 2);

  bool IsRoundEpoch(size_t epoch) const {
    return epoch >= warmup_epochs &&
           (epoch - warmup_epochs) % interval_epochs == 0;
  }
};

// One selection round over the active set. `proxies` rows are aligned with
// state.active(). Does not modify the state.
RoundReport EliminationRound(const DatasetState& state,
                             const ProxyMatrix& proxies,
                             const DefenseConfig& config, size_t epoch);

std::vector<DropRecord> DropRecords(const RoundReport& report);

// Full defended run: warmup, rounds at epochs K, K+T, ..., each strictly
// before that epoch's training pass. Throws ClassExhausted if a class loses
// all of its active examples.
TrainTrace RunDefense(ToyModel& model, DatasetState& state,
                      const DefenseConfig& config, const TrainOptions& options,
                      size_t total_epochs);

struct HistogramBucket {
  size_t clusters = 0;
  size_t clean = 0;
  size_t poison = 0;
  size_t unknown = 0;  // members when no ground-truth mask is available
};

// Cluster size (gamma) -> membership counts over all pruned classes.
using ClusterHistogram = std::map<size_t, HistogramBucket>;

ClusterHistogram BuildClusterHistogram(const RoundReport& report,
                                       const Dataset& data);

struct CosinePoint {
  std::optional<double> poison_poison;  // mean over unordered poison pairs
  std::optional<double> poison_target;  // mean over poisons
  size_t skipped = 0;                   // pairs with a zero-norm vector
};

// Cosine similarity; nullopt when either vector has zero norm.
std::optional<double> Cosine(std::span<const double> a, std::span<const double> b);

// One point per epoch. `proxies[t]` rows are examples, `poison_mask` marks
// poison rows, `targets[t]` is the target proxy at epoch t.
std::vector<CosinePoint> CosineAlignmentTrace(
    std::span<const ProxyMatrix> proxies, std::span<const uint8_t> poison_mask,
    std::span<const std::vector<double>> targets);

}  // namespace epic

#endif  // EPIC_DEFENSE_H_
