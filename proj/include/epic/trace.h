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

#ifndef EPIC_TRACE_H_
#define EPIC_TRACE_H_

#include <cstddef>
#include <optional>
#include <vector>

namespace epic {

struct EpochRecord {
  size_t epoch = 0;
  double lr = 0.0;
  size_t active = 0;
  double loss = 0.0;      // mean loss on V after the epoch
  double accuracy = 0.0;  // accuracy on V after the epoch
};

// Outcome of one elimination round for one class.
struct ClassRound {
  size_t cls = 0;
  size_t size = 0;     // |V_c| at the start of the round
  size_t budget = 0;   // k_c
  bool skipped = false;
  double c0 = 0.0;
  std::vector<size_t> members;     // V_c, ascending dataset indices
  std::vector<size_t> medoids;     // greedy order
  std::vector<size_t> gamma;       // aligned with medoids
  std::vector<size_t> assignment;  // aligned with members
  std::vector<size_t> dropped;     // isolated medoids, greedy order
};

struct RoundReport {
  size_t epoch = 0;
  std::vector<ClassRound> classes;
  std::vector<size_t> dropped;  // all classes, ascending
  bool has_mask = false;
  size_t dropped_clean = 0;
  size_t dropped_poison = 0;
};

// Per-epoch gradient probes for the convergence bench, taken before each
// epoch's training pass. full_grad is the mean gradient over every example;
// subset_grad sums the active examples' gradients on the same 1/n scale.
// full_loss has one more entry than the gradient series (the loss after the
// final step).
struct Instrumentation {
  std::vector<double> full_loss;
  std::vector<std::vector<double>> full_grad;
  std::vector<std::vector<double>> subset_grad;
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
  std::vector<RoundReport> rounds;
  std::optional<Instrumentation> instrumentation;
};

}  // namespace epic

#endif  // EPIC_TRACE_H_
