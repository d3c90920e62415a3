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

#ifndef EPIC_TRAINER_H_
#define EPIC_TRAINER_H_

#include <cstddef>
#include <functional>
#include <optional>

#include "epic/dataset.h"
#include "epic/model.h"
#include "epic/trace.h"

namespace epic {

// Called after every epoch with the updated model.
using EpochObserver =
    std::function<void(size_t epoch, const ToyModel& model,
                       const DatasetState& state)>;

struct TrainOptions {
  LrSchedule schedule;
  BatchMode batch;
  // Record full-data loss and full/active gradients at every epoch.
  bool instrument = false;
  EpochObserver observer;
};

// One pass over V: a single GD step for full-batch mode, or one sweep of
// shuffled minibatches (order drawn from batch.seed and the epoch index).
// Throws NumericalDivergence tagged with the epoch.
void TrainEpoch(ToyModel& model, const DatasetState& state,
                const TrainOptions& options, size_t epoch);

// Appends the epoch record (and instrumentation probe) for `epoch`.
void RecordEpoch(const ToyModel& model, const DatasetState& state,
                 const TrainOptions& options, size_t epoch, TrainTrace& trace);

// Probe at the current parameters, before the epoch's update.
void ProbeGradients(const ToyModel& model, const DatasetState& state,
                    Instrumentation& out);

// Invoked at the start of every epoch, before the probe and the update. A
// returned report is appended to the trace; the hook applies its own drops.
using RoundHook = std::function<std::optional<RoundReport>(
    size_t epoch, const ToyModel& model, DatasetState& state)>;

TrainTrace TrainWithRounds(ToyModel& model, DatasetState& state,
                           const TrainOptions& options, size_t epochs,
                           const RoundHook& hook);

TrainTrace Train(ToyModel& model, DatasetState& state,
                 const TrainOptions& options, size_t epochs);

}  // namespace epic

#endif  // EPIC_TRAINER_H_
