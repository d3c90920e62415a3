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

#include "epic/trainer.h"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "epic/error.h"
#include "epic/rng.h"

namespace epic {
namespace {

constexpr uint64_t kMinibatchStream = 0x6d62;

}  // namespace

void TrainEpoch(ToyModel& model, const DatasetState& state,
                const TrainOptions& options, size_t epoch) {
  const auto& active = state.active();
  if (active.empty()) Fail(ErrorCode::kInvalidInput, "no active examples");
  const double lr = options.schedule.At(epoch);
  try {
    if (!options.batch.minibatch) {
      const LossGrad lg = LossAndGrad(model, state.data(), active);
      model.params = GdStep(model.params, lg.grad, lr);
      return;
    }
    if (options.batch.batch_size == 0) {
      Fail(ErrorCode::kInvalidInput, "minibatch size must be > 0");
    }
    std::vector<size_t> order = active;
    Rng rng(DeriveSeed(options.batch.seed, kMinibatchStream + epoch));
    rng.Shuffle(std::span<size_t>(order));
    for (size_t begin = 0; begin < order.size(); begin += options.batch.batch_size) {
      const size_t end = std::min(order.size(), begin + options.batch.batch_size);
      const std::span<const size_t> batch(order.data() + begin, end - begin);
      const LossGrad lg = LossAndGrad(model, state.data(), batch);
      model.params = GdStep(model.params, lg.grad, lr);
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNumericalDivergence) throw;
    Fail(ErrorCode::kNumericalDivergence,
         "diverged at epoch " + std::to_string(epoch));
  }
}

void ProbeGradients(const ToyModel& model, const DatasetState& state,
                    Instrumentation& out) {
  std::vector<size_t> all(state.data().size());
  std::iota(all.begin(), all.end(), 0);
  LossGrad full = LossAndGrad(model, state.data(), all);
  LossGrad subset = LossAndGrad(model, state.data(), state.active());
  // Kept examples only, on the full-data 1/n scale.
  const double scale = static_cast<double>(state.active().size()) /
                       static_cast<double>(all.size());
  for (double& v : subset.grad) v *= scale;
  out.full_loss.push_back(full.loss);
  out.full_grad.push_back(std::move(full.grad));
  out.subset_grad.push_back(std::move(subset.grad));
}

void RecordEpoch(const ToyModel& model, const DatasetState& state,
                 const TrainOptions& options, size_t epoch, TrainTrace& trace) {
  const Evaluation eval = EvaluateModel(model, state.data(), state.active());
  trace.epochs.push_back({epoch, options.schedule.At(epoch),
                          state.active().size(), eval.loss, eval.accuracy});
  if (options.observer) options.observer(epoch, model, state);
}

TrainTrace TrainWithRounds(ToyModel& model, DatasetState& state,
                           const TrainOptions& options, size_t epochs,
                           const RoundHook& hook) {
  options.schedule.Validate();
  TrainTrace trace;
  if (options.instrument) trace.instrumentation.emplace();
  for (size_t epoch = 0; epoch < epochs; ++epoch) {
    if (hook) {
      if (std::optional<RoundReport> report = hook(epoch, model, state)) {
        trace.rounds.push_back(std::move(*report));
      }
    }
    if (options.instrument) ProbeGradients(model, state, *trace.instrumentation);
    TrainEpoch(model, state, options, epoch);
    RecordEpoch(model, state, options, epoch, trace);
  }
  if (options.instrument && epochs > 0) {
    std::vector<size_t> all(state.data().size());
    std::iota(all.begin(), all.end(), 0);
    trace.instrumentation->full_loss.push_back(
        LossAndGrad(model, state.data(), all).loss);
  }
  return trace;
}

TrainTrace Train(ToyModel& model, DatasetState& state,
                 const TrainOptions& options, size_t epochs) {
  return TrainWithRounds(model, state, options, epochs, {});
}

}  // namespace epic
