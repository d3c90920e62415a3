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

#ifndef EPIC_MODEL_H_
#define EPIC_MODEL_H_

// Desk-scale classifiers with hand-written gradients:
//   linear:      logits = W x + b
//   one_hidden:  h = tanh(W1 x + b1), logits = W2 h + b2
// Parameters live in one flat vector; the last layer (W, b or W2, b2) is
// always the trailing block, laid out weights-then-bias, row-major.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "epic/dataset.h"
#include "epic/proxy.h"

namespace epic {

enum class Architecture { kLinear, kOneHidden };

std::string_view ArchitectureName(Architecture arch);
Architecture ParseArchitecture(std::string_view name);

inline constexpr size_t kDefaultHiddenWidth = 16;
inline constexpr double kInitScale = 0.1;

struct ToyModel {
  Architecture arch = Architecture::kLinear;
  size_t input_dim = 0;
  size_t num_classes = 0;
  size_t hidden = 0;  // one_hidden only
  std::vector<double> params;

  static ToyModel Linear(size_t input_dim, size_t num_classes);
  static ToyModel OneHidden(size_t input_dim, size_t num_classes,
                            size_t hidden = kDefaultHiddenWidth);

  size_t ParameterCount() const;
  // Width of the input to the last layer (input_dim for linear models).
  size_t EmbeddingWidth() const;
  size_t LastLayerOffset() const;

  // Every parameter uniform in [-scale, scale].
  void InitUniform(uint64_t seed, double scale = kInitScale);
};

struct ForwardResult {
  std::vector<double> embedding;  // input to the last layer
  std::vector<double> logits;
};

ForwardResult Forward(const ToyModel& model, std::span<const double> x);

// Argmax of the logits; ties go to the lowest class.
size_t Predict(const ToyModel& model, std::span<const double> x);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Cross-entropy and its exact parameter gradient for one example.
LossGrad ExampleLossAndGrad(const ToyModel& model, std::span<const double> x,
                            size_t label);

// Mean cross-entropy and gradient over `batch`. Examples are reduced in
// fixed-size chunks evaluated in parallel, then summed in chunk order, so
// the result does not depend on the thread count.
LossGrad LossAndGrad(const ToyModel& model, const Dataset& data,
                     std::span<const size_t> batch);

// theta - lr * grad. Throws NumericalDivergence on a non-finite gradient or
// result.
std::vector<double> GdStep(std::span<const double> params,
                           std::span<const double> grad, double lr);

ToyModel GdStep(const ToyModel& model, const Dataset& data,
                std::span<const size_t> batch, double lr);

struct LrSchedule {
  double base = 0.1;
  std::vector<size_t> decay_epochs;  // ascending
  double decay_factor = 10.0;        // lr is divided by this at each decay

  double At(size_t epoch) const;
  void Validate() const;
};

struct BatchMode {
  bool minibatch = false;
  size_t batch_size = 0;
  uint64_t seed = 0;

  static BatchMode Full() { return {}; }
  static BatchMode Minibatch(size_t size, uint64_t seed) {
    return {true, size, seed};
  }
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

Evaluation EvaluateModel(const ToyModel& model, const Dataset& data,
                         std::span<const size_t> indices);
Evaluation EvaluateModel(const ToyModel& model, const Dataset& data);

// Proxy rows for the given examples, aligned with `indices`.
ProxyMatrix ExtractProxies(const ToyModel& model, const Dataset& data,
                           std::span<const size_t> indices, ProxyMode mode,
                           bool unit_norm = false);

}  // namespace epic

#endif  // EPIC_MODEL_H_
