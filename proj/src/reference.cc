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

#include "epic/reference.h"

#include "epic/error.h"

namespace epic::reference {

std::vector<double> DistanceMatrix(const ProxyMatrix& proxies) {
  const size_t n = proxies.rows();
  std::vector<double> out(n * n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (i != j) out[i * n + j] = kernels::RowDistance(proxies.row(i), proxies.row(j));
    }
  }
  return out;
}

void MarginalGains(const FacilityObjective& objective,
                   std::span<const double> coverage,
                   std::span<const size_t> candidates, std::span<double> out) {
  for (size_t c = 0; c < candidates.size(); ++c) {
    out[c] = kernels::MarginalGain(objective, coverage, candidates[c]);
  }
}

LossGrad LossAndGrad(const ToyModel& model, const Dataset& data,
                     std::span<const size_t> batch) {
  if (batch.empty()) Fail(ErrorCode::kInvalidInput, "empty batch");
  LossGrad out;
  out.grad.assign(model.ParameterCount(), 0.0);
  for (size_t i : batch) {
    const LossGrad ex = ExampleLossAndGrad(model, data.x(i), data.labels[i]);
    out.loss += ex.loss;
    for (size_t p = 0; p < out.grad.size(); ++p) out.grad[p] += ex.grad[p];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  for (double& v : out.grad) v *= inv;
  return out;
}

}  // namespace epic::reference
