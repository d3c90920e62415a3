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

#ifndef EPIC_REFERENCE_H_
#define EPIC_REFERENCE_H_

// Serial versions of the parallel kernels. They are kept for tests and the
// benchmark; production paths never call them.

#include <span>
#include <vector>

#include "epic/dataset.h"
#include "epic/facility_location.h"
#include "epic/model.h"
#include "epic/proxy.h"

namespace epic::reference {

std::vector<double> DistanceMatrix(const ProxyMatrix& proxies);

void MarginalGains(const FacilityObjective& objective,
                   std::span<const double> coverage,
                   std::span<const size_t> candidates, std::span<double> out);

// Plain left-to-right accumulation over the batch.
LossGrad LossAndGrad(const ToyModel& model, const Dataset& data,
                     std::span<const size_t> batch);

}  // namespace epic::reference

#endif  // EPIC_REFERENCE_H_
