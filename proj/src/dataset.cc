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

#include "epic/dataset.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "epic/error.h"
#include "epic/rng.h"

namespace epic {

void Dataset::Validate() const {
  if (num_classes < 2) Fail(ErrorCode::kInvalidInput, "need at least 2 classes");
  if (dim == 0) Fail(ErrorCode::kInvalidInput, "feature dimension must be > 0");
  if (features.size() != labels.size() * dim) {
    Fail(ErrorCode::kInvalidInput, "feature/label count mismatch");
  }
  if (has_poison_mask() && poison.size() != labels.size()) {
    Fail(ErrorCode::kInvalidInput, "poison mask length mismatch");
  }
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      Fail(ErrorCode::kInvalidInput, "label out of range at " + std::to_string(i));
    }
  }
  for (double v : features) {
    if (!std::isfinite(v)) Fail(ErrorCode::kInvalidInput, "non-finite feature");
  }
}

void Dataset::Append(std::span<const double> row, size_t label, bool poisoned) {
  if (row.size() != dim) Fail(ErrorCode::kInvalidInput, "row width mismatch");
  if (poisoned && !has_poison_mask()) poison.assign(size(), 0);
  features.insert(features.end(), row.begin(), row.end());
  labels.push_back(label);
  if (has_poison_mask()) poison.push_back(poisoned ? 1 : 0);
}

Dataset Dataset::Subset(std::span<const size_t> indices) const {
  Dataset out;
  out.num_classes = num_classes;
  out.dim = dim;
  for (size_t i : indices) {
    out.features.insert(out.features.end(), x(i).begin(), x(i).end());
    out.labels.push_back(labels[i]);
    if (has_poison_mask()) out.poison.push_back(poison[i]);
  }
  return out;
}

DatasetState::DatasetState(Dataset data) : data_(std::move(data)) {
  data_.Validate();
  active_.resize(data_.size());
  for (size_t i = 0; i < active_.size(); ++i) active_[i] = i;
  is_active_.assign(data_.size(), 1);
}

std::vector<size_t> DatasetState::ActiveOfClass(size_t cls) const {
  std::vector<size_t> out;
  for (size_t i : active_) {
    if (data_.labels[i] == cls) out.push_back(i);
  }
  return out;
}

size_t DatasetState::ActiveCount(size_t cls) const {
  return static_cast<size_t>(std::ranges::count_if(
      active_, [&](size_t i) { return data_.labels[i] == cls; }));
}

void DatasetState::Drop(std::span<const DropRecord> records) {
  for (const DropRecord& r : records) {
    if (r.index >= data_.size() || !is_active_[r.index]) {
      Fail(ErrorCode::kInvalidInput,
           "cannot drop inactive index " + std::to_string(r.index));
    }
    is_active_[r.index] = 0;
    dropped_.push_back(r);
  }
  std::erase_if(active_, [&](size_t i) { return !is_active_[i]; });
}

std::vector<double> BlobMean(const BlobsSpec& spec, size_t cls) {
  std::vector<double> mean(spec.dim, 0.0);
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(cls) /
                       static_cast<double>(spec.num_classes);
  mean[0] = spec.radius * std::cos(angle);
  if (spec.dim > 1) mean[1] = spec.radius * std::sin(angle);
  return mean;
}

Dataset MakeBlobs(const BlobsSpec& spec, uint64_t seed) {
  Dataset data;
  data.num_classes = spec.num_classes;
  data.dim = spec.dim;
  Rng rng(seed);
  std::vector<double> row(spec.dim);
  for (size_t c = 0; c < spec.num_classes; ++c) {
    const std::vector<double> mean = BlobMean(spec, c);
    for (size_t i = 0; i < spec.per_class; ++i) {
      for (size_t d = 0; d < spec.dim; ++d) row[d] = rng.Normal(mean[d], spec.stddev);
      data.Append(row, c);
    }
  }
  data.Validate();
  return data;
}

}  // namespace epic
