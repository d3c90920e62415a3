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

#ifndef EPIC_DATASET_H_
#define EPIC_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace epic {

// Labeled feature rows, with an optional ground-truth poison mask.
struct Dataset {
  size_t num_classes = 0;
  size_t dim = 0;
  std::vector<double> features;  // size() x dim, row-major
  std::vector<size_t> labels;
  std::vector<uint8_t> poison;   // empty when unknown

  size_t size() const { return labels.size(); }
  std::span<const double> x(size_t i) const {
    return {features.data() + i * dim, dim};
  }
  std::span<double> mutable_x(size_t i) {
    return {features.data() + i * dim, dim};
  }
  bool has_poison_mask() const { return !poison.empty(); }
  bool is_poison(size_t i) const { return has_poison_mask() && poison[i] != 0; }

  // Throws InvalidInput on inconsistent sizes, bad labels or non-finite rows.
  void Validate() const;

  // Appends one example; `poisoned` is recorded only if a mask is present
  // or poisoned == true (which creates the mask).
  void Append(std::span<const double> row, size_t label, bool poisoned = false);

  Dataset Subset(std::span<const size_t> indices) const;
};

struct DropRecord {
  size_t index = 0;
  size_t epoch = 0;
  size_t cls = 0;
  size_t medoid_rank = 0;  // position in that class's greedy selection order

  bool operator==(const DropRecord&) const = default;
};

// Active index set V and cumulative drop set Z over a fixed dataset.
// V only ever shrinks; V and Z always partition the index universe.
class DatasetState {
 public:
  explicit DatasetState(Dataset data);

  const Dataset& data() const { return data_; }
  const std::vector<size_t>& active() const { return active_; }
  const std::vector<DropRecord>& dropped() const { return dropped_; }
  bool IsActive(size_t index) const { return is_active_[index] != 0; }

  // Active indices of one class, ascending.
  std::vector<size_t> ActiveOfClass(size_t cls) const;
  size_t ActiveCount(size_t cls) const;

  // Moves the given indices from V to Z. Throws InvalidInput if any index is
  // not currently active.
  void Drop(std::span<const DropRecord> records);

 private:
  Dataset data_;
  std::vector<size_t> active_;
  std::vector<uint8_t> is_active_;
  std::vector<DropRecord> dropped_;
};

// Isotropic Gaussian blobs with class means evenly spaced on a circle of
// the given radius in the first two coordinates.
struct BlobsSpec {
  size_t num_classes = 2;
  size_t dim = 2;
  size_t per_class = 100;
  double radius = 3.0;
  double stddev = 1.0;
};

Dataset MakeBlobs(const BlobsSpec& spec, uint64_t seed);

std::vector<double> BlobMean(const BlobsSpec& spec, size_t cls);

}  // namespace epic

#endif  // EPIC_DATASET_H_
