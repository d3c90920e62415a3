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

#ifndef EPIC_FACILITY_LOCATION_H_
#define EPIC_FACILITY_LOCATION_H_

// Facility-location maximization for per-class gradient medoids:
//
//   F(S) = sum_{i in V} max_{j in S} (c0 - d(i, j)),   F({}) = 0,
//
// which is monotone submodular whenever c0 >= max_{i,j} d(i, j). Greedy
// maximization gives a (1 - 1/e) approximation; the lazy variant keeps
// stale marginal gains in a max-heap as upper bounds.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "epic/proxy.h"

namespace epic {

enum class GreedyMode { kNaive, kLazy, kStochastic };

std::string_view GreedyModeName(GreedyMode mode);
GreedyMode ParseGreedyMode(std::string_view name);

inline constexpr double kStochasticEpsilon = 0.1;

// Candidate set of one class over a distance oracle. `indices` are row ids in
// the oracle; all public set arguments and results are expressed in them.
class FacilityObjective {
 public:
  // Throws InvalidInput if an index is out of range, duplicated, or c0 < 0.
  FacilityObjective(const DistanceOracle& oracle, std::vector<size_t> indices,
                    double c0);

  // c0 set to the exact max pairwise distance among `indices`.
  static FacilityObjective WithTightOffset(const DistanceOracle& oracle,
                                           std::vector<size_t> indices);

  const DistanceOracle& oracle() const { return *oracle_; }
  const std::vector<size_t>& indices() const { return indices_; }
  double c0() const { return c0_; }
  size_t size() const { return indices_.size(); }

  // Distance between local positions a and b.
  double LocalDistance(size_t a, size_t b) const {
    return oracle_->Distance(indices_[a], indices_[b]);
  }

  // Local position of an oracle row id; throws InvalidInput if absent.
  size_t LocalPosition(size_t index) const;

 private:
  const DistanceOracle* oracle_;
  std::vector<size_t> indices_;
  double c0_;
  std::vector<std::pair<size_t, size_t>> lookup_;  // (index, position), sorted
};

struct MedoidSelection {
  std::vector<size_t> medoids;     // selection order
  std::vector<double> gains;       // marginal gain at each greedy step
  std::vector<size_t> assignment;  // aligned with objective.indices()
  std::vector<size_t> gamma;       // aligned with medoids

  double value() const;  // sum of gains
};

double Evaluate(const FacilityObjective& objective,
                std::span<const size_t> medoids);

MedoidSelection GreedySelect(const FacilityObjective& objective, size_t k,
                             GreedyMode mode, uint64_t seed = 0,
                             double epsilon = kStochasticEpsilon);

struct BruteForceResult {
  std::vector<size_t> medoids;  // ascending
  double value = 0.0;
};

inline constexpr size_t kBruteForceLimit = 20;

BruteForceResult BruteForceOptimum(const FacilityObjective& objective,
                                   size_t k);

// Nearest-medoid assignment; ties go to the medoid with the lowest index,
// so the result does not depend on the order of `medoids`.
MedoidSelection AssignAndCount(const FacilityObjective& objective,
                               std::span<const size_t> medoids);

// max(1, round(fraction * class_size)).
size_t MedoidBudget(double fraction, size_t class_size);

namespace kernels {

// out[c] = sum_i max(0, c0 - d(i, candidates[c]) - coverage[i]), with the
// candidates evaluated in parallel. Candidates are local positions.
void MarginalGains(const FacilityObjective& objective,
                   std::span<const double> coverage,
                   std::span<const size_t> candidates, std::span<double> out);

double MarginalGain(const FacilityObjective& objective,
                    std::span<const double> coverage, size_t candidate);

}  // namespace kernels

}  // namespace epic

#endif  // EPIC_FACILITY_LOCATION_H_
