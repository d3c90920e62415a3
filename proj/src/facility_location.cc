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

#include "epic/facility_location.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

#include "epic/error.h"
#include "epic/rng.h"

namespace epic {
namespace {

// Strictly better: larger gain, or equal gain and lower oracle index.
bool Better(double gain, size_t index, double best_gain, size_t best_index) {
  return gain > best_gain || (gain == best_gain && index < best_index);
}

void Cover(const FacilityObjective& objective, size_t chosen,
           std::vector<double>& coverage) {
  for (size_t i = 0; i < coverage.size(); ++i) {
    coverage[i] = std::max(coverage[i],
                           objective.c0() - objective.LocalDistance(i, chosen));
  }
}

struct HeapEntry {
  double bound;
  size_t index;     // oracle index, used for tie-breaking
  size_t position;  // local position
  size_t stamp;     // greedy step at which `bound` was computed
};

struct HeapOrder {
  bool operator()(const HeapEntry& a, const HeapEntry& b) const {
    // priority_queue pops the largest; "a < b" means b is preferred.
    return Better(b.bound, b.index, a.bound, a.index);
  }
};

std::vector<size_t> NaiveOrLazy(const FacilityObjective& objective, size_t k,
                                bool lazy, std::vector<double>& gains) {
  const size_t n = objective.size();
  std::vector<double> coverage(n, 0.0);
  std::vector<size_t> chosen;
  chosen.reserve(k);

  std::vector<size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<double> first(n);
  kernels::MarginalGains(objective, coverage, all, first);

  if (!lazy) {
    std::vector<bool> taken(n, false);
    std::vector<size_t> open;
    std::vector<double> open_gains;
    for (size_t step = 0; step < k; ++step) {
      if (step == 0) {
        open = all;
        open_gains = first;
      } else {
        open.clear();
        for (size_t p = 0; p < n; ++p) {
          if (!taken[p]) open.push_back(p);
        }
        open_gains.assign(open.size(), 0.0);
        kernels::MarginalGains(objective, coverage, open, open_gains);
      }
      size_t best = open[0];
      double best_gain = open_gains[0];
      for (size_t c = 1; c < open.size(); ++c) {
        if (Better(open_gains[c], objective.indices()[open[c]], best_gain,
                   objective.indices()[best])) {
          best = open[c];
          best_gain = open_gains[c];
        }
      }
      taken[best] = true;
      chosen.push_back(best);
      gains.push_back(best_gain);
      Cover(objective, best, coverage);
    }
    return chosen;
  }

  std::priority_queue<HeapEntry, std::vector<HeapEntry>, HeapOrder> heap;
  for (size_t p = 0; p < n; ++p) {
    heap.push({first[p], objective.indices()[p], p, 0});
  }
  size_t step = 0;
  while (chosen.size() < k) {
    HeapEntry top = heap.top();
    heap.pop();
    if (top.stamp == step) {
      chosen.push_back(top.position);
      gains.push_back(top.bound);
      Cover(objective, top.position, coverage);
      ++step;
    } else {
      // Gains only shrink as coverage grows, so the stale bound is an upper
      // bound bit-for-bit and a fresh top entry is the exact argmax.
      top.bound = kernels::MarginalGain(objective, coverage, top.position);
      top.stamp = step;
      heap.push(top);
    }
  }
  return chosen;
}

std::vector<size_t> Stochastic(const FacilityObjective& objective, size_t k,
                               uint64_t seed, double epsilon,
                               std::vector<double>& gains) {
  const size_t n = objective.size();
  const auto sample_size = static_cast<size_t>(
      std::ceil(static_cast<double>(n) / static_cast<double>(k) *
                std::log(1.0 / epsilon)));
  Rng rng(seed);
  std::vector<double> coverage(n, 0.0);
  std::vector<size_t> remaining(n);
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<size_t> chosen;
  std::vector<size_t> sample;
  std::vector<double> sample_gains;
  while (chosen.size() < k) {
    const size_t s = std::clamp<size_t>(sample_size, 1, remaining.size());
    // Partial Fisher-Yates over a copy of the remaining positions.
    sample = remaining;
    for (size_t i = 0; i < s; ++i) {
      const size_t j = i + static_cast<size_t>(rng.UniformInt(sample.size() - i));
      std::swap(sample[i], sample[j]);
    }
    sample.resize(s);
    sample_gains.assign(s, 0.0);
    kernels::MarginalGains(objective, coverage, sample, sample_gains);
    size_t best = 0;
    for (size_t c = 1; c < s; ++c) {
      if (Better(sample_gains[c], objective.indices()[sample[c]],
                 sample_gains[best], objective.indices()[sample[best]])) {
        best = c;
      }
    }
    const size_t position = sample[best];
    chosen.push_back(position);
    gains.push_back(sample_gains[best]);
    Cover(objective, position, coverage);
    remaining.erase(std::ranges::find(remaining, position));
  }
  return chosen;
}

}  // namespace

std::string_view GreedyModeName(GreedyMode mode) {
  switch (mode) {
    case GreedyMode::kNaive:
      return "naive";
    case GreedyMode::kLazy:
      return "lazy";
    case GreedyMode::kStochastic:
      return "stochastic";
  }
  return "unknown";
}

GreedyMode ParseGreedyMode(std::string_view name) {
  if (name == "naive") return GreedyMode::kNaive;
  if (name == "lazy") return GreedyMode::kLazy;
  if (name == "stochastic") return GreedyMode::kStochastic;
  Fail(ErrorCode::kInvalidInput, "unknown greedy mode '" + std::string(name) + "'");
}

FacilityObjective::FacilityObjective(const DistanceOracle& oracle,
                                     std::vector<size_t> indices, double c0)
    : oracle_(&oracle), indices_(std::move(indices)), c0_(c0) {
  if (!(c0_ >= 0.0) || !std::isfinite(c0_)) {
    Fail(ErrorCode::kInvalidInput, "c0 must be finite and nonnegative");
  }
  lookup_.reserve(indices_.size());
  for (size_t p = 0; p < indices_.size(); ++p) {
    if (indices_[p] >= oracle.size()) {
      Fail(ErrorCode::kInvalidInput, "candidate index out of range");
    }
    lookup_.emplace_back(indices_[p], p);
  }
  std::ranges::sort(lookup_);
  for (size_t p = 1; p < lookup_.size(); ++p) {
    if (lookup_[p].first == lookup_[p - 1].first) {
      Fail(ErrorCode::kInvalidInput, "duplicate candidate index");
    }
  }
}

FacilityObjective FacilityObjective::WithTightOffset(
    const DistanceOracle& oracle, std::vector<size_t> indices) {
  const double c0 = oracle.MaxDistance(indices);
  return FacilityObjective(oracle, std::move(indices), c0);
}

size_t FacilityObjective::LocalPosition(size_t index) const {
  auto it = std::ranges::lower_bound(
      lookup_, index, {}, &std::pair<size_t, size_t>::first);
  if (it == lookup_.end() || it->first != index) {
    Fail(ErrorCode::kInvalidInput,
         "index " + std::to_string(index) + " is not a candidate");
  }
  return it->second;
}

double MedoidSelection::value() const {
  return std::accumulate(gains.begin(), gains.end(), 0.0);
}

double Evaluate(const FacilityObjective& objective,
                std::span<const size_t> medoids) {
  std::vector<size_t> positions;
  positions.reserve(medoids.size());
  for (size_t m : medoids) positions.push_back(objective.LocalPosition(m));
  if (positions.empty()) return 0.0;
  double total = 0.0;
  for (size_t i = 0; i < objective.size(); ++i) {
    double best = 0.0;
    for (size_t p : positions) {
      best = std::max(best, objective.c0() - objective.LocalDistance(i, p));
    }
    total += best;
  }
  return total;
}

MedoidSelection GreedySelect(const FacilityObjective& objective, size_t k,
                             GreedyMode mode, uint64_t seed, double epsilon) {
  if (objective.size() == 0) {
    Fail(ErrorCode::kInvalidInput, "empty objective");
  }
  if (k == 0) Fail(ErrorCode::kInvalidInput, "k must be >= 1");
  if (mode == GreedyMode::kStochastic && !(epsilon > 0.0 && epsilon < 1.0)) {
    Fail(ErrorCode::kInvalidInput, "stochastic epsilon must be in (0, 1)");
  }
  const size_t budget = std::min(k, objective.size());
  std::vector<double> gains;
  std::vector<size_t> positions =
      mode == GreedyMode::kStochastic
          ? Stochastic(objective, budget, seed, epsilon, gains)
          : NaiveOrLazy(objective, budget, mode == GreedyMode::kLazy, gains);
  std::vector<size_t> medoids;
  medoids.reserve(positions.size());
  for (size_t p : positions) medoids.push_back(objective.indices()[p]);
  MedoidSelection selection = AssignAndCount(objective, medoids);
  selection.gains = std::move(gains);
  return selection;
}

BruteForceResult BruteForceOptimum(const FacilityObjective& objective,
                                   size_t k) {
  const size_t n = objective.size();
  if (n > kBruteForceLimit) {
    Fail(ErrorCode::kInstanceTooLarge,
         std::to_string(n) + " candidates exceeds the brute-force limit of " +
             std::to_string(kBruteForceLimit));
  }
  if (n == 0 || k == 0) return {};
  // Positions in ascending oracle-index order, so DFS visits subsets in
  // lexicographic order and the first maximizer wins ties.
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::ranges::sort(order, {}, [&](size_t p) { return objective.indices()[p]; });

  const size_t max_size = std::min(k, n);
  BruteForceResult best;
  best.value = -1.0;
  std::vector<size_t> current;
  std::vector<std::vector<double>> coverage_stack(
      max_size + 1, std::vector<double>(n, 0.0));

  auto visit = [&](auto&& self, size_t start, size_t depth) -> void {
    for (size_t o = start; o < n; ++o) {
      const size_t p = order[o];
      const auto& parent = coverage_stack[depth];
      auto& cov = coverage_stack[depth + 1];
      double total = 0.0;
      for (size_t i = 0; i < n; ++i) {
        cov[i] = std::max(parent[i], objective.c0() - objective.LocalDistance(i, p));
        total += cov[i];
      }
      current.push_back(objective.indices()[p]);
      if (total > best.value) {
        best.value = total;
        best.medoids = current;
      }
      if (depth + 1 < max_size) self(self, o + 1, depth + 1);
      current.pop_back();
    }
  };
  visit(visit, 0, 0);
  return best;
}

MedoidSelection AssignAndCount(const FacilityObjective& objective,
                               std::span<const size_t> medoids) {
  if (medoids.empty()) Fail(ErrorCode::kInvalidInput, "empty medoid set");
  std::vector<size_t> positions;
  for (size_t m : medoids) positions.push_back(objective.LocalPosition(m));

  // Scan medoids in ascending index order; strict "<" keeps the lowest index.
  std::vector<size_t> by_index(medoids.size());
  std::iota(by_index.begin(), by_index.end(), 0);
  std::ranges::sort(by_index, {}, [&](size_t r) { return medoids[r]; });

  MedoidSelection out;
  out.medoids.assign(medoids.begin(), medoids.end());
  out.gamma.assign(medoids.size(), 0);
  out.assignment.resize(objective.size());
  for (size_t i = 0; i < objective.size(); ++i) {
    size_t best_rank = by_index[0];
    double best_distance = objective.LocalDistance(i, positions[best_rank]);
    for (size_t r = 1; r < by_index.size(); ++r) {
      const double d = objective.LocalDistance(i, positions[by_index[r]]);
      if (d < best_distance) {
        best_distance = d;
        best_rank = by_index[r];
      }
    }
    out.assignment[i] = medoids[best_rank];
    ++out.gamma[best_rank];
  }
  return out;
}

size_t MedoidBudget(double fraction, size_t class_size) {
  const long rounded = std::lround(fraction * static_cast<double>(class_size));
  return static_cast<size_t>(std::max(1L, rounded));
}

namespace kernels {

double MarginalGain(const FacilityObjective& objective,
                    std::span<const double> coverage, size_t candidate) {
  double gain = 0.0;
  for (size_t i = 0; i < coverage.size(); ++i) {
    const double delta =
        objective.c0() - objective.LocalDistance(i, candidate) - coverage[i];
    if (delta > 0.0) gain += delta;
  }
  return gain;
}

void MarginalGains(const FacilityObjective& objective,
                   std::span<const double> coverage,
                   std::span<const size_t> candidates, std::span<double> out) {
  const auto count = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < count; ++c) {
    out[static_cast<size_t>(c)] =
        MarginalGain(objective, coverage, candidates[static_cast<size_t>(c)]);
  }
}

}  // namespace kernels

}  // namespace epic
