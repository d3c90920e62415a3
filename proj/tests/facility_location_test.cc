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


#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "epic/error.h"
#include "epic/facility_location.h"
#include "epic/rng.h"
#include "test_util.h"

namespace epic {
namespace {

using testing::RandomProxies;

DistanceOracle Line(std::vector<double> points) {
  const size_t n = points.size();
  return DistanceOracle(ProxyMatrix(n, 1, std::move(points)));
}

std::vector<size_t> Iota(size_t n) {
  std::vector<size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// Independent evaluator over oracle row ids.
double NaiveF(const DistanceOracle& o, const std::vector<size_t>& v, double c0,
              const std::vector<size_t>& s) {
  if (s.empty()) return 0.0;
  double total = 0.0;
  for (size_t i : v) {
    double best = -INFINITY;
    for (size_t j : s) best = std::max(best, c0 - o.Distance(i, j));
    total += best;
  }
  return total;
}

// Exhaustive optimum over subsets of size <= k via bitmasks.
double BitmaskOptimum(const DistanceOracle& o, const std::vector<size_t>& v, double c0,
                      size_t k) {
  double best = 0.0;
  for (uint32_t mask = 1; mask < (1u << v.size()); ++mask) {
    if (static_cast<size_t>(std::popcount(mask)) > k) continue;
    std::vector<size_t> s;
    for (size_t b = 0; b < v.size(); ++b) {
      if (mask & (1u << b)) s.push_back(v[b]);
    }
    best = std::max(best, NaiveF(o, v, c0, s));
  }
  return best;
}

TEST(Evaluate, EmptySetIsZero) {
  const DistanceOracle o = Line({0.0, 1.0});
  const FacilityObjective f(o, {0, 1}, 1.0);
  EXPECT_EQ(Evaluate(f, std::vector<size_t>{}), 0.0);
}

TEST(Evaluate, TwoPointHandCase) {
  const DistanceOracle o = Line({0.0, 1.0});
  const FacilityObjective f(o, {0, 1}, 1.0);
  EXPECT_EQ(Evaluate(f, std::vector<size_t>{0}), 1.0);
}

TEST(Evaluate, MatchesNaiveEvaluator) {
  Rng rng(3);
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const DistanceOracle o(RandomProxies(seed, 10, 3));
    const FacilityObjective f = FacilityObjective::WithTightOffset(o, Iota(10));
    std::vector<size_t> s;
    for (size_t i = 0; i < 10; ++i) {
      if (rng.Uniform() < 0.3) s.push_back(i);
    }
    EXPECT_EQ(Evaluate(f, s), NaiveF(o, Iota(10), f.c0(), s));
  }
}

TEST(Evaluate, RejectsForeignIndex) {
  const DistanceOracle o = Line({0.0, 1.0, 2.0});
  const FacilityObjective f(o, {0, 1}, 2.0);
  EXPECT_THROW(Evaluate(f, std::vector<size_t>{2}), Error);
}

TEST(FacilityObjective, Validation) {
  const DistanceOracle o = Line({0.0, 1.0});
  EXPECT_THROW(FacilityObjective(o, {0, 2}, 1.0), Error);
  EXPECT_THROW(FacilityObjective(o, {0, 0}, 1.0), Error);
  EXPECT_THROW(FacilityObjective(o, {0, 1}, -1.0), Error);
  EXPECT_EQ(FacilityObjective::WithTightOffset(o, {0, 1}).c0(), 1.0);
}

TEST(GreedySelect, SingleCandidate) {
  const DistanceOracle o = Line({4.0});
  const FacilityObjective f(o, {0}, 2.5);
  for (GreedyMode mode : {GreedyMode::kNaive, GreedyMode::kLazy, GreedyMode::kStochastic}) {
    const MedoidSelection s = GreedySelect(f, 1, mode);
    EXPECT_EQ(s.medoids, std::vector<size_t>{0});
    EXPECT_EQ(s.gains, std::vector<double>{2.5});
  }
}

TEST(GreedySelect, ThreePointWorkedExample) {
  const DistanceOracle o = Line({0.0, 1.0, 10.0});
  const FacilityObjective f(o, {0, 1, 2}, 10.0);
  for (GreedyMode mode : {GreedyMode::kNaive, GreedyMode::kLazy}) {
    const MedoidSelection s = GreedySelect(f, 2, mode);
    std::vector<size_t> sorted = s.medoids;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<size_t>{1, 2}));
    EXPECT_EQ(s.value(), 29.0);
    EXPECT_EQ(Evaluate(f, s.medoids), 29.0);
  }
  const BruteForceResult best = BruteForceOptimum(f, 2);
  EXPECT_EQ(best.value, 29.0);
  // {0, 10} ties with {1, 10}; the lexicographic rule keeps the former.
  EXPECT_EQ(best.medoids, (std::vector<size_t>{0, 2}));
  EXPECT_EQ(BitmaskOptimum(o, {0, 1, 2}, 10.0, 2), 29.0);
}

TEST(GreedySelect, FullBudgetCoversEverything) {
  const DistanceOracle o(RandomProxies(8, 7, 2));
  const FacilityObjective f = FacilityObjective::WithTightOffset(o, Iota(7));
  for (GreedyMode mode : {GreedyMode::kNaive, GreedyMode::kLazy, GreedyMode::kStochastic}) {
    const MedoidSelection s = GreedySelect(f, 7, mode, 4);
    std::vector<size_t> sorted = s.medoids;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, Iota(7));
    EXPECT_NEAR(Evaluate(f, s.medoids), 7.0 * f.c0(), 1e-12);
    // Larger budgets clamp to the candidate count.
    EXPECT_EQ(GreedySelect(f, 50, mode, 4).medoids.size(), 7u);
  }
}

TEST(GreedySelect, Errors) {
  const DistanceOracle o = Line({0.0});
  const FacilityObjective empty(o, {}, 0.0);
  EXPECT_THROW(GreedySelect(empty, 1, GreedyMode::kNaive), Error);
  const FacilityObjective f(o, {0}, 0.0);
  EXPECT_THROW(GreedySelect(f, 0, GreedyMode::kLazy), Error);
}

TEST(GreedySelect, GainsNonIncreasingAndSumToValue) {
  for (uint64_t seed = 0; seed < 200; ++seed) {
    const DistanceOracle o(RandomProxies(seed, 25, 3));
    const FacilityObjective f = FacilityObjective::WithTightOffset(o, Iota(25));
    for (GreedyMode mode : {GreedyMode::kNaive, GreedyMode::kLazy}) {
      const MedoidSelection s = GreedySelect(f, 8, mode);
      for (size_t t = 1; t < s.gains.size(); ++t) EXPECT_LE(s.gains[t], s.gains[t - 1]);
      EXPECT_NEAR(s.value(), Evaluate(f, s.medoids), 1e-9);
    }
  }
}

TEST(GreedySelect, LazyMatchesNaiveIncludingTies) {
  // Integer grids produce many exact ties.
  for (uint64_t seed = 0; seed < 300; ++seed) {
    Rng rng(seed);
    const size_t n = 5 + rng.UniformInt(30);
    std::vector<double> v(n * 2);
    for (double& x : v) x = static_cast<double>(rng.UniformInt(4));
    const DistanceOracle o(ProxyMatrix(n, 2, v));
    const FacilityObjective f = FacilityObjective::WithTightOffset(o, Iota(n));
    const size_t k = 1 + rng.UniformInt(n);
    EXPECT_EQ(GreedySelect(f, k, GreedyMode::kLazy).medoids,
              GreedySelect(f, k, GreedyMode::kNaive).medoids);
  }
}

TEST(GreedySelect, TiesGoToLowestIndex) {
  const DistanceOracle o = Line({5.0, 5.0, 5.0});
  const FacilityObjective f(o, {2, 0, 1}, 1.0);
  EXPECT_EQ(GreedySelect(f, 1, GreedyMode::kNaive).medoids, std::vector<size_t>{0});
  EXPECT_EQ(GreedySelect(f, 1, GreedyMode::kLazy).medoids, std::vector<size_t>{0});
}

TEST(GreedySelect, StochasticIsSeedDeterministic) {
  const DistanceOracle o(RandomProxies(99, 200, 4));
  const FacilityObjective f = FacilityObjective::WithTightOffset(o, Iota(200));
  const MedoidSelection a = GreedySelect(f, 10, GreedyMode::kStochastic, 7);
  const MedoidSelection b = GreedySelect(f, 10, GreedyMode::kStochastic, 7);
  EXPECT_EQ(a.medoids, b.medoids);
  EXPECT_EQ(a.gains, b.gains);
  bool differs = false;
  for (uint64_t s = 8; s < 20 && !differs; ++s) {
    differs = GreedySelect(f, 10, GreedyMode::kStochastic, s).medoids != a.medoids;
  }
  EXPECT_TRUE(differs);
}

TEST(GreedySelect, StochasticStaysNearGreedy) {
  // Expected (1 - 1/e - eps) guarantee; checked on average.
  double ratio = 0.0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const DistanceOracle o(RandomProxies(seed, 60, 2));
    const FacilityObjective f = FacilityObjective::WithTightOffset(o, Iota(60));
    ratio += GreedySelect(f, 6, GreedyMode::kStochastic, seed).value() /
             GreedySelect(f, 6, GreedyMode::kLazy).value();
  }
  EXPECT_GE(ratio / 50.0, 1.0 - 1.0 / std::numbers::e - kStochasticEpsilon);
}

TEST(BruteForceOptimum, MatchesBitmaskOracleAndBoundsGreedy) {
  Rng rng(1);
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const size_t n = 2 + rng.UniformInt(11);
    const size_t k = 1 + rng.UniformInt(std::min<size_t>(4, n));
    const DistanceOracle o(RandomProxies(1000 + seed, n, 2));
    const FacilityObjective f = FacilityObjective::WithTightOffset(o, Iota(n));
    const BruteForceResult best = BruteForceOptimum(f, k);
    EXPECT_NEAR(best.value, BitmaskOptimum(o, Iota(n), f.c0(), k), 1e-9);
    EXPECT_NEAR(Evaluate(f, best.medoids), best.value, 1e-12);
    for (GreedyMode mode : {GreedyMode::kNaive, GreedyMode::kLazy}) {
      EXPECT_GE(GreedySelect(f, k, mode).value(),
                (1.0 - 1.0 / std::numbers::e) * best.value - 1e-12);
    }
  }
}

TEST(BruteForceOptimum, FullBudgetAndLimit) {
  const DistanceOracle o(RandomProxies(4, 21, 1));
  const FacilityObjective small = FacilityObjective::WithTightOffset(o, Iota(6));
  EXPECT_EQ(BruteForceOptimum(small, 6).medoids, Iota(6));
  const FacilityObjective big = FacilityObjective::WithTightOffset(o, Iota(21));
  try {
    BruteForceOptimum(big, 2);
    FAIL() << "expected InstanceTooLarge";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInstanceTooLarge);
  }
}

TEST(BruteForceOptimum, LexicographicTieBreak) {
  const DistanceOracle o = Line({1.0, 1.0, 1.0});
  const FacilityObjective f(o, {0, 1, 2}, 1.0);
  EXPECT_EQ(BruteForceOptimum(f, 1).medoids, std::vector<size_t>{0});
}

TEST(AssignAndCount, SingleFacility) {
  const DistanceOracle o(RandomProxies(2, 9, 3));
  const FacilityObjective f = FacilityObjective::WithTightOffset(o, Iota(9));
  const MedoidSelection s = AssignAndCount(f, std::vector<size_t>{4});
  EXPECT_EQ(s.gamma, std::vector<size_t>{9});
}

TEST(AssignAndCount, ThreePointWorkedExample) {
  const DistanceOracle o = Line({0.0, 1.0, 10.0});
  const FacilityObjective f(o, {0, 1, 2}, 10.0);
  const MedoidSelection s = AssignAndCount(f, std::vector<size_t>{1, 2});
  EXPECT_EQ(s.gamma, (std::vector<size_t>{2, 1}));
  EXPECT_EQ(s.assignment, (std::vector<size_t>{1, 1, 2}));
}

TEST(AssignAndCount, SymmetricPairSelfAssigns) {
  const DistanceOracle o = Line({0.0, 2.0});
  const FacilityObjective f(o, {0, 1}, 2.0);
  EXPECT_EQ(AssignAndCount(f, std::vector<size_t>{0, 1}).gamma, (std::vector<size_t>{1, 1}));
}

TEST(AssignAndCount, EquidistantGoesToLowerMedoid) {
  const DistanceOracle o = Line({0.0, 1.0, 2.0});
  const FacilityObjective f(o, {0, 1, 2}, 2.0);
  const MedoidSelection s = AssignAndCount(f, std::vector<size_t>{2, 0});
  EXPECT_EQ(s.assignment, (std::vector<size_t>{0, 0, 2}));
  EXPECT_EQ(s.gamma, (std::vector<size_t>{1, 2}));
}

TEST(AssignAndCount, CoincidentMedoidsGoToLowestIndex) {
  const DistanceOracle o = Line({3.0, 3.0, 7.0});
  const FacilityObjective f(o, {0, 1, 2}, 4.0);
  const MedoidSelection s = AssignAndCount(f, std::vector<size_t>{1, 0});
  EXPECT_EQ(s.assignment, (std::vector<size_t>{0, 0, 0}));
  EXPECT_EQ(s.gamma, (std::vector<size_t>{0, 3}));
}

TEST(AssignAndCount, OrderInvariantAndPartition) {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const DistanceOracle o(RandomProxies(seed, 20, 3));
    const FacilityObjective f = FacilityObjective::WithTightOffset(o, Iota(20));
    std::vector<size_t> s = Iota(20);
    rng.Shuffle(std::span<size_t>(s));
    s.resize(1 + rng.UniformInt(6));
    const MedoidSelection a = AssignAndCount(f, s);
    std::vector<size_t> shuffled = s;
    rng.Shuffle(std::span<size_t>(shuffled));
    const MedoidSelection b = AssignAndCount(f, shuffled);
    EXPECT_EQ(a.assignment, b.assignment);
    EXPECT_EQ(std::accumulate(a.gamma.begin(), a.gamma.end(), size_t{0}), 20u);
    for (size_t m = 0; m < s.size(); ++m) {
      EXPECT_GE(a.gamma[m], 1u);
      EXPECT_EQ(a.assignment[f.LocalPosition(s[m])], s[m]);
    }
  }
  const DistanceOracle o = Line({0.0});
  const FacilityObjective f(o, {0}, 0.0);
  EXPECT_THROW(AssignAndCount(f, std::vector<size_t>{}), Error);
}

TEST(Submodularity, RandomTriples) {
  Rng rng(77);
  size_t violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t n = 4 + rng.UniformInt(12);
    const DistanceOracle o(RandomProxies(rng.NextU64(), n, 1 + rng.UniformInt(4)));
    const FacilityObjective f = FacilityObjective::WithTightOffset(o, Iota(n));
    std::vector<size_t> perm = Iota(n);
    rng.Shuffle(std::span<size_t>(perm));
    const size_t e = perm.back();
    const size_t t_size = rng.UniformInt(n);
    const size_t s_size = rng.UniformInt(t_size + 1);
    std::vector<size_t> t(perm.begin(), perm.begin() + t_size);
    std::vector<size_t> s(perm.begin(), perm.begin() + s_size);
    auto with = [&](std::vector<size_t> v) {
      v.push_back(e);
      return v;
    };
    const double gain_s = Evaluate(f, with(s)) - Evaluate(f, s);
    const double gain_t = Evaluate(f, with(t)) - Evaluate(f, t);
    if (gain_s < -1e-9 || gain_t < -1e-9) ++violations;
    if (gain_s < gain_t - 1e-9) ++violations;
  }
  EXPECT_EQ(violations, 0u);
}

TEST(MedoidBudget, ProportionalWithFloorOfOne) {
  EXPECT_EQ(MedoidBudget(0.1, 100), 10u);
  EXPECT_EQ(MedoidBudget(0.1, 3), 1u);
  EXPECT_EQ(MedoidBudget(0.67, 3), 2u);
  EXPECT_EQ(MedoidBudget(1.0, 7), 7u);
}

TEST(GreedyMode, NamesRoundTrip) {
  for (GreedyMode m : {GreedyMode::kNaive, GreedyMode::kLazy, GreedyMode::kStochastic}) {
    EXPECT_EQ(ParseGreedyMode(GreedyModeName(m)), m);
  }
  EXPECT_THROW(ParseGreedyMode("fast"), Error);
}

}  // namespace
}  // namespace epic
