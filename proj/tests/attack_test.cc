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
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "epic/attack.h"
#include "epic/dataset.h"
#include "epic/error.h"
#include "epic/model.h"
#include "epic/rng.h"
#include "test_util.h"

namespace epic {
namespace {

using testing::FiniteDifference;
using testing::RelativeError;

struct Scene {
  Dataset data;
  ToyModel surrogate;
  std::vector<double> target;
};

// Clean linear surrogate on overlapping blobs; the target is a class-0 point
// near the boundary and the poisons come from class 1.
Scene MakeScene(uint64_t seed, Architecture arch = Architecture::kLinear) {
  BlobsSpec spec;
  spec.radius = 2.0;
  spec.per_class = 50;
  Scene s{MakeBlobs(spec, seed), {}, {-0.4, 0.3}};
  VictimConfig config;
  config.arch = arch;
  config.hidden = 6;
  config.schedule.base = 0.5;
  config.epochs = 40;
  s.surrogate = TrainVictim(s.data, config, seed).model;
  return s;
}

std::vector<size_t> ClassOne(const Dataset& d, size_t count) {
  std::vector<size_t> out;
  for (size_t i = 0; i < d.size() && out.size() < count; ++i) {
    if (d.labels[i] == 1) out.push_back(i);
  }
  return out;
}

AttackSpec MakeSpec(const Scene& s, std::vector<size_t> bases, double eps, size_t steps) {
  AttackSpec spec;
  spec.base_indices = std::move(bases);
  spec.target_x = s.target;
  spec.adv_label = 1;
  spec.epsilon = eps;
  spec.steps = steps;
  return spec;
}

TEST(Craft, ZeroBudgetLeavesPoisonsUntouched) {
  const Scene s = MakeScene(1);
  const AttackSpec spec = MakeSpec(s, ClassOne(s.data, 5), 0.0, 50);
  const AttackResult r = Craft(spec, s.surrogate, s.data);
  EXPECT_EQ(r.perturbations, std::vector<double>(10, 0.0));
  const double baseline = PoisonAlignment(s.surrogate, s.data, spec.base_indices,
                                          r.perturbations, s.target, 1);
  EXPECT_EQ(r.initial_alignment, baseline);
  EXPECT_EQ(r.final_alignment, baseline);
}

TEST(Craft, ZeroStepsLeavesPoisonsUntouched) {
  const Scene s = MakeScene(2);
  const AttackResult r = Craft(MakeSpec(s, ClassOne(s.data, 5), 0.5, 0), s.surrogate, s.data);
  EXPECT_EQ(r.perturbations, std::vector<double>(10, 0.0));
  EXPECT_TRUE(r.objective_trace.empty());
}

TEST(Craft, BoxAndMonotoneObjective) {
  for (Architecture arch : {Architecture::kLinear, Architecture::kOneHidden}) {
    for (AttackObjective objective :
         {AttackObjective::kGradientMatch, AttackObjective::kFeatureCollision}) {
      for (uint64_t seed = 0; seed < 4; ++seed) {
        const Scene s = MakeScene(seed, arch);
        AttackSpec spec = MakeSpec(s, ClassOne(s.data, 6), 0.3, 60);
        spec.objective = objective;
        const AttackResult r = Craft(spec, s.surrogate, s.data);
        ASSERT_EQ(r.perturbations.size(), 12u);
        for (double d : r.perturbations) EXPECT_LE(std::abs(d), 0.3);
        ASSERT_EQ(r.objective_trace.size(), 60u);
        for (size_t t = 1; t < r.objective_trace.size(); ++t) {
          EXPECT_GE(r.objective_trace[t], r.objective_trace[t - 1]);
        }
        EXPECT_GE(r.final_alignment, -1.0);
        EXPECT_LE(r.final_alignment, 1.0);
        if (objective == AttackObjective::kGradientMatch) {
          EXPECT_GE(r.final_alignment, r.initial_alignment);
        }
      }
    }
  }
}

TEST(Craft, SinglePoisonMatchesGridSearch) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const Scene s = MakeScene(10 + seed);
    const std::vector<size_t> base = ClassOne(s.data, 1);
    const double eps = 0.5;
    const AttackResult r = Craft(MakeSpec(s, base, eps, 250), s.surrogate, s.data);
    double best = -2.0;
    for (int a = 0; a <= 200; ++a) {
      for (int b = 0; b <= 200; ++b) {
        const std::vector<double> delta{-eps + eps * a / 100.0, -eps + eps * b / 100.0};
        best = std::max(best, PoisonAlignment(s.surrogate, s.data, base, delta, s.target, 1));
      }
    }
    EXPECT_GE(r.final_alignment, best - 0.02) << "seed " << seed;
  }
}

TEST(AlignmentInputGradient, MatchesFiniteDifferences) {
  for (Architecture arch : {Architecture::kLinear, Architecture::kOneHidden}) {
    for (uint64_t seed = 0; seed < 10; ++seed) {
      const Scene s = MakeScene(20 + seed, arch);
      const std::vector<size_t> bases = ClassOne(s.data, 4);
      Rng rng(seed);
      const std::vector<double> delta = testing::RandomVector(rng, 8, 0.2);
      const std::vector<double> g =
          AlignmentInputGradient(s.surrogate, s.data, bases, delta, s.target, 1);
      const std::vector<double> fd = FiniteDifference(
          [&](std::span<const double> d) {
            return PoisonAlignment(s.surrogate, s.data, bases, d, s.target, 1);
          },
          delta);
      EXPECT_LE(RelativeError(g, fd), arch == Architecture::kLinear ? 1e-6 : 1e-5);
    }
  }
}

TEST(Craft, ZeroTargetGradientIsDegenerate) {
  Scene s = MakeScene(3);
  // Bias pushes every input to class 1 with probability exactly 1.
  s.surrogate.params.assign(s.surrogate.ParameterCount(), 0.0);
  s.surrogate.params[s.surrogate.ParameterCount() - 1] = 1000.0;
  try {
    Craft(MakeSpec(s, ClassOne(s.data, 2), 0.1, 5), s.surrogate, s.data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateTarget);
  }
}

TEST(ApplyPoisons, AddsPerturbationAndMask) {
  const Scene s = MakeScene(4);
  const std::vector<size_t> bases{3, 7};
  const Dataset p = ApplyPoisons(s.data, bases, std::vector<double>{0.1, -0.1, 0.2, 0.0});
  EXPECT_DOUBLE_EQ(p.x(3)[0], s.data.x(3)[0] + 0.1);
  EXPECT_DOUBLE_EQ(p.x(7)[1], s.data.x(7)[1]);
  EXPECT_TRUE(p.is_poison(3));
  EXPECT_TRUE(p.is_poison(7));
  EXPECT_FALSE(p.is_poison(4));
  EXPECT_EQ(p.x(5)[0], s.data.x(5)[0]);
}

VictimConfig Victim() {
  VictimConfig v;
  v.schedule.base = 0.5;
  v.epochs = 60;
  return v;
}

TEST(EvaluateAttack, CleanDataFailsAndVacuousAttackSucceeds) {
  const Dataset data = MakeBlobs(BlobsSpec{}, 6);
  const std::vector<double> target = BlobMean(BlobsSpec{}, 0);
  const std::vector<uint64_t> seeds{1, 2, 3, 4};
  EXPECT_EQ(EvaluateAttack(data, Victim(), target, 1, seeds), 0.0);
  EXPECT_EQ(EvaluateAttack(data, Victim(), target, 0, seeds), 1.0);
  const std::vector<uint64_t> one{9};
  EXPECT_EQ(EvaluateAttack(data, Victim(), target, 1, one),
            EvaluateAttack(data, Victim(), target, 1, one));
  EXPECT_THROW(EvaluateAttack(data, Victim(), target, 1, std::vector<uint64_t>{}), Error);
}

// Three class-0 points at x = -2 and three class-1 points at x = +2. Poison
// 0 is a class-1 point placed next to the target, pulling the boundary over
// it; the other poisons sit deep in class 1 and are harmless.
struct PlantedAttack {
  Dataset data;
  std::vector<size_t> poisons;
  std::vector<double> target{-0.4, 0.0};
};

PlantedAttack MakePlantedAttack(size_t noise_poisons) {
  PlantedAttack p;
  p.data.num_classes = 2;
  p.data.dim = 2;
  for (double y : {-0.5, 0.0, 0.5}) p.data.Append(std::vector<double>{-2.0, y}, 0);
  for (double y : {-0.5, 0.0, 0.5}) p.data.Append(std::vector<double>{2.0, y}, 1);
  p.data.Append(std::vector<double>{-0.9, 0.0}, 1, true);
  p.poisons.push_back(p.data.size() - 1);
  for (size_t k = 0; k < noise_poisons; ++k) {
    p.data.Append(std::vector<double>{2.5, -0.6 + 0.4 * static_cast<double>(k)}, 1, true);
    p.poisons.push_back(p.data.size() - 1);
  }
  return p;
}

TEST(FindEffectiveSubset, PlantedDominantPoisonIsTheSingleton) {
  const PlantedAttack p = MakePlantedAttack(3);
  const std::vector<uint64_t> seeds{1, 2, 3};
  // Enumerate every subset independently: a subset succeeds exactly when it
  // contains the dominant poison.
  for (uint64_t mask = 0; mask < 16; ++mask) {
    std::vector<size_t> keep;
    for (size_t i = 0; i < p.data.size(); ++i) {
      const auto it = std::find(p.poisons.begin(), p.poisons.end(), i);
      if (it == p.poisons.end() || (mask >> (it - p.poisons.begin()) & 1)) keep.push_back(i);
    }
    const double rate = EvaluateAttack(p.data.Subset(keep), Victim(), p.target, 1, seeds);
    EXPECT_EQ(rate, (mask & 1) ? 1.0 : 0.0) << "mask " << mask;
  }
  const EffectiveSubset e = FindEffectiveSubset(p.data, p.poisons, Victim(), p.target, 1,
                                                seeds, SubsetSearch::kExhaustive);
  EXPECT_EQ(e.poisons, std::vector<size_t>{p.poisons[0]});
  EXPECT_TRUE(e.subset_succeeds);
  EXPECT_TRUE(e.complement_fails);
}

TEST(FindEffectiveSubset, GreedyAblationOutputIsEffective) {
  const PlantedAttack p = MakePlantedAttack(5);
  const std::vector<uint64_t> seeds{1, 2};
  const EffectiveSubset e = FindEffectiveSubset(p.data, p.poisons, Victim(), p.target, 1,
                                                seeds, SubsetSearch::kGreedyAblation);
  EXPECT_TRUE(e.subset_succeeds);
  EXPECT_TRUE(e.complement_fails);
  EXPECT_EQ(e.poisons, std::vector<size_t>{p.poisons[0]});
}

TEST(FindEffectiveSubset, Errors) {
  const PlantedAttack p = MakePlantedAttack(3);
  const std::vector<uint64_t> seeds{1};
  const std::vector<size_t> harmless(p.poisons.begin() + 1, p.poisons.end());
  // Without the dominant poison nothing succeeds.
  std::vector<size_t> keep(p.data.size());
  std::iota(keep.begin(), keep.end(), 0);
  keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(p.poisons[0]));
  const Dataset without = p.data.Subset(keep);
  std::vector<size_t> shifted;
  for (size_t i : harmless) shifted.push_back(i - 1);
  try {
    FindEffectiveSubset(without, shifted, Victim(), p.target, 1, seeds, SubsetSearch::kExhaustive);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoEffectiveSubset);
  }
  // Attacking towards the true label succeeds with no poison at all.
  try {
    FindEffectiveSubset(p.data, p.poisons, Victim(), std::vector<double>{2.0, 0.0}, 1, seeds,
                        SubsetSearch::kExhaustive);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoEffectiveSubset);
  }
  std::vector<size_t> many(17);
  std::iota(many.begin(), many.end(), 0);
  try {
    FindEffectiveSubset(p.data, many, Victim(), p.target, 1, seeds, SubsetSearch::kExhaustive);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInstanceTooLarge);
  }
}

TEST(AttackObjective, NamesRoundTrip) {
  for (AttackObjective o : {AttackObjective::kGradientMatch, AttackObjective::kFeatureCollision}) {
    EXPECT_EQ(ParseAttackObjective(AttackObjectiveName(o)), o);
  }
  EXPECT_THROW(ParseAttackObjective("bullseye"), Error);
}

}  // namespace
}  // namespace epic
