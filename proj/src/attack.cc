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

#include "epic/attack.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <string>

#include "epic/error.h"
#include "epic/rng.h"
#include "epic/trainer.h"

namespace epic {
namespace {

constexpr uint64_t kInitStream = 1;
constexpr uint64_t kBatchStream = 2;
constexpr double kInputStep = 1e-6;
constexpr int kMaxHalvings = 4;

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

std::vector<double> PerturbedRow(const Dataset& data, size_t index,
                                 std::span<const double> delta) {
  std::vector<double> x(data.x(index).begin(), data.x(index).end());
  for (size_t d = 0; d < x.size(); ++d) x[d] += delta[d];
  return x;
}

std::vector<double> TargetGradient(const ToyModel& surrogate,
                                   std::span<const double> target_x,
                                   size_t adv_label) {
  return ExampleLossAndGrad(surrogate, target_x, adv_label).grad;
}

double CosineOrZero(std::span<const double> a, std::span<const double> b) {
  const double na = std::sqrt(Dot(a, a));
  const double nb = std::sqrt(Dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(Dot(a, b) / (na * nb), -1.0, 1.0);
}

struct PoisonGradients {
  std::vector<std::vector<double>> per_poison;
  std::vector<double> mean;
};

PoisonGradients MeanPoisonGradient(const ToyModel& surrogate, const Dataset& data,
                                   std::span<const size_t> base,
                                   std::span<const double> perturbations) {
  PoisonGradients out;
  out.mean.assign(surrogate.ParameterCount(), 0.0);
  const double inv = 1.0 / static_cast<double>(base.size());
  for (size_t i = 0; i < base.size(); ++i) {
    const auto x = PerturbedRow(data, base[i], perturbations.subspan(i * data.dim, data.dim));
    out.per_poison.push_back(ExampleLossAndGrad(surrogate, x, data.labels[base[i]]).grad);
    for (size_t p = 0; p < out.mean.size(); ++p) out.mean[p] += inv * out.per_poison.back()[p];
  }
  return out;
}

void CheckAttackInputs(const ToyModel& surrogate, const Dataset& data,
                       std::span<const size_t> base,
                       std::span<const double> perturbations,
                       std::span<const double> target_x, size_t adv_label) {
  if (base.empty()) Fail(ErrorCode::kInvalidInput, "no poison bases");
  if (perturbations.size() != base.size() * data.dim) {
    Fail(ErrorCode::kInvalidInput, "perturbation shape mismatch");
  }
  if (target_x.size() != data.dim || surrogate.input_dim != data.dim) {
    Fail(ErrorCode::kInvalidInput, "target width mismatch");
  }
  if (adv_label >= data.num_classes) {
    Fail(ErrorCode::kInvalidInput, "adversarial label out of range");
  }
  for (size_t i : base) {
    if (i >= data.size()) Fail(ErrorCode::kInvalidInput, "base index out of range");
  }
}

double FeatureObjective(const ToyModel& surrogate, const Dataset& data,
                        std::span<const size_t> base,
                        std::span<const double> perturbations,
                        std::span<const double> target_embedding) {
  double total = 0.0;
  for (size_t i = 0; i < base.size(); ++i) {
    const auto x = PerturbedRow(data, base[i], perturbations.subspan(i * data.dim, data.dim));
    const ForwardResult f = Forward(surrogate, x);
    for (size_t e = 0; e < f.embedding.size(); ++e) {
      const double d = f.embedding[e] - target_embedding[e];
      total += d * d;
    }
  }
  return -total;
}

std::vector<double> FeatureInputGradient(const ToyModel& surrogate,
                                         const Dataset& data,
                                         std::span<const size_t> base,
                                         std::span<const double> perturbations,
                                         std::span<const double> target_embedding) {
  std::vector<double> out(perturbations.size(), 0.0);
  const size_t m = data.dim;
  for (size_t i = 0; i < base.size(); ++i) {
    const auto x = PerturbedRow(data, base[i], perturbations.subspan(i * m, m));
    const ForwardResult f = Forward(surrogate, x);
    std::vector<double> diff(f.embedding.size());
    for (size_t e = 0; e < diff.size(); ++e) diff[e] = -2.0 * (f.embedding[e] - target_embedding[e]);
    if (surrogate.arch == Architecture::kLinear) {
      for (size_t d = 0; d < m; ++d) out[i * m + d] = diff[d];
    } else {
      const double* w1 = surrogate.params.data();
      for (size_t h = 0; h < surrogate.hidden; ++h) {
        const double back = diff[h] * (1.0 - f.embedding[h] * f.embedding[h]);
        for (size_t d = 0; d < m; ++d) out[i * m + d] += w1[h * m + d] * back;
      }
    }
  }
  return out;
}

}  // namespace

std::string_view AttackObjectiveName(AttackObjective objective) {
  return objective == AttackObjective::kGradientMatch ? "gradient_match"
                                                      : "feature_collision";
}

AttackObjective ParseAttackObjective(std::string_view name) {
  if (name == "gradient_match") return AttackObjective::kGradientMatch;
  if (name == "feature_collision") return AttackObjective::kFeatureCollision;
  Fail(ErrorCode::kInvalidInput, "unknown attack objective '" + std::string(name) + "'");
}

double PoisonAlignment(const ToyModel& surrogate, const Dataset& data,
                       std::span<const size_t> base_indices,
                       std::span<const double> perturbations,
                       std::span<const double> target_x, size_t adv_label) {
  CheckAttackInputs(surrogate, data, base_indices, perturbations, target_x, adv_label);
  const auto target = TargetGradient(surrogate, target_x, adv_label);
  const auto poisons = MeanPoisonGradient(surrogate, data, base_indices, perturbations);
  return CosineOrZero(poisons.mean, target);
}

std::vector<double> AlignmentInputGradient(const ToyModel& surrogate,
                                           const Dataset& data,
                                           std::span<const size_t> base,
                                           std::span<const double> perturbations,
                                           std::span<const double> target_x,
                                           size_t adv_label) {
  CheckAttackInputs(surrogate, data, base, perturbations, target_x, adv_label);
  const auto target = TargetGradient(surrogate, target_x, adv_label);
  const PoisonGradients poisons = MeanPoisonGradient(surrogate, data, base, perturbations);
  const size_t m = data.dim;
  const size_t num_poisons = base.size();
  const double inv = 1.0 / static_cast<double>(num_poisons);
  std::vector<double> out(perturbations.size(), 0.0);

  if (surrogate.arch != Architecture::kLinear) {
    // Only poison i's own gradient moves with x_i.
    for (size_t i = 0; i < num_poisons; ++i) {
      auto x = PerturbedRow(data, base[i], perturbations.subspan(i * m, m));
      for (size_t d = 0; d < m; ++d) {
        double values[2];
        for (int side = 0; side < 2; ++side) {
          const double saved = x[d];
          x[d] += side == 0 ? kInputStep : -kInputStep;
          const auto g = ExampleLossAndGrad(surrogate, x, data.labels[base[i]]).grad;
          x[d] = saved;
          std::vector<double> mean = poisons.mean;
          for (size_t p = 0; p < mean.size(); ++p) mean[p] += inv * (g[p] - poisons.per_poison[i][p]);
          values[side] = CosineOrZero(mean, target);
        }
        out[i * m + d] = (values[0] - values[1]) / (2.0 * kInputStep);
      }
    }
    return out;
  }

  const double g_norm = std::sqrt(Dot(poisons.mean, poisons.mean));
  const double t_norm = std::sqrt(Dot(target, target));
  if (g_norm == 0.0 || t_norm == 0.0) return out;
  const double cosine = Dot(poisons.mean, target) / (g_norm * t_norm);
  // dcos/dG = t / (|G||t|) - cos * G / |G|^2
  std::vector<double> dcos(target.size());
  for (size_t p = 0; p < dcos.size(); ++p) {
    dcos[p] = target[p] / (g_norm * t_norm) - cosine * poisons.mean[p] / (g_norm * g_norm);
  }
  const size_t num_classes = surrogate.num_classes;
  const double* w = surrogate.params.data();
  const double* dcos_w = dcos.data();
  const double* dcos_b = dcos.data() + num_classes * m;
  for (size_t i = 0; i < num_poisons; ++i) {
    const auto x = PerturbedRow(data, base[i], perturbations.subspan(i * m, m));
    const ForwardResult f = Forward(surrogate, x);
    const std::vector<double> p = Softmax(f.logits);
    std::vector<double> r = p;
    r[data.labels[base[i]]] -= 1.0;
    // u = A_W x + A_b
    std::vector<double> u(num_classes);
    for (size_t c = 0; c < num_classes; ++c) {
      u[c] = dcos_b[c];
      for (size_t d = 0; d < m; ++d) u[c] += dcos_w[c * m + d] * x[d];
    }
    // J u with J = diag(p) - p p^T
    const double pu = Dot(p, u);
    std::vector<double> ju(num_classes);
    for (size_t c = 0; c < num_classes; ++c) ju[c] = p[c] * (u[c] - pu);
    for (size_t d = 0; d < m; ++d) {
      double v = 0.0;
      for (size_t c = 0; c < num_classes; ++c) {
        v += dcos_w[c * m + d] * r[c] + w[c * m + d] * ju[c];
      }
      out[i * m + d] = inv * v;
    }
  }
  return out;
}

AttackResult Craft(const AttackSpec& spec, const ToyModel& surrogate,
                   const Dataset& data) {
  if (!(spec.epsilon >= 0.0)) Fail(ErrorCode::kInvalidInput, "epsilon must be >= 0");
  AttackResult out;
  out.perturbations.assign(spec.base_indices.size() * data.dim, 0.0);
  CheckAttackInputs(surrogate, data, spec.base_indices, out.perturbations,
                    spec.target_x, spec.adv_label);
  const bool match = spec.objective == AttackObjective::kGradientMatch;
  if (match) {
    const auto target = TargetGradient(surrogate, spec.target_x, spec.adv_label);
    if (Dot(target, target) == 0.0) {
      Fail(ErrorCode::kDegenerateTarget, "target gradient is zero");
    }
  }
  const std::vector<double> target_embedding = Forward(surrogate, spec.target_x).embedding;

  auto objective = [&](std::span<const double> delta) {
    return match ? PoisonAlignment(surrogate, data, spec.base_indices, delta,
                                   spec.target_x, spec.adv_label)
                 : FeatureObjective(surrogate, data, spec.base_indices, delta,
                                    target_embedding);
  };
  auto gradient = [&](std::span<const double> delta) {
    return match ? AlignmentInputGradient(surrogate, data, spec.base_indices, delta,
                                          spec.target_x, spec.adv_label)
                 : FeatureInputGradient(surrogate, data, spec.base_indices, delta,
                                        target_embedding);
  };

  out.initial_alignment = PoisonAlignment(surrogate, data, spec.base_indices,
                                          out.perturbations, spec.target_x,
                                          spec.adv_label);
  double current = objective(out.perturbations);
  const double step = spec.steps == 0 ? 0.0
                      : spec.step_size > 0.0
                          ? spec.step_size
                          : spec.epsilon / static_cast<double>(spec.steps);
  std::vector<double> trial(out.perturbations.size());
  for (size_t s = 0; s < spec.steps && spec.epsilon > 0.0; ++s) {
    const std::vector<double> grad = gradient(out.perturbations);
    bool accepted = false;
    double size = step;
    for (int attempt = 0; attempt <= kMaxHalvings && !accepted; ++attempt, size *= 0.5) {
      for (size_t k = 0; k < trial.size(); ++k) {
        const double dir = grad[k] > 0.0 ? 1.0 : (grad[k] < 0.0 ? -1.0 : 0.0);
        trial[k] = std::clamp(out.perturbations[k] + size * dir, -spec.epsilon, spec.epsilon);
      }
      const double value = objective(trial);
      if (value >= current) {
        out.perturbations = trial;
        current = value;
        accepted = true;
      }
    }
    if (!accepted) ++out.rejected_steps;
    out.objective_trace.push_back(current);
  }
  out.final_alignment = PoisonAlignment(surrogate, data, spec.base_indices,
                                        out.perturbations, spec.target_x,
                                        spec.adv_label);
  return out;
}

Dataset ApplyPoisons(const Dataset& data, std::span<const size_t> base_indices,
                     std::span<const double> perturbations) {
  if (perturbations.size() != base_indices.size() * data.dim) {
    Fail(ErrorCode::kInvalidInput, "perturbation shape mismatch");
  }
  Dataset out = data;
  if (!out.has_poison_mask()) out.poison.assign(out.size(), 0);
  for (size_t i = 0; i < base_indices.size(); ++i) {
    auto row = out.mutable_x(base_indices[i]);
    for (size_t d = 0; d < data.dim; ++d) row[d] += perturbations[i * data.dim + d];
    out.poison[base_indices[i]] = 1;
  }
  return out;
}

ToyModel InitVictim(const VictimConfig& config, const Dataset& data,
                    uint64_t seed) {
  ToyModel model = config.arch == Architecture::kLinear
                       ? ToyModel::Linear(data.dim, data.num_classes)
                       : ToyModel::OneHidden(data.dim, data.num_classes, config.hidden);
  model.InitUniform(DeriveSeed(seed, kInitStream));
  return model;
}

VictimRun TrainVictim(const Dataset& data, const VictimConfig& config,
                      uint64_t seed, const EpochObserver& observer) {
  VictimRun run{InitVictim(config, data, seed), {}};
  DatasetState state(data);
  TrainOptions options;
  options.schedule = config.schedule;
  options.batch = config.batch;
  options.batch.seed = DeriveSeed(seed, kBatchStream);
  options.instrument = config.instrument;
  options.observer = observer;
  run.trace = config.defense
                  ? RunDefense(run.model, state, *config.defense, options, config.epochs)
                  : Train(run.model, state, options, config.epochs);
  return run;
}

double EvaluateAttack(const Dataset& poisoned, const VictimConfig& config,
                      std::span<const double> target_x, size_t adv_label,
                      std::span<const uint64_t> seeds) {
  if (seeds.empty()) Fail(ErrorCode::kInvalidInput, "need at least one trial");
  if (target_x.size() != poisoned.dim) Fail(ErrorCode::kInvalidInput, "target width mismatch");
  std::vector<uint8_t> hit(seeds.size(), 0);
  std::vector<std::exception_ptr> errors(seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(seeds.size()); ++t) {
    const auto k = static_cast<size_t>(t);
    try {
      const VictimRun run = TrainVictim(poisoned, config, seeds[k]);
      hit[k] = Predict(run.model, target_x) == adv_label ? 1 : 0;
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  const auto successes = static_cast<double>(std::ranges::count(hit, 1));
  return successes / static_cast<double>(seeds.size());
}

EffectiveSubset FindEffectiveSubset(const Dataset& poisoned,
                                    std::span<const size_t> poison_indices,
                                    const VictimConfig& config,
                                    std::span<const double> target_x,
                                    size_t adv_label,
                                    std::span<const uint64_t> seeds,
                                    SubsetSearch mode, double success_threshold) {
  const size_t count = poison_indices.size();
  if (count == 0) Fail(ErrorCode::kInvalidInput, "empty poison set");
  if (mode == SubsetSearch::kExhaustive && count > kExhaustiveSubsetLimit) {
    Fail(ErrorCode::kInstanceTooLarge,
         "exhaustive search supports at most " +
             std::to_string(kExhaustiveSubsetLimit) + " poisons");
  }
  if (count >= 64) Fail(ErrorCode::kInstanceTooLarge, "too many poisons");

  std::vector<size_t> sorted(poison_indices.begin(), poison_indices.end());
  std::ranges::sort(sorted);
  std::vector<uint8_t> is_listed(poisoned.size(), 0);
  for (size_t i : sorted) {
    if (i >= poisoned.size()) Fail(ErrorCode::kInvalidInput, "poison index out of range");
    is_listed[i] = 1;
  }

  EffectiveSubset out;
  std::map<uint64_t, bool> cache;
  // Trains with only the poisons in `mask` kept; the rest are removed.
  auto succeeds = [&](uint64_t mask) {
    auto it = cache.find(mask);
    if (it != cache.end()) return it->second;
    std::vector<size_t> keep;
    for (size_t i = 0; i < poisoned.size(); ++i) {
      if (!is_listed[i]) {
        keep.push_back(i);
        continue;
      }
      const auto pos = static_cast<size_t>(std::ranges::lower_bound(sorted, i) - sorted.begin());
      if (mask >> pos & 1) keep.push_back(i);
    }
    const double rate = EvaluateAttack(poisoned.Subset(keep), config, target_x,
                                       adv_label, seeds);
    ++out.evaluations;
    return cache[mask] = rate >= success_threshold;
  };
  const uint64_t full = (count == 64 ? ~0ULL : (1ULL << count) - 1);
  auto effective = [&](uint64_t mask) {
    return succeeds(mask) && !succeeds(full & ~mask);
  };

  if (!succeeds(full)) {
    Fail(ErrorCode::kNoEffectiveSubset, "attack fails even with every poison");
  }
  if (succeeds(0)) {
    Fail(ErrorCode::kNoEffectiveSubset, "attack succeeds without any poison");
  }

  uint64_t found = full;
  if (mode == SubsetSearch::kExhaustive) {
    // Sizes ascending; within a size, lexicographic over sorted indices.
    bool done = false;
    std::vector<size_t> combo;
    for (size_t size = 1; size <= count && !done; ++size) {
      combo.resize(size);
      for (size_t k = 0; k < size; ++k) combo[k] = k;
      for (;;) {
        uint64_t mask = 0;
        for (size_t k : combo) mask |= 1ULL << k;
        if (effective(mask)) {
          found = mask;
          done = true;
          break;
        }
        size_t k = size;
        while (k > 0 && combo[k - 1] == count - size + (k - 1)) --k;
        if (k == 0) break;
        ++combo[k - 1];
        for (size_t j = k; j < size; ++j) combo[j] = combo[j - 1] + 1;
      }
    }
  } else {
    for (size_t pos = 0; pos < count; ++pos) {
      const uint64_t candidate = found & ~(1ULL << pos);
      if (candidate != 0 && effective(candidate)) found = candidate;
    }
  }

  for (size_t pos = 0; pos < count; ++pos) {
    if (found >> pos & 1) out.poisons.push_back(sorted[pos]);
  }
  out.subset_succeeds = succeeds(found);
  out.complement_fails = !succeeds(full & ~found);
  return out;
}

}  // namespace epic
