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

#include "epic/defense.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include "epic/error.h"
#include "epic/rng.h"

namespace epic {
namespace {

ClassRound SelectClass(const DatasetState& state, const ProxyMatrix& proxies,
                       std::span<const size_t> rows, size_t cls,
                       const DefenseConfig& config, size_t epoch) {
  ClassRound out;
  out.cls = cls;
  out.size = rows.size();
  for (size_t r : rows) out.members.push_back(state.active()[r]);
  out.budget = MedoidBudget(config.medoid_fraction, out.size);
  if (out.size <= config.min_class_size_guard || out.budget >= out.size) {
    out.skipped = true;
    return out;
  }

  DistanceOracle oracle(proxies.SelectRows(rows));
  std::vector<size_t> local(out.size);
  for (size_t p = 0; p < local.size(); ++p) local[p] = p;
  const FacilityObjective objective =
      FacilityObjective::WithTightOffset(oracle, std::move(local));
  out.c0 = objective.c0();
  const uint64_t seed =
      DeriveSeed(config.seed, epoch * state.data().num_classes + cls);
  const MedoidSelection selection =
      GreedySelect(objective, out.budget, config.greedy_mode, seed);

  for (size_t m : selection.medoids) out.medoids.push_back(out.members[m]);
  out.gamma = selection.gamma;
  for (size_t a : selection.assignment) out.assignment.push_back(out.members[a]);
  for (size_t r = 0; r < out.medoids.size(); ++r) {
    if (out.gamma[r] == 1) out.dropped.push_back(out.medoids[r]);
  }
  return out;
}

}  // namespace

void DefenseConfig::Validate() const {
  if (interval_epochs < 1) Fail(ErrorCode::kInvalidInput, "interval must be >= 1");
  if (!(medoid_fraction > 0.0 && medoid_fraction <= 1.0)) {
    Fail(ErrorCode::kInvalidInput, "medoid fraction must be in (0, 1]");
  }
}

DefenseConfig DefenseConfig::Preset(double fraction, size_t interval) {
  DefenseConfig config;
  config.medoid_fraction = fraction;
  config.warmup_epochs = static_cast<size_t>(std::lround(fraction * 100.0));
  config.interval_epochs = interval;
  return config;
}

RoundReport EliminationRound(const DatasetState& state,
                             const ProxyMatrix& proxies,
                             const DefenseConfig& config, size_t epoch) {
  config.Validate();
  if (proxies.rows() != state.active().size()) {
    Fail(ErrorCode::kInvalidInput,
         "proxy rows (" + std::to_string(proxies.rows()) +
             ") do not match active examples (" +
             std::to_string(state.active().size()) + ")");
  }
  const Dataset& data = state.data();
  std::vector<std::vector<size_t>> rows(data.num_classes);
  for (size_t r = 0; r < state.active().size(); ++r) {
    rows[data.labels[state.active()[r]]].push_back(r);
  }
  if (config.min_class_size_guard == 0) {
    for (size_t c = 0; c < data.num_classes; ++c) {
      if (!rows[c].empty() &&
          MedoidBudget(config.medoid_fraction, rows[c].size()) >= rows[c].size()) {
        Fail(ErrorCode::kDegenerateBudget,
             "class " + std::to_string(c) +
                 ": every active example would be its own isolated medoid");
      }
    }
  }

  RoundReport report;
  report.epoch = epoch;
  report.has_mask = data.has_poison_mask();
  report.classes.resize(data.num_classes);
  std::vector<std::exception_ptr> errors(data.num_classes);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(data.num_classes); ++c) {
    const auto cls = static_cast<size_t>(c);
    try {
      report.classes[cls] = SelectClass(state, proxies, rows[cls], cls, config, epoch);
    } catch (...) {
      errors[cls] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (const ClassRound& cr : report.classes) {
    report.dropped.insert(report.dropped.end(), cr.dropped.begin(), cr.dropped.end());
  }
  std::ranges::sort(report.dropped);
  for (size_t i : report.dropped) {
    if (data.is_poison(i)) {
      ++report.dropped_poison;
    } else {
      ++report.dropped_clean;
    }
  }
  return report;
}

std::vector<DropRecord> DropRecords(const RoundReport& report) {
  std::vector<DropRecord> out;
  for (const ClassRound& cr : report.classes) {
    for (size_t r = 0; r < cr.medoids.size(); ++r) {
      if (cr.gamma[r] == 1) out.push_back({cr.medoids[r], report.epoch, cr.cls, r});
    }
  }
  return out;
}

TrainTrace RunDefense(ToyModel& model, DatasetState& state,
                      const DefenseConfig& config, const TrainOptions& options,
                      size_t total_epochs) {
  config.Validate();
  if (config.min_class_size_guard == 0 && config.medoid_fraction >= 1.0) {
    Fail(ErrorCode::kDegenerateBudget,
         "medoid fraction 1.0 without a class guard isolates every example");
  }
  const size_t num_classes = state.data().num_classes;
  for (size_t c = 0; c < num_classes; ++c) {
    if (state.ActiveCount(c) == 0) {
      Fail(ErrorCode::kInvalidInput, "class " + std::to_string(c) + " is empty");
    }
  }
  auto hook = [&](size_t epoch, const ToyModel& current,
                  DatasetState& s) -> std::optional<RoundReport> {
    if (!config.IsRoundEpoch(epoch)) return std::nullopt;
    const ProxyMatrix proxies = ExtractProxies(current, s.data(), s.active(),
                                               config.proxy_mode, config.unit_norm);
    RoundReport report = EliminationRound(s, proxies, config, epoch);
    s.Drop(DropRecords(report));
    for (size_t c = 0; c < num_classes; ++c) {
      if (s.ActiveCount(c) == 0) {
        Fail(ErrorCode::kClassExhausted,
             "class " + std::to_string(c) + " emptied at epoch " +
                 std::to_string(epoch) + " after dropping " +
                 std::to_string(report.dropped.size()) + " examples");
      }
    }
    return report;
  };
  return TrainWithRounds(model, state, options, total_epochs, hook);
}

ClusterHistogram BuildClusterHistogram(const RoundReport& report,
                                       const Dataset& data) {
  ClusterHistogram hist;
  for (const ClassRound& cr : report.classes) {
    if (cr.skipped) continue;
    for (size_t r = 0; r < cr.medoids.size(); ++r) {
      HistogramBucket& bucket = hist[cr.gamma[r]];
      ++bucket.clusters;
      for (size_t m = 0; m < cr.members.size(); ++m) {
        if (cr.assignment[m] != cr.medoids[r]) continue;
        const size_t i = cr.members[m];
        if (!data.has_poison_mask()) {
          ++bucket.unknown;
        } else if (data.is_poison(i)) {
          ++bucket.poison;
        } else {
          ++bucket.clean;
        }
      }
    }
  }
  return hist;
}

std::optional<double> Cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) Fail(ErrorCode::kInvalidInput, "cosine length mismatch");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) return std::nullopt;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<CosinePoint> CosineAlignmentTrace(
    std::span<const ProxyMatrix> proxies, std::span<const uint8_t> poison_mask,
    std::span<const std::vector<double>> targets) {
  if (proxies.size() != targets.size()) {
    Fail(ErrorCode::kInvalidInput, "one target proxy per epoch required");
  }
  std::vector<CosinePoint> out;
  out.reserve(proxies.size());
  for (size_t t = 0; t < proxies.size(); ++t) {
    const ProxyMatrix& m = proxies[t];
    if (poison_mask.size() != m.rows()) {
      Fail(ErrorCode::kInvalidInput, "poison mask length mismatch");
    }
    std::vector<size_t> poisons;
    for (size_t i = 0; i < m.rows(); ++i) {
      if (poison_mask[i]) poisons.push_back(i);
    }
    if (poisons.empty()) Fail(ErrorCode::kInvalidInput, "no poisons in mask");

    CosinePoint point;
    double pp_sum = 0.0;
    size_t pp_count = 0;
    for (size_t a = 0; a < poisons.size(); ++a) {
      for (size_t b = a + 1; b < poisons.size(); ++b) {
        if (auto c = Cosine(m.row(poisons[a]), m.row(poisons[b]))) {
          pp_sum += *c;
          ++pp_count;
        } else {
          ++point.skipped;
        }
      }
    }
    double pt_sum = 0.0;
    size_t pt_count = 0;
    for (size_t p : poisons) {
      if (auto c = Cosine(m.row(p), targets[t])) {
        pt_sum += *c;
        ++pt_count;
      } else {
        ++point.skipped;
      }
    }
    if (pp_count > 0) point.poison_poison = pp_sum / static_cast<double>(pp_count);
    if (pt_count > 0) point.poison_target = pt_sum / static_cast<double>(pt_count);
    out.push_back(point);
  }
  return out;
}

}  // namespace epic
