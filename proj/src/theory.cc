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

#include "epic/theory.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "epic/error.h"
#include "epic/rng.h"

namespace epic {
namespace {

double Norm(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

}  // namespace

PlCheck CheckPl(std::span<const TrajectoryPoint> trajectory, double min_loss) {
  if (trajectory.empty()) Fail(ErrorCode::kInvalidInput, "empty trajectory");
  PlCheck out;
  out.certificate.method = PlMethod::kEmpirical;
  out.certificate.mu = std::numeric_limits<double>::infinity();
  out.certificate.min_loss = std::numeric_limits<double>::infinity();
  out.certificate.max_loss = -std::numeric_limits<double>::infinity();
  for (size_t t = 0; t < trajectory.size(); ++t) {
    const TrajectoryPoint& p = trajectory[t];
    if (p.loss < min_loss) {
      Fail(ErrorCode::kInvalidSurface,
           "loss " + std::to_string(p.loss) + " at point " + std::to_string(t) +
               " is below the assumed minimum " + std::to_string(min_loss));
    }
    out.certificate.min_loss = std::min(out.certificate.min_loss, p.loss);
    out.certificate.max_loss = std::max(out.certificate.max_loss, p.loss);
    ++out.certificate.points_checked;
    const double gap = p.loss - min_loss;
    if (gap == 0.0) continue;
    const double ratio = 0.5 * p.grad_norm_sq / gap;
    if (!(ratio > 0.0)) {
      out.violation = t;
      out.certificate.mu = 0.0;
      return out;
    }
    out.certificate.mu = std::min(out.certificate.mu, ratio);
  }
  out.certified = true;
  return out;
}

PlCertificate QuadraticSurface::Certificate() const {
  if (!(a > 0.0)) Fail(ErrorCode::kInvalidSurface, "curvature must be positive");
  return {a, PlMethod::kAnalytic, 0, 0.0, std::numeric_limits<double>::infinity()};
}

std::vector<double> QuadraticSurface::GdLosses(double theta0, double eta,
                                               size_t steps) const {
  std::vector<double> out;
  out.reserve(steps + 1);
  double theta = theta0;
  for (size_t t = 0; t <= steps; ++t) {
    out.push_back(Loss(theta));
    theta -= eta * Grad(theta);
  }
  return out;
}

DropPerturbation MeasureRho(std::span<const std::vector<double>> full_grads,
                            std::span<const std::vector<double>> subset_grads) {
  if (full_grads.size() != subset_grads.size()) {
    Fail(ErrorCode::kInvalidInput, "gradient series length mismatch");
  }
  DropPerturbation out;
  for (size_t t = 0; t < full_grads.size(); ++t) {
    const auto& g = full_grads[t];
    const auto& s = subset_grads[t];
    if (g.size() != s.size()) {
      Fail(ErrorCode::kInvalidInput, "gradient width mismatch at epoch " + std::to_string(t));
    }
    double sq = 0.0;
    for (size_t k = 0; k < g.size(); ++k) {
      const double d = g[k] - s[k];
      sq += d * d;
    }
    out.rho = std::max(out.rho, std::sqrt(sq));
    out.grad_max = std::max(out.grad_max, Norm(g));
  }
  return out;
}

BoundCheck VerifyBound(std::span<const double> losses, double mu,
                             const DropPerturbation& drop, double eta,
                             size_t first_checked, double tolerance) {
  if (losses.empty()) Fail(ErrorCode::kInvalidInput, "empty loss series");
  if (!(mu > 0.0) || !(eta > 0.0)) {
    Fail(ErrorCode::kInvalidInput, "mu and eta must be positive");
  }
  if (eta * mu >= 1.0) {
    Fail(ErrorCode::kOutOfRegime,
         "eta * mu = " + std::to_string(eta * mu) + " must be below 1");
  }
  BoundCheck out;
  const double rate = 1.0 - eta * mu;
  const double additive =
      -(drop.rho * drop.rho - 2.0 * drop.rho * drop.grad_max) / (2.0 * mu);
  for (size_t t = 0; t < losses.size(); ++t) {
    BoundPoint p;
    p.t = t;
    p.loss = losses[t];
    p.contraction = std::pow(rate, static_cast<double>(t)) * losses[0];
    p.additive = additive;
    p.bound = p.contraction + p.additive;
    p.checked = t >= first_checked;
    p.holds = p.loss <= p.bound + tolerance;
    if (p.checked) {
      ++out.checked;
      if (p.holds) ++out.satisfied;
    }
    out.points.push_back(p);
  }
  return out;
}

std::vector<TrajectoryPoint> Trajectory(const Instrumentation& probes) {
  std::vector<TrajectoryPoint> out;
  for (size_t t = 0; t < probes.full_grad.size(); ++t) {
    const double n = Norm(probes.full_grad[t]);
    out.push_back({probes.full_loss[t], n * n});
  }
  return out;
}

TrainTrace RunRandomDrops(ToyModel& model, DatasetState& state,
                          const std::map<size_t, size_t>& drops_per_epoch,
                          const TrainOptions& options, size_t total_epochs,
                          uint64_t seed) {
  auto hook = [&](size_t epoch, const ToyModel&,
                  DatasetState& s) -> std::optional<RoundReport> {
    auto it = drops_per_epoch.find(epoch);
    if (it == drops_per_epoch.end()) return std::nullopt;
    std::vector<size_t> pool = s.active();
    if (it->second > pool.size()) {
      Fail(ErrorCode::kInvalidInput, "more random drops than active examples");
    }
    Rng rng(DeriveSeed(seed, epoch));
    for (size_t i = 0; i < it->second; ++i) {
      const size_t j = i + static_cast<size_t>(rng.UniformInt(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(it->second);
    std::ranges::sort(pool);
    RoundReport report;
    report.epoch = epoch;
    report.dropped = pool;
    report.has_mask = s.data().has_poison_mask();
    std::vector<DropRecord> records;
    for (size_t i : pool) {
      records.push_back({i, epoch, s.data().labels[i], 0});
      if (s.data().is_poison(i)) {
        ++report.dropped_poison;
      } else {
        ++report.dropped_clean;
      }
    }
    s.Drop(records);
    return report;
  };
  return TrainWithRounds(model, state, options, total_epochs, hook);
}

std::map<size_t, size_t> DropSchedule(const TrainTrace& trace) {
  std::map<size_t, size_t> out;
  for (const RoundReport& r : trace.rounds) out[r.epoch] += r.dropped.size();
  return out;
}

TheoremReport CheckTrace(const TrainTrace& trace, double eta,
                         size_t first_checked) {
  if (!trace.instrumentation) {
    Fail(ErrorCode::kInvalidInput, "trace was not instrumented");
  }
  const Instrumentation& probes = *trace.instrumentation;
  TheoremReport out;
  const std::vector<TrajectoryPoint> points = Trajectory(probes);
  out.pl = CheckPl(points);
  out.drop = MeasureRho(probes.full_grad, probes.subset_grad);
  if (!out.pl.certified) return out;
  out.bound = VerifyBound(probes.full_loss, out.pl.certificate.mu, out.drop,
                             eta, first_checked);
  return out;
}

}  // namespace epic
