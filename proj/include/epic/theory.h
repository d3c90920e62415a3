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

#ifndef EPIC_THEORY_H_
#define EPIC_THEORY_H_

// Numeric checks of the convergence guarantee for training on a pruned set.
// Under mu-PL* (0.5 * |g|^2 >= mu * L) and constant-step GD,
//
//   L(theta_t) <= (1 - eta*mu)^t L(theta_0) - (rho^2 - 2 rho grad_max) / (2 mu)
//
// where rho bounds |g_t - g_t^S| (full vs. pruned-set gradient) and
// grad_max bounds |g_t| along the trajectory.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epic/dataset.h"
#include "epic/defense.h"
#include "epic/model.h"
#include "epic/trace.h"
#include "epic/trainer.h"

namespace epic {

enum class PlMethod { kAnalytic, kEmpirical };

struct PlCertificate {
  double mu = 0.0;
  PlMethod method = PlMethod::kEmpirical;
  size_t points_checked = 0;
  // Loss range of the checked points; the certificate only covers it.
  double min_loss = 0.0;
  double max_loss = 0.0;
};

struct TrajectoryPoint {
  double loss = 0.0;
  double grad_norm_sq = 0.0;
};

struct PlCheck {
  bool certified = false;
  PlCertificate certificate;
  std::optional<size_t> violation;  // index of a point with g = 0, L > L*
};

// Largest mu with 0.5 |g|^2 >= mu (L - min_loss) at every point. Throws
// InvalidSurface if some loss is below min_loss.
PlCheck CheckPl(std::span<const TrajectoryPoint> trajectory,
                double min_loss = 0.0);

// L(theta) = 0.5 a theta^2 satisfies PL* with mu = a exactly.
struct QuadraticSurface {
  double a = 1.0;

  double Loss(double theta) const { return 0.5 * a * theta * theta; }
  double Grad(double theta) const { return a * theta; }
  PlCertificate Certificate() const;
  // Iterates theta_{t+1} = theta_t - eta a theta_t, returning L at t = 0..steps.
  std::vector<double> GdLosses(double theta0, double eta, size_t steps) const;
};

struct DropPerturbation {
  double rho = 0.0;
  double grad_max = 0.0;
};

// rho = max_t |g_t - g_t^S|, grad_max = max_t |g_t|.
DropPerturbation MeasureRho(std::span<const std::vector<double>> full_grads,
                            std::span<const std::vector<double>> subset_grads);

struct BoundPoint {
  size_t t = 0;
  double loss = 0.0;
  double contraction = 0.0;  // (1 - eta mu)^t L_0
  double additive = 0.0;     // -(rho^2 - 2 rho grad_max) / (2 mu)
  double bound = 0.0;
  bool checked = false;      // t >= first_checked
  bool holds = false;
};

struct BoundCheck {
  std::vector<BoundPoint> points;
  size_t checked = 0;
  size_t satisfied = 0;

  double fraction() const {
    return checked == 0 ? 1.0 : static_cast<double>(satisfied) / static_cast<double>(checked);
  }
  bool all_hold() const { return satisfied == checked; }
};

inline constexpr double kBoundTolerance = 1e-9;

// `losses[t]` is the full-data loss at theta_t. Throws OutOfRegime when
// eta * mu >= 1.
BoundCheck VerifyBound(std::span<const double> losses, double mu,
                             const DropPerturbation& drop, double eta,
                             size_t first_checked = 0,
                             double tolerance = kBoundTolerance);

// (L(theta_t), |g_t|^2) for every probed epoch.
std::vector<TrajectoryPoint> Trajectory(const Instrumentation& probes);

// Uniformly random drops at the given epochs (epoch -> count), for
// comparing against the gradient perturbation of the medoid defense.
TrainTrace RunRandomDrops(ToyModel& model, DatasetState& state,
                          const std::map<size_t, size_t>& drops_per_epoch,
                          const TrainOptions& options, size_t total_epochs,
                          uint64_t seed);

// Drop counts per round epoch of a defended trace.
std::map<size_t, size_t> DropSchedule(const TrainTrace& trace);

struct TheoremReport {
  PlCheck pl;
  DropPerturbation drop;
  BoundCheck bound;
};

// Measures mu, rho and grad_max on an instrumented constant-step trace and
// checks the bound at every epoch from `first_checked` on.
TheoremReport CheckTrace(const TrainTrace& trace, double eta,
                         size_t first_checked);

}  // namespace epic

#endif  // EPIC_THEORY_H_
