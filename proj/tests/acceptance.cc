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


// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "epic/dataset.h"
#include "epic/defense.h"
#include "epic/facility_location.h"
#include "epic/grad_dump.h"
#include "epic/model.h"
#include "epic/proxy.h"
#include "epic/report.h"
#include "epic/rng.h"
#include "epic/sim.h"
#include "epic/theory.h"
#include "epic/trainer.h"
#include "scenarios.h"
#include "test_util.h"

namespace epic {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

FacilityObjective RandomInstance(Rng& rng, const DistanceOracle*& holder,
                                 std::vector<std::unique_ptr<DistanceOracle>>& keep,
                                 size_t n) {
  const size_t dim = 1 + rng.UniformInt(4);
  keep.push_back(std::make_unique<DistanceOracle>(
      testing::RandomProxies(rng.NextU64(), n, dim, 5.0)));
  holder = keep.back().get();
  std::vector<size_t> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  return FacilityObjective::WithTightOffset(*holder, indices);
}

// Greedy value against the exhaustive optimum, and lazy against naive.
Outcome GreedyVersusOptimum() {
  const auto start = Clock::now();
  Rng rng(DeriveSeed(2026, 1));
  std::vector<std::unique_ptr<DistanceOracle>> keep;
  const DistanceOracle* oracle = nullptr;
  size_t bound_ok = 0;
  size_t lazy_ok = 0;
  double worst_ratio = 1.0;
  for (int instance = 0; instance < 100; ++instance) {
    const size_t n = 2 + rng.UniformInt(11);
    const size_t k = 1 + rng.UniformInt(std::min<size_t>(4, n));
    const FacilityObjective f = RandomInstance(rng, oracle, keep, n);
    const MedoidSelection naive = GreedySelect(f, k, GreedyMode::kNaive);
    const MedoidSelection lazy = GreedySelect(f, k, GreedyMode::kLazy);
    const BruteForceResult best = BruteForceOptimum(f, k);
    const double value = Evaluate(f, naive.medoids);
    if (value >= (1.0 - 1.0 / std::exp(1.0)) * best.value - 1e-12) ++bound_ok;
    if (best.value > 0) worst_ratio = std::min(worst_ratio, value / best.value);
    if (lazy.medoids == naive.medoids) ++lazy_ok;
  }
  const double seconds = SecondsSince(start);
  return {bound_ok == 100 && lazy_ok == 100 && seconds < 10.0,
          Fmt("bound %zu/100 (worst ratio %.4f), lazy == naive %zu/100, %.2f s",
              bound_ok, worst_ratio, lazy_ok, seconds)};
}

// Nonnegative, diminishing marginal gains on random nested pairs.
Outcome SubmodularityProperties() {
  Rng rng(DeriveSeed(2026, 2));
  std::vector<std::unique_ptr<DistanceOracle>> keep;
  const DistanceOracle* oracle = nullptr;
  size_t violations = 0;
  double worst = 0.0;
  for (int triple = 0; triple < 1000; ++triple) {
    const size_t n = 3 + rng.UniformInt(18);
    const FacilityObjective f = RandomInstance(rng, oracle, keep, n);
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (size_t i = 0; i + 1 < n; ++i) {
      std::swap(order[i], order[i + rng.UniformInt(n - i)]);
    }
    // order = [S | T \ S | e | rest]
    const size_t t_size = rng.UniformInt(n);
    const size_t s_size = rng.UniformInt(t_size + 1);
    const size_t e = order[t_size];
    std::vector<size_t> s(order.begin(), order.begin() + s_size);
    std::vector<size_t> t(order.begin(), order.begin() + t_size);
    auto gain = [&](std::vector<size_t> set) {
      const double before = Evaluate(f, set);
      set.push_back(e);
      return Evaluate(f, set) - before;
    };
    const double gs = gain(s);
    const double gt = gain(t);
    worst = std::min({worst, gs, gt, gs - gt});
    if (gs < -1e-9 || gt < -1e-9 || gs < gt - 1e-9) ++violations;
  }
  return {violations == 0,
          Fmt("%zu violations in 1000 triples (most negative slack %.3g)", violations, worst)};
}

double CrossEntropy(std::span<const double> logits, size_t label) {
  double m = logits[0];
  for (double z : logits) m = std::max(m, z);
  double s = 0.0;
  for (double z : logits) s += std::exp(z - m);
  return m + std::log(s) - logits[label];
}

// Analytic gradients against central differences.
Outcome GradientCorrectness() {
  Rng rng(DeriveSeed(2026, 3));
  constexpr double kTol = 1e-6;
  size_t ok = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t dim = 1 + rng.UniformInt(5);
    const size_t classes = 2 + rng.UniformInt(4);
    ToyModel model = trial % 2 == 0 ? ToyModel::Linear(dim, classes)
                                    : ToyModel::OneHidden(dim, classes, 1 + rng.UniformInt(8));
    model.InitUniform(rng.NextU64(), 1.0);
    const std::vector<double> x = testing::RandomVector(rng, dim, 2.0);
    const size_t label = rng.UniformInt(classes);

    const ForwardResult fwd = Forward(model, x);
    const double e_res = testing::RelativeError(
        ClassResidualProxy(fwd.logits, label),
        testing::FiniteDifference(
            [&](std::span<const double> z) { return CrossEntropy(z, label); }, fwd.logits));

    const size_t offset = model.LastLayerOffset();
    auto loss_at = [&](std::span<const double> p, size_t from) {
      ToyModel m = model;
      std::copy(p.begin(), p.end(), m.params.begin() + static_cast<std::ptrdiff_t>(from));
      return ExampleLossAndGrad(m, x, label).loss;
    };
    const std::vector<double> last(model.params.begin() + static_cast<std::ptrdiff_t>(offset),
                                   model.params.end());
    const double e_last = testing::RelativeError(
        LastLayerFullProxy(fwd.embedding, fwd.logits, label),
        testing::FiniteDifference([&](std::span<const double> p) { return loss_at(p, offset); },
                                  last));
    const double e_full = testing::RelativeError(
        ExampleLossAndGrad(model, x, label).grad,
        testing::FiniteDifference([&](std::span<const double> p) { return loss_at(p, 0); },
                                  model.params));
    const double e = std::max({e_res, e_last, e_full});
    worst = std::max(worst, e);
    if (e <= kTol) ++ok;
  }
  return {ok == 1000, Fmt("%zu/1000 within %.0e (worst %.2e)", ok, kTol, worst)};
}

// Smallest ratio, over both classes, of the planted points' distance to
// any clean point of their class and that class's clean diameter, in proxy
// space at the first round.
double OutlierDisplacement(uint64_t seed) {
  const Dataset data = testing::PlantedOutlierBlobs(seed);
  DatasetState state(data);
  ToyModel model = ToyModel::Linear(2, 2);
  model.InitUniform(seed);
  Train(model, state, testing::PlantedOutlierTraining(), testing::kPlantedWarmup);
  const ProxyMatrix p = ExtractProxies(model, data, state.active(), ProxyMode::kLastLayerFull);
  double ratio = INFINITY;
  for (size_t c = 0; c < 2; ++c) {
    double diameter = 0.0;
    double displacement = INFINITY;
    for (size_t i = 0; i < data.size(); ++i) {
      for (size_t j = 0; j < data.size(); ++j) {
        if (data.labels[i] != c || data.labels[j] != c) continue;
        const double d = PairwiseDistance(p, i, j);
        if (!data.is_poison(i) && !data.is_poison(j)) diameter = std::max(diameter, d);
        if (data.is_poison(i) && !data.is_poison(j)) displacement = std::min(displacement, d);
      }
    }
    ratio = std::min(ratio, displacement / diameter);
  }
  return ratio;
}

Outcome IsolationRecall() {
  const auto start = Clock::now();
  size_t recalled = 0;
  size_t max_clean = 0;
  double min_displacement = INFINITY;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    min_displacement = std::min(min_displacement, OutlierDisplacement(seed));
    const Dataset data = testing::PlantedOutlierBlobs(seed);
    DatasetState state(data);
    ToyModel model = ToyModel::Linear(2, 2);
    model.InitUniform(seed);
    const TrainTrace trace =
        RunDefense(model, state, testing::PlantedOutlierDefense(seed),
                   testing::PlantedOutlierTraining(), testing::kPlantedEpochs);
    size_t poison = 0;
    size_t clean = 0;
    for (size_t r = 0; r < trace.rounds.size() && r < 2; ++r) {
      poison += trace.rounds[r].dropped_poison;
      clean += trace.rounds[r].dropped_clean;
    }
    if (poison == 3) ++recalled;
    max_clean = std::max(max_clean, clean);
  }
  const double seconds = SecondsSince(start);
  return {min_displacement >= 10.0 && recalled >= 19 && max_clean <= 4 && seconds < 30.0,
          Fmt("all outliers dropped in %zu/20 seeds, at most %zu/200 clean dropped, "
              "displacement >= %.1fx diameter, %.2f s",
              recalled, max_clean, min_displacement, seconds)};
}

SimConfig EfficacyConfig() {
  return SimConfig::FromJson(Json::parse(R"({
    "seed": 0, "trials": 20,
    "dataset": {"num_classes": 2, "dim": 2, "per_class": 100, "radius": 2.0, "stddev": 1.0},
    "training": {"epochs": 40, "lr": 0.5},
    "defense": {"enabled": true, "warmup": 10, "interval": 2, "fraction": 0.1},
    "attack": {"num_poisons": 20, "epsilon": 1.0}
  })"));
}

// Seeded reference outcome of EfficacyConfig(), pinned.
constexpr double kPinnedDefendedRate = 0.25;
constexpr double kPinnedUndefendedRate = 0.35;
constexpr double kPinnedDefendedAccuracy = 0.977;
constexpr double kPinnedUndefendedAccuracy = 0.97725;

Outcome DefenseEfficacy() {
  const SimResult r = RunSimulation(EfficacyConfig());
  const double dr = *r.defended_rate;
  const double ur = *r.undefended_rate;
  const double da = *r.defended_accuracy;
  const double ua = *r.undefended_accuracy;
  const bool pinned = dr == kPinnedDefendedRate && ur == kPinnedUndefendedRate &&
                      std::abs(da - kPinnedDefendedAccuracy) < 1e-9 &&
                      std::abs(ua - kPinnedUndefendedAccuracy) < 1e-9;
  return {dr < ur && std::abs(da - ua) <= 0.03 && pinned,
          Fmt("success %.2f defended vs %.2f undefended, accuracy %.4f vs %.4f, "
              "fixtures %s",
              dr, ur, da, ua, pinned ? "match" : "differ")};
}

Outcome ConvergenceBench() {
  // Closed-form quadratic.
  const QuadraticSurface q{2.0};
  const double eta = 0.1;
  const std::vector<double> losses = q.GdLosses(1.5, eta, 50);
  std::vector<TrajectoryPoint> pts;
  double theta = 1.5;
  double closed_err = 0.0;
  for (size_t t = 0; t < losses.size(); ++t) {
    pts.push_back({q.Loss(theta), q.Grad(theta) * q.Grad(theta)});
    theta -= eta * q.Grad(theta);
    const double exact = std::pow(1.0 - eta * q.a, 2.0 * static_cast<double>(t)) * losses[0];
    closed_err = std::max(closed_err, std::abs(losses[t] - exact));
  }
  const double mu = CheckPl(pts).certificate.mu;
  const BoundCheck quad = VerifyBound(losses, mu, {}, eta, 0, 1e-12);
  const bool a = quad.all_hold() && std::abs(mu - q.a) <= 1e-12 && closed_err <= 1e-12;

  // Instrumented blobs runs.
  size_t held = 0;
  size_t checked = 0;
  size_t satisfied = 0;
  double rho_epic = 0.0;
  double rho_random = 0.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    SimConfig c = SimConfig::FromJson(Json::parse(R"({
      "trials": 1, "run_undefended": false,
      "dataset": {"num_classes": 2, "dim": 2, "per_class": 100, "radius": 2.0, "stddev": 1.0},
      "training": {"epochs": 40, "lr": 0.5},
      "defense": {"enabled": true, "warmup": 10, "interval": 2, "fraction": 0.1},
      "theorem": {"enabled": true}
    })"));
    c.seed = seed;
    const SimResult r = RunSimulation(c);
    const TheoremReport& e = *r.theorem_epic;
    if (e.pl.certified && e.bound.all_hold()) ++held;
    checked += e.bound.checked;
    satisfied += e.bound.satisfied;
    rho_epic += e.drop.rho / 20.0;
    rho_random += r.theorem_random->drop.rho / 20.0;
  }
  const bool b = held == 20;
  const bool c = rho_epic <= rho_random;
  return {a && b && c,
          Fmt("quadratic %s (mu %.12g); bound held in %zu/20 runs (%zu/%zu epochs); "
              "mean rho %.4g pruned vs %.4g random drops (%s)",
              a ? "exact" : "off", mu, held, satisfied, checked, rho_epic, rho_random,
              c ? "pruned closer" : "pruned farther")};
}

int RunCli(const std::string& args, const std::string& out, const std::string& err) {
  const std::string cmd = std::string("\"") + EPIC_CLI + "\" " + args + " > \"" + out +
                          "\" 2> \"" + err + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void Spit(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

fs::path ScratchDir() {
  const fs::path dir = fs::temp_directory_path() / ("epic_acceptance_" +
                                                    std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

Outcome Determinism(const fs::path& dir) {
  Spit(dir / "sim.json", R"({
    "seed": 9, "trials": 2,
    "dataset": {"num_classes": 3, "dim": 2, "per_class": 40, "radius": 3.0, "stddev": 1.0},
    "training": {"epochs": 16, "lr": 0.5},
    "defense": {"enabled": true, "warmup": 10, "interval": 2, "fraction": 0.2,
                "mode": "stochastic", "guard": 0},
    "attack": {"num_poisons": 5, "epsilon": 1.0, "steps": 50, "adv_class": 2},
    "theorem": {"enabled": true}
  })");
  const ProxyMatrix proxies = testing::RandomProxies(4, 90, 6);
  WriteGradDump((dir / "g.epgd").string(), proxies, DumpType::kFloat32);
  Labels labels;
  labels.num_classes = 3;
  for (size_t i = 0; i < 90; ++i) labels.classes.push_back(i % 3);
  Spit(dir / "g.txt", FormatLabels(labels));

  const std::vector<std::string> commands = {
      "defend-sim --config \"" + (dir / "sim.json").string() + "\" --out \"" +
          (dir / "sim_%.json").string() + "\"",
      "select --input \"" + (dir / "g.epgd").string() + "\" --labels \"" +
          (dir / "g.txt").string() + "\" --fraction 0.2 --mode stochastic --seed 5 --out \"" +
          (dir / "select_%.json").string() + "\"",
  };
  size_t identical = 0;
  std::string failures;
  for (const std::string& pattern : commands) {
    std::string reports[2];
    bool ran = true;
    for (int run = 0; run < 2; ++run) {
      std::string cmd = pattern;
      const size_t at = cmd.find('%');
      cmd.replace(at, 1, std::to_string(run));
      const fs::path report = cmd.substr(cmd.rfind("--out \"") + 7,
                                         cmd.size() - cmd.rfind("--out \"") - 8);
      ran = ran && RunCli(cmd, (dir / "stdout").string(), (dir / "stderr").string()) == 0;
      if (ran) reports[run] = StableDump(Json::parse(Slurp(report)));
    }
    if (ran && reports[0] == reports[1] && !reports[0].empty()) {
      ++identical;
    } else {
      failures += " " + pattern.substr(0, pattern.find(' '));
    }
  }
  // Exports of the same report are identical byte for byte.
  std::string csv[2];
  for (int run = 0; run < 2; ++run) {
    RunCli("export --input \"" + (dir / "sim_0.json").string() + "\" --series loss",
           (dir / ("loss" + std::to_string(run) + ".csv")).string(), (dir / "stderr").string());
    csv[run] = Slurp(dir / ("loss" + std::to_string(run) + ".csv"));
  }
  const bool export_ok = !csv[0].empty() && csv[0] == csv[1];
  return {identical == commands.size() && export_ok,
          Fmt("%zu/%zu commands reproduce their reports, export %s%s", identical,
              commands.size(), export_ok ? "identical" : "differs",
              failures.empty() ? "" : (" (failed:" + failures + ")").c_str())};
}

Outcome FormatRobustness(const fs::path& dir) {
  const std::vector<std::byte> good =
      EncodeGradDump(ProxyMatrix(3, 2, {0, 1, 2, 3, 4, 5}), DumpType::kFloat64);
  Labels labels;
  labels.num_classes = 1;
  labels.classes = {0, 0, 0};
  Spit(dir / "l.txt", FormatLabels(labels));
  auto write = [&](const std::string& name, std::vector<std::byte> bytes) {
    std::ofstream(dir / name, std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
  };
  write("truncated.epgd", {good.begin(), good.end() - 5});
  std::vector<std::byte> magic = good;
  magic[0] = std::byte{'X'};
  write("magic.epgd", magic);
  std::vector<std::byte> dtype = good;
  dtype[24] = std::byte{9};
  write("dtype.epgd", dtype);

  size_t rejected = 0;
  std::string seen;
  for (const std::string name : {"truncated.epgd", "magic.epgd", "dtype.epgd"}) {
    const int code = RunCli("select --input \"" + (dir / name).string() + "\" --labels \"" +
                                (dir / "l.txt").string() + "\"",
                            (dir / "stdout").string(), (dir / "stderr").string());
    const std::string err = Slurp(dir / "stderr");
    const size_t at = err.find("byte offset ");
    if (code == 2 && at != std::string::npos) {
      ++rejected;
      seen += " " + err.substr(at + 12, err.find(')', at) - at - 12);
    }
  }

  // 1e6 x 10 float32 dump through the file path.
  constexpr size_t kRows = 1000000;
  constexpr size_t kCols = 10;
  Rng rng(8);
  std::vector<double> values(kRows * kCols);
  for (double& v : values) v = static_cast<float>(rng.Uniform(-100.0, 100.0));
  const ProxyMatrix big(kRows, kCols, values);
  const std::string path = (dir / "big.epgd").string();
  WriteGradDump(path, big, DumpType::kFloat32);
  const GradDump back = ReadGradDump(path);
  const bool lossless = back.dtype == DumpType::kFloat32 && back.proxies.rows() == kRows &&
                        back.proxies.cols() == kCols &&
                        std::equal(values.begin(), values.end(), back.proxies.values().begin());
  const auto bytes = fs::file_size(path);
  return {rejected == 3 && lossless,
          Fmt("%zu/3 corrupt dumps exit 2 with an offset (at%s), 1e6x10 float32 "
              "round-trip %s (%ju bytes)",
              rejected, seen.c_str(), lossless ? "lossless" : "LOSSY",
              static_cast<uintmax_t>(bytes))};
}

}  // namespace
}  // namespace epic

int main() {
  using namespace epic;
  const fs::path dir = ScratchDir();
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"greedy vs exhaustive optimum", GreedyVersusOptimum},
      {"submodularity and monotonicity", SubmodularityProperties},
      {"gradients vs finite differences", GradientCorrectness},
      {"planted outlier isolation", IsolationRecall},
      {"defense efficacy against gradient matching", DefenseEfficacy},
      {"convergence bound under pruning", ConvergenceBench},
      {"CLI determinism", [&] { return Determinism(dir); }},
      {"gradient dump robustness", [&] { return FormatRobustness(dir); }},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s  [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  fs::remove_all(dir);
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
