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


#include "epic/sim.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string_view>
#include <utility>

#include "epic/error.h"
#include "epic/proxy.h"
#include "epic/rng.h"
#include "epic/theory.h"

namespace epic {
namespace {

constexpr uint64_t kTrainDataStream = 0;
constexpr uint64_t kTestDataStream = 1;
constexpr uint64_t kSurrogateStream = 2;
constexpr uint64_t kVictimStream = 3;
constexpr uint64_t kDefenseStream = 4;
constexpr uint64_t kRandomDropStream = 5;

[[noreturn]] void ConfigFail(const std::string& path, const std::string& what) {
  Fail(ErrorCode::kInvalidInput, "config key '" + path + "' " + what);
}

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported.
// Programmatically built documents store small integers as signed.
bool IsNonNegativeInteger(const Json& v) {
  return v.is_number_unsigned() ||
         (v.is_number_integer() && v.get<int64_t>() >= 0);
}

class ObjectReader {
 public:
  ObjectReader(const Json& json, std::string path)
      : json_(json), path_(std::move(path)) {
    if (!json_.is_object()) {
      if (path_.empty()) Fail(ErrorCode::kInvalidInput, "config must be a JSON object");
      ConfigFail(path_, "must be an object");
    }
  }

  std::string PathOf(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const Json* Find(std::string_view key) {
    auto it = json_.find(std::string(key));
    if (it == json_.end()) return nullptr;
    seen_.insert(std::string(key));
    return &*it;
  }

  void Read(std::string_view key, double& out) {
    if (const Json* v = Find(key)) {
      if (!v->is_number()) ConfigFail(PathOf(key), "must be a number");
      out = v->get<double>();
      if (!std::isfinite(out)) ConfigFail(PathOf(key), "must be finite");
    }
  }

  void Read(std::string_view key, size_t& out) {
    if (const Json* v = Find(key)) {
      if (!IsNonNegativeInteger(*v)) {
        ConfigFail(PathOf(key), "must be a nonnegative integer");
      }
      out = v->get<size_t>();
    }
  }

  void ReadU64(std::string_view key, uint64_t& out) {
    if (const Json* v = Find(key)) {
      if (!IsNonNegativeInteger(*v)) {
        ConfigFail(PathOf(key), "must be a nonnegative integer");
      }
      out = v->get<uint64_t>();
    }
  }

  void Read(std::string_view key, bool& out) {
    if (const Json* v = Find(key)) {
      if (!v->is_boolean()) ConfigFail(PathOf(key), "must be true or false");
      out = v->get<bool>();
    }
  }

  template <typename Parse, typename T>
  void ReadEnum(std::string_view key, T& out, Parse parse) {
    if (const Json* v = Find(key)) {
      if (!v->is_string()) ConfigFail(PathOf(key), "must be a string");
      try {
        out = parse(v->get<std::string>());
      } catch (const Error& e) {
        ConfigFail(PathOf(key), std::string("has an invalid value: ") + e.what());
      }
    }
  }

  void Finish() const {
    for (auto it = json_.begin(); it != json_.end(); ++it) {
      if (!seen_.contains(it.key())) {
        Fail(ErrorCode::kInvalidInput, "unknown config key '" + PathOf(it.key()) + "'");
      }
    }
  }

 private:
  const Json& json_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> ReadVector(const Json& v, const std::string& path) {
  if (!v.is_array()) ConfigFail(path, "must be an array of numbers");
  std::vector<double> out;
  for (const Json& e : v) {
    if (!e.is_number()) ConfigFail(path, "must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

double Millis(std::chrono::steady_clock::duration d) {
  return std::chrono::duration<double, std::milli>(d).count();
}

size_t PickTarget(const ToyModel& surrogate, const Dataset& test, size_t target_class) {
  std::optional<size_t> best;
  double best_margin = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < test.size(); ++i) {
    if (test.labels[i] != target_class) continue;
    if (Predict(surrogate, test.x(i)) != target_class) continue;
    const ForwardResult f = Forward(surrogate, test.x(i));
    double runner_up = -std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < f.logits.size(); ++c) {
      if (c != target_class) runner_up = std::max(runner_up, f.logits[c]);
    }
    const double margin = f.logits[target_class] - runner_up;
    if (margin < best_margin) {
      best_margin = margin;
      best = i;
    }
  }
  if (!best) {
    Fail(ErrorCode::kDegenerateTarget,
         "no correctly classified test example of class " + std::to_string(target_class));
  }
  return *best;
}

// The `count` clean training examples of class `cls` closest to `target`
// (ties to the lower index), ascending.
std::vector<size_t> NearestBases(const Dataset& data, std::span<const double> target,
                                 size_t cls, size_t count) {
  std::vector<std::pair<double, size_t>> cand;
  for (size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] != cls || data.is_poison(i)) continue;
    double s = 0.0;
    const auto x = data.x(i);
    for (size_t k = 0; k < data.dim; ++k) s += (x[k] - target[k]) * (x[k] - target[k]);
    cand.emplace_back(s, i);
  }
  if (cand.size() < count) {
    Fail(ErrorCode::kInvalidInput, "attack.num_poisons exceeds the examples of class " +
                                       std::to_string(cls));
  }
  std::sort(cand.begin(), cand.end());
  std::vector<size_t> out;
  for (size_t p = 0; p < count; ++p) out.push_back(cand[p].second);
  std::sort(out.begin(), out.end());
  return out;
}

Json OptionalJson(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json OptionalJson(const std::optional<bool>& v) {
  return v ? Json(*v) : Json(nullptr);
}

size_t CountDropped(const TrainTrace& trace, bool poison) {
  size_t n = 0;
  for (const RoundReport& r : trace.rounds) n += poison ? r.dropped_poison : r.dropped_clean;
  return n;
}

Json BoundSeries(const BoundCheck& check) {
  Json s = MakeSeries({"t", "loss", "contraction", "additive", "bound", "checked", "holds"});
  for (const BoundPoint& p : check.points) {
    s["rows"].push_back({p.t, p.loss, p.contraction, p.additive, p.bound, p.checked, p.holds});
  }
  return s;
}

}  // namespace

SimConfig SimConfig::FromJson(const Json& json) {
  SimConfig c;
  ObjectReader root(json, "");
  root.ReadU64("seed", c.seed);
  root.Read("trials", c.trials);
  root.Read("run_undefended", c.run_undefended);

  if (const Json* d = root.Find("dataset")) {
    ObjectReader r(*d, "dataset");
    r.Read("num_classes", c.dataset.num_classes);
    r.Read("dim", c.dataset.dim);
    r.Read("per_class", c.dataset.per_class);
    r.Read("radius", c.dataset.radius);
    r.Read("stddev", c.dataset.stddev);
    r.Read("test_per_class", c.test_per_class);
    if (const Json* o = r.Find("outliers")) {
      const std::string path = r.PathOf("outliers");
      if (!o->is_array()) ConfigFail(path, "must be an array");
      for (size_t i = 0; i < o->size(); ++i) {
        ObjectReader e((*o)[i], path + "[" + std::to_string(i) + "]");
        PlantedExample p;
        const Json* x = e.Find("x");
        if (x == nullptr) ConfigFail(e.PathOf("x"), "is required");
        p.x = ReadVector(*x, e.PathOf("x"));
        if (e.Find("label") == nullptr) ConfigFail(e.PathOf("label"), "is required");
        e.Read("label", p.label);
        e.Finish();
        c.outliers.push_back(std::move(p));
      }
    }
    r.Finish();
  }

  if (const Json* m = root.Find("model")) {
    ObjectReader r(*m, "model");
    r.ReadEnum("arch", c.arch, ParseArchitecture);
    r.Read("hidden", c.hidden);
    r.Finish();
  }

  if (const Json* t = root.Find("training")) {
    ObjectReader r(*t, "training");
    r.Read("epochs", c.epochs);
    r.Read("lr", c.schedule.base);
    r.Read("decay_factor", c.schedule.decay_factor);
    if (const Json* d = r.Find("decay_epochs")) {
      const std::string path = r.PathOf("decay_epochs");
      if (!d->is_array()) ConfigFail(path, "must be an array of epochs");
      c.schedule.decay_epochs.clear();
      for (const Json& e : *d) {
        if (!e.is_number_unsigned()) ConfigFail(path, "must be an array of epochs");
        c.schedule.decay_epochs.push_back(e.get<size_t>());
      }
    }
    r.Read("batch_size", c.batch_size);
    r.Finish();
  }

  if (const Json* d = root.Find("defense")) {
    ObjectReader r(*d, "defense");
    r.Read("enabled", c.defense_enabled);
    r.Read("warmup", c.defense.warmup_epochs);
    r.Read("interval", c.defense.interval_epochs);
    r.Read("fraction", c.defense.medoid_fraction);
    r.ReadEnum("mode", c.defense.greedy_mode, ParseGreedyMode);
    r.ReadEnum("proxy", c.defense.proxy_mode, ParseProxyMode);
    r.Read("unit_norm", c.defense.unit_norm);
    r.Read("guard", c.defense.min_class_size_guard);
    r.Finish();
  }

  if (const Json* a = root.Find("attack")) {
    if (!a->is_null()) {
      ObjectReader r(*a, "attack");
      SimAttack attack;
      bool enabled = true;
      r.Read("enabled", enabled);
      r.ReadEnum("objective", attack.objective, ParseAttackObjective);
      r.Read("num_poisons", attack.num_poisons);
      r.Read("epsilon", attack.epsilon);
      r.Read("steps", attack.steps);
      r.Read("step_size", attack.step_size);
      r.Read("target_class", attack.target_class);
      r.Read("adv_class", attack.adv_class);
      r.Finish();
      if (enabled) c.attack = attack;
    }
  }

  if (const Json* t = root.Find("theorem")) {
    ObjectReader r(*t, "theorem");
    r.Read("enabled", c.theorem);
    r.Finish();
  }
  root.Finish();
  c.Validate();
  return c;
}

Json SimConfig::ToJson() const {
  Json outliers_json = Json::array();
  for (const PlantedExample& p : outliers) {
    outliers_json.push_back({{"x", p.x}, {"label", p.label}});
  }
  Json attack_json = nullptr;
  if (attack) {
    attack_json = {{"objective", AttackObjectiveName(attack->objective)},
                   {"num_poisons", attack->num_poisons},
                   {"epsilon", attack->epsilon},
                   {"steps", attack->steps},
                   {"step_size", attack->step_size},
                   {"target_class", attack->target_class},
                   {"adv_class", attack->adv_class}};
  }
  return {{"seed", seed},
          {"trials", trials},
          {"dataset",
           {{"num_classes", dataset.num_classes},
            {"dim", dataset.dim},
            {"per_class", dataset.per_class},
            {"radius", dataset.radius},
            {"stddev", dataset.stddev},
            {"test_per_class", test_per_class},
            {"outliers", outliers_json}}},
          {"model", {{"arch", ArchitectureName(arch)}, {"hidden", hidden}}},
          {"training",
           {{"epochs", epochs},
            {"lr", schedule.base},
            {"decay_epochs", schedule.decay_epochs},
            {"decay_factor", schedule.decay_factor},
            {"batch_size", batch_size}}},
          {"defense",
           {{"enabled", defense_enabled},
            {"warmup", defense.warmup_epochs},
            {"interval", defense.interval_epochs},
            {"fraction", defense.medoid_fraction},
            {"mode", GreedyModeName(defense.greedy_mode)},
            {"proxy", ProxyModeName(defense.proxy_mode)},
            {"unit_norm", defense.unit_norm},
            {"guard", defense.min_class_size_guard}}},
          {"attack", attack_json},
          {"run_undefended", run_undefended},
          {"theorem", {{"enabled", theorem}}}};
}

void SimConfig::Validate() const {
  if (trials < 1) ConfigFail("trials", "must be >= 1");
  if (dataset.num_classes < 2) ConfigFail("dataset.num_classes", "must be >= 2");
  if (dataset.dim < 1) ConfigFail("dataset.dim", "must be >= 1");
  if (dataset.per_class < 1) ConfigFail("dataset.per_class", "must be >= 1");
  if (test_per_class < 1) ConfigFail("dataset.test_per_class", "must be >= 1");
  if (!(dataset.stddev >= 0.0)) ConfigFail("dataset.stddev", "must be >= 0");
  for (size_t i = 0; i < outliers.size(); ++i) {
    const std::string path = "dataset.outliers[" + std::to_string(i) + "]";
    if (outliers[i].x.size() != dataset.dim) ConfigFail(path + ".x", "must have dataset.dim entries");
    if (outliers[i].label >= dataset.num_classes) ConfigFail(path + ".label", "is out of range");
  }
  if (arch == Architecture::kOneHidden && hidden < 1) ConfigFail("model.hidden", "must be >= 1");
  if (epochs < 1) ConfigFail("training.epochs", "must be >= 1");
  if (!(schedule.base > 0.0)) ConfigFail("training.lr", "must be > 0");
  try {
    schedule.Validate();
  } catch (const Error& e) {
    ConfigFail("training.decay_epochs", e.what());
  }
  if (defense_enabled) {
    if (defense.interval_epochs < 1) ConfigFail("defense.interval", "must be >= 1");
    if (!(defense.medoid_fraction > 0.0 && defense.medoid_fraction <= 1.0)) {
      ConfigFail("defense.fraction", "must be in (0, 1]");
    }
  }
  if (attack) {
    if (attack->num_poisons < 1) ConfigFail("attack.num_poisons", "must be >= 1");
    if (!(attack->epsilon >= 0.0)) ConfigFail("attack.epsilon", "must be >= 0");
    if (!(attack->step_size >= 0.0)) ConfigFail("attack.step_size", "must be >= 0");
    if (attack->target_class >= dataset.num_classes) ConfigFail("attack.target_class", "is out of range");
    if (attack->adv_class >= dataset.num_classes) ConfigFail("attack.adv_class", "is out of range");
    if (attack->adv_class == attack->target_class) {
      ConfigFail("attack.adv_class", "must differ from attack.target_class");
    }
  }
  if (theorem) {
    if (!defense_enabled) ConfigFail("theorem.enabled", "requires the defense");
    if (!schedule.decay_epochs.empty()) {
      ConfigFail("theorem.enabled", "requires a constant learning rate");
    }
    if (batch_size != 0) ConfigFail("theorem.enabled", "requires full-batch training");
  }
}

SimResult RunSimulation(const SimConfig& config) {
  config.Validate();
  const auto start = std::chrono::steady_clock::now();
  std::chrono::steady_clock::duration craft_time{};
  std::chrono::steady_clock::duration train_time{};

  VictimConfig plain;
  plain.arch = config.arch;
  plain.hidden = config.hidden;
  plain.schedule = config.schedule;
  plain.batch = config.batch_size == 0 ? BatchMode::Full()
                                       : BatchMode::Minibatch(config.batch_size, 0);
  plain.epochs = config.epochs;

  BlobsSpec test_spec = config.dataset;
  test_spec.per_class = config.test_per_class;

  SimResult result;
  Json trials_json = Json::array();
  Json series = Json::object();
  Json trial_series = MakeSeries({"trial", "seed", "defended_success", "undefended_success",
                                  "defended_accuracy", "undefended_accuracy",
                                  "dropped_clean", "dropped_poison"});
  Json primary_json = nullptr;
  Json undefended_json = nullptr;
  Json cosine_json = nullptr;
  Json theorem_json = nullptr;

  for (size_t t = 0; t < config.trials; ++t) {
    const uint64_t ts = DeriveSeed(config.seed, t);
    TrialOutcome outcome;
    outcome.seed = ts;

    Dataset data = MakeBlobs(config.dataset, DeriveSeed(ts, kTrainDataStream));
    for (const PlantedExample& p : config.outliers) data.Append(p.x, p.label, true);
    const Dataset test = MakeBlobs(test_spec, DeriveSeed(ts, kTestDataStream));

    std::vector<double> target_x;
    if (config.attack) {
      const SimAttack& a = *config.attack;
      const auto t0 = std::chrono::steady_clock::now();
      const VictimRun surrogate = TrainVictim(data, plain, DeriveSeed(ts, kSurrogateStream));
      const size_t target = PickTarget(surrogate.model, test, a.target_class);
      const auto tx = test.x(target);
      target_x.assign(tx.begin(), tx.end());
      AttackSpec spec;
      spec.base_indices = NearestBases(data, target_x, a.adv_class, a.num_poisons);
      spec.target_x = target_x;
      spec.adv_label = a.adv_class;
      spec.epsilon = a.epsilon;
      spec.steps = a.steps;
      spec.step_size = a.step_size;
      spec.objective = a.objective;
      const AttackResult crafted = Craft(spec, surrogate.model, data);
      data = ApplyPoisons(data, spec.base_indices, crafted.perturbations);
      outcome.target_index = target;
      outcome.poison_indices = spec.base_indices;
      outcome.initial_alignment = crafted.initial_alignment;
      outcome.final_alignment = crafted.final_alignment;
      craft_time += std::chrono::steady_clock::now() - t0;
    }

    const uint64_t victim_seed = DeriveSeed(ts, kVictimStream);
    const bool first = t == 0;
    const auto t1 = std::chrono::steady_clock::now();

    // Cosine alignment of the poisons' last-layer gradients, recorded on the
    // first trial only.
    std::vector<ProxyMatrix> poison_proxies;
    std::vector<std::vector<double>> target_proxies;
    EpochObserver observer;
    if (first && config.attack) {
      observer = [&](size_t, const ToyModel& model, const DatasetState&) {
        poison_proxies.push_back(ExtractProxies(model, data, outcome.poison_indices,
                                                ProxyMode::kLastLayerFull));
        const ForwardResult f = Forward(model, target_x);
        target_proxies.push_back(
            LastLayerFullProxy(f.embedding, f.logits, config.attack->adv_class));
      };
    }

    VictimConfig defended = plain;
    std::optional<VictimRun> defended_run;
    if (config.defense_enabled) {
      defended.defense = config.defense;
      defended.defense->seed = DeriveSeed(ts, kDefenseStream);
      defended.instrument = first && config.theorem;
      defended_run = TrainVictim(data, defended, victim_seed, observer);
    }
    std::optional<VictimRun> undefended_run;
    if (!config.defense_enabled || config.run_undefended) {
      undefended_run = TrainVictim(data, plain, victim_seed,
                                   config.defense_enabled ? EpochObserver{} : observer);
    }
    train_time += std::chrono::steady_clock::now() - t1;

    if (defended_run) {
      outcome.defended_accuracy = EvaluateModel(defended_run->model, test).accuracy;
      outcome.dropped_clean = CountDropped(defended_run->trace, false);
      outcome.dropped_poison = CountDropped(defended_run->trace, true);
      if (config.attack) {
        outcome.defended_success =
            Predict(defended_run->model, target_x) == config.attack->adv_class;
      }
    }
    if (undefended_run) {
      outcome.undefended_accuracy = EvaluateModel(undefended_run->model, test).accuracy;
      if (config.attack) {
        outcome.undefended_success =
            Predict(undefended_run->model, target_x) == config.attack->adv_class;
      }
    }

    if (first) {
      const TrainTrace& primary = defended_run ? defended_run->trace : undefended_run->trace;
      primary_json = ToJson(primary, data);
      AddTraceSeries(series, primary, data);
      if (defended_run && undefended_run) {
        undefended_json = ToJson(undefended_run->trace, data);
        AddTraceSeries(series, undefended_run->trace, data, "undefended_");
      }
      if (config.attack) {
        const std::vector<uint8_t> mask(outcome.poison_indices.size(), 1);
        const std::vector<CosinePoint> cos =
            CosineAlignmentTrace(poison_proxies, mask, target_proxies);
        Json s = MakeSeries({"epoch", "poison_poison", "poison_target"});
        cosine_json = Json::array();
        for (size_t e = 0; e < cos.size(); ++e) {
          s["rows"].push_back({e, OptionalJson(cos[e].poison_poison),
                               OptionalJson(cos[e].poison_target)});
          cosine_json.push_back({{"epoch", e},
                                 {"poison_poison", OptionalJson(cos[e].poison_poison)},
                                 {"poison_target", OptionalJson(cos[e].poison_target)},
                                 {"skipped", cos[e].skipped}});
        }
        series["cosine"] = s;
      }
      if (config.theorem) {
        const double eta = config.schedule.base;
        const size_t first_checked = config.defense.warmup_epochs;
        const TheoremReport epic = CheckTrace(defended_run->trace, eta, first_checked);

        VictimConfig random_config = plain;
        ToyModel model = InitVictim(random_config, data, victim_seed);
        DatasetState state(data);
        TrainOptions options;
        options.schedule = config.schedule;
        options.instrument = true;
        const TrainTrace random_trace =
            RunRandomDrops(model, state, DropSchedule(defended_run->trace), options,
                           config.epochs, DeriveSeed(ts, kRandomDropStream));
        const TheoremReport random = CheckTrace(random_trace, eta, first_checked);
        theorem_json = {{"eta", eta},
                        {"first_checked", first_checked},
                        {"epic", epic::ToJson(epic)},
                        {"random_drops", epic::ToJson(random)}};
        series["theorem_bound"] = BoundSeries(epic.bound);
        result.theorem_epic = epic;
        result.theorem_random = random;
      }
    }

    trial_series["rows"].push_back({t, ts, OptionalJson(outcome.defended_success),
                                    OptionalJson(outcome.undefended_success),
                                    OptionalJson(outcome.defended_accuracy),
                                    OptionalJson(outcome.undefended_accuracy),
                                    outcome.dropped_clean, outcome.dropped_poison});
    Json tj = {{"trial", t}, {"seed", ts}};
    if (config.attack) {
      tj["target_index"] = *outcome.target_index;
      tj["target_x"] = target_x;
      tj["poisons"] = outcome.poison_indices;
      tj["alignment"] = {{"initial", outcome.initial_alignment},
                         {"final", outcome.final_alignment}};
    }
    if (defended_run) {
      tj["defended"] = {{"success", OptionalJson(outcome.defended_success)},
                        {"accuracy", *outcome.defended_accuracy},
                        {"dropped_clean", outcome.dropped_clean},
                        {"dropped_poison", outcome.dropped_poison}};
    }
    if (undefended_run) {
      tj["undefended"] = {{"success", OptionalJson(outcome.undefended_success)},
                          {"accuracy", *outcome.undefended_accuracy}};
    }
    trials_json.push_back(std::move(tj));
    result.trials.push_back(std::move(outcome));
  }
  series["trials"] = trial_series;

  auto mean = [&](auto field) -> std::optional<double> {
    double sum = 0.0;
    size_t n = 0;
    for (const TrialOutcome& o : result.trials) {
      if (const auto v = field(o)) {
        sum += static_cast<double>(*v);
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  result.defended_rate = mean([](const TrialOutcome& o) { return o.defended_success; });
  result.undefended_rate = mean([](const TrialOutcome& o) { return o.undefended_success; });
  result.defended_accuracy = mean([](const TrialOutcome& o) { return o.defended_accuracy; });
  result.undefended_accuracy =
      mean([](const TrialOutcome& o) { return o.undefended_accuracy; });

  Json report = {{"schema_version", kReportSchemaVersion},
                 {"command", "defend-sim"},
                 {"config", config.ToJson()},
                 {"summary",
                  {{"defended_success_rate", OptionalJson(result.defended_rate)},
                   {"undefended_success_rate", OptionalJson(result.undefended_rate)},
                   {"defended_accuracy", OptionalJson(result.defended_accuracy)},
                   {"undefended_accuracy", OptionalJson(result.undefended_accuracy)}}},
                 {"trials", trials_json},
                 {"trace", primary_json},
                 {"undefended_trace", undefended_json},
                 {"cosine", cosine_json},
                 {"theorem", theorem_json},
                 {"series", series}};
  report["timings"] = {{"craft_ms", Millis(craft_time)},
                       {"train_ms", Millis(train_time)},
                       {"total_ms", Millis(std::chrono::steady_clock::now() - start)}};
  result.report = std::move(report);
  return result;
}

SelectResult RunSelect(const GradDump& dump, const Labels& labels, double fraction,
                       GreedyMode mode, uint64_t seed, size_t guard) {
  const auto start = std::chrono::steady_clock::now();
  const ProxyMatrix& proxies = dump.proxies;
  if (labels.classes.size() != proxies.rows()) {
    Fail(ErrorCode::kInvalidInput,
         "labels cover " + std::to_string(labels.classes.size()) + " rows but the dump has " +
             std::to_string(proxies.rows()));
  }

  Dataset data;
  data.num_classes = std::max<size_t>(2, labels.num_classes);
  data.dim = proxies.cols();
  data.features.assign(proxies.values().begin(), proxies.values().end());
  data.labels = labels.classes;
  data.poison = labels.poison;
  DatasetState state(std::move(data));

  DefenseConfig config;
  config.medoid_fraction = fraction;
  config.greedy_mode = mode;
  config.seed = seed;
  config.min_class_size_guard = guard;
  config.warmup_epochs = 0;

  SelectResult out;
  out.round = EliminationRound(state, proxies, config, 0);
  std::erase_if(out.round.classes, [](const ClassRound& c) { return c.size == 0; });

  std::ostringstream text;
  for (const ClassRound& c : out.round.classes) {
    text << "class " << c.cls << ": size " << c.size << ", k " << c.budget;
    if (c.skipped) {
      text << ", skipped\n";
      continue;
    }
    text << "\n  medoids:";
    for (size_t m = 0; m < c.medoids.size(); ++m) {
      text << ' ' << c.medoids[m] << " (gamma " << c.gamma[m] << ")";
    }
    text << "\n  drop:";
    if (c.dropped.empty()) text << " none";
    for (size_t d : c.dropped) text << ' ' << d;
    text << '\n';
  }
  text << "would drop " << out.round.dropped.size() << " of " << proxies.rows() << '\n';
  out.listing = text.str();

  Json series = Json::object();
  if (!out.round.classes.empty()) {
    TrainTrace trace;
    trace.rounds.push_back(out.round);
    AddTraceSeries(series, trace, state.data());
    series.erase("loss");
    series.erase("accuracy");
    series.erase("active_size");
  }
  out.report = {{"schema_version", kReportSchemaVersion},
                {"command", "select"},
                {"config",
                 {{"rows", proxies.rows()},
                  {"cols", proxies.cols()},
                  {"dtype", dump.dtype == DumpType::kFloat32 ? "float32" : "float64"},
                  {"fraction", fraction},
                  {"mode", GreedyModeName(mode)},
                  {"seed", seed},
                  {"guard", guard}}},
                {"round", ToJson(out.round, state.data())},
                {"series", series}};
  out.report["timings"] = {
      {"total_ms", Millis(std::chrono::steady_clock::now() - start)}};
  return out;
}

}  // namespace epic
