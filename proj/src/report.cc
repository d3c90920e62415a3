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

#include "epic/report.h"

#include "epic/error.h"

namespace epic {
namespace {

std::string CsvField(const Json& value) {
  if (value.is_null()) return "";
  std::string text = value.is_string() ? value.get<std::string>() : value.dump();
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

}  // namespace

Json ToJson(const ClusterHistogram& histogram) {
  Json out = Json::array();
  for (const auto& [size, bucket] : histogram) {
    out.push_back({{"size", size},
                   {"clusters", bucket.clusters},
                   {"clean", bucket.clean},
                   {"poison", bucket.poison},
                   {"unknown", bucket.unknown}});
  }
  return out;
}

Json ToJson(const RoundReport& report, const Dataset& data) {
  Json classes = Json::array();
  for (const ClassRound& cr : report.classes) {
    classes.push_back({{"class", cr.cls},
                       {"size", cr.size},
                       {"budget", cr.budget},
                       {"skipped", cr.skipped},
                       {"c0", cr.c0},
                       {"medoids", cr.medoids},
                       {"gamma", cr.gamma},
                       {"dropped", cr.dropped}});
  }
  Json out = {{"epoch", report.epoch},
              {"classes", classes},
              {"dropped", report.dropped},
              {"has_mask", report.has_mask}};
  if (report.has_mask) {
    out["dropped_clean"] = report.dropped_clean;
    out["dropped_poison"] = report.dropped_poison;
  }
  if (!report.classes.empty()) {
    out["histogram"] = ToJson(BuildClusterHistogram(report, data));
  }
  return out;
}

Json ToJson(const TrainTrace& trace, const Dataset& data) {
  Json epochs = Json::array();
  for (const EpochRecord& e : trace.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"lr", e.lr},
                      {"active", e.active},
                      {"loss", e.loss},
                      {"accuracy", e.accuracy}});
  }
  Json rounds = Json::array();
  Json ledger = Json::array();
  for (const RoundReport& r : trace.rounds) {
    rounds.push_back(ToJson(r, data));
    for (const DropRecord& d : DropRecords(r)) {
      ledger.push_back({{"index", d.index},
                        {"epoch", d.epoch},
                        {"class", d.cls},
                        {"medoid_rank", d.medoid_rank},
                        {"poison", data.is_poison(d.index)}});
    }
  }
  return {{"epochs", epochs}, {"rounds", rounds}, {"drop_ledger", ledger}};
}

Json ToJson(const TheoremReport& report) {
  Json out;
  out["pl"] = {{"certified", report.pl.certified},
               {"mu", report.pl.certificate.mu},
               {"method", report.pl.certificate.method == PlMethod::kAnalytic
                              ? "analytic"
                              : "empirical"},
               {"points_checked", report.pl.certificate.points_checked},
               {"min_loss", report.pl.certificate.min_loss},
               {"max_loss", report.pl.certificate.max_loss}};
  if (report.pl.violation) out["pl"]["violation"] = *report.pl.violation;
  out["rho"] = report.drop.rho;
  out["grad_max"] = report.drop.grad_max;
  out["checked"] = report.bound.checked;
  out["satisfied"] = report.bound.satisfied;
  out["fraction"] = report.bound.fraction();
  return out;
}

Json MakeSeries(std::vector<std::string> columns) {
  return {{"columns", columns}, {"rows", Json::array()}};
}

void AddTraceSeries(Json& series, const TrainTrace& trace, const Dataset& data,
                    std::string_view prefix) {
  const std::string p(prefix);
  Json loss = MakeSeries({"epoch", "loss"});
  Json accuracy = MakeSeries({"epoch", "accuracy"});
  Json active = MakeSeries({"epoch", "active"});
  for (const EpochRecord& e : trace.epochs) {
    loss["rows"].push_back({e.epoch, e.loss});
    accuracy["rows"].push_back({e.epoch, e.accuracy});
    active["rows"].push_back({e.epoch, e.active});
  }
  series[p + "loss"] = loss;
  series[p + "accuracy"] = accuracy;
  series[p + "active_size"] = active;
  if (trace.rounds.empty()) return;
  Json drops = MakeSeries({"index", "epoch", "class", "medoid_rank", "poison"});
  for (size_t r = 0; r < trace.rounds.size(); ++r) {
    for (const DropRecord& d : DropRecords(trace.rounds[r])) {
      drops["rows"].push_back(
          {d.index, d.epoch, d.cls, d.medoid_rank, data.is_poison(d.index) ? 1 : 0});
    }
    const bool masked = data.has_poison_mask();
    Json hist = masked ? MakeSeries({"size", "clean", "poison"})
                       : MakeSeries({"size", "unknown"});
    for (const auto& [size, bucket] : BuildClusterHistogram(trace.rounds[r], data)) {
      if (masked) {
        hist["rows"].push_back({size, bucket.clean, bucket.poison});
      } else {
        hist["rows"].push_back({size, bucket.unknown});
      }
    }
    series[p + "cluster_hist_round_" + std::to_string(r + 1)] = hist;
  }
  series[p + "drops"] = drops;
}

std::string StableDump(const Json& report) {
  Json copy = report;
  copy.erase("timings");
  return copy.dump(2);
}

std::vector<std::string> SeriesNames(const Json& report) {
  std::vector<std::string> names;
  if (!report.contains("series")) return names;
  for (const auto& [name, value] : report["series"].items()) names.push_back(name);
  return names;
}

std::string ExportCsv(const Json& report, std::string_view series) {
  const std::string name(series);
  if (!report.contains("series") || !report["series"].contains(name)) {
    std::string available;
    for (const std::string& s : SeriesNames(report)) {
      available += available.empty() ? s : ", " + s;
    }
    Fail(ErrorCode::kInvalidInput,
         "unknown series '" + name + "'; available: " + available);
  }
  const Json& s = report["series"][name];
  std::string out;
  bool first = true;
  for (const Json& column : s["columns"]) {
    if (!first) out += ',';
    out += CsvField(column);
    first = false;
  }
  out += "\r\n";
  for (const Json& row : s["rows"]) {
    first = true;
    for (const Json& cell : row) {
      if (!first) out += ',';
      out += CsvField(cell);
      first = false;
    }
    out += "\r\n";
  }
  return out;
}

std::vector<std::vector<std::string>> ParseCsv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool pending = false;  // something has been read for the current row
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      pending = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      pending = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      pending = false;
    } else {
      field += c;
      pending = true;
    }
  }
  if (quoted) Fail(ErrorCode::kInvalidInput, "unterminated quoted CSV field");
  if (pending) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace epic
