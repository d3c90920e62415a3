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

#ifndef EPIC_REPORT_H_
#define EPIC_REPORT_H_

// JSON run reports and CSV export of their plot-ready series.
//
// A report is an object with "schema_version", "command", "config", the
// command-specific results, a "series" object and a "timings" object.
// Every series is {"columns": [...], "rows": [[...], ...]}. Everything
// except "timings" is a pure function of the config and seed.

#include <string>
#include <string_view>
#include <vector>

#include "epic/dataset.h"
#include "epic/defense.h"
#include "epic/theory.h"
#include "epic/trace.h"
#include "json.hpp"

namespace epic {

inline constexpr int kReportSchemaVersion = 1;

using Json = nlohmann::json;

Json ToJson(const RoundReport& report, const Dataset& data);
Json ToJson(const ClusterHistogram& histogram);
Json ToJson(const TrainTrace& trace, const Dataset& data);
Json ToJson(const TheoremReport& report);

// {"columns": columns, "rows": []}
Json MakeSeries(std::vector<std::string> columns);

// Adds the per-trace series ("loss", "accuracy", "active_size", "drops",
// "cluster_hist_round_<r>") under the given prefix.
void AddTraceSeries(Json& series, const TrainTrace& trace, const Dataset& data,
                    std::string_view prefix = "");

// Serialized report without the timings section, for reproducibility checks.
std::string StableDump(const Json& report);

std::vector<std::string> SeriesNames(const Json& report);

// CSV for one series: header line, then one line per row. Numbers use the
// JSON spelling, null is an empty field, strings are quoted when needed.
// Throws InvalidInput for an unknown series.
std::string ExportCsv(const Json& report, std::string_view series);

// RFC 4180 parser used to read exported series back.
std::vector<std::vector<std::string>> ParseCsv(std::string_view text);

}  // namespace epic

#endif  // EPIC_REPORT_H_
