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


// epic: medoid selection over gradient dumps, defended training
// simulations, and CSV export of report series.
//
//   epic select --input grads.epgd --labels labels.txt --fraction 0.1
//   epic defend-sim --config sim.json --out report.json
//   epic export --input report.json --series loss
//
// Exit status: 0 on success, 1 on a runtime failure, 2 on bad usage or
// malformed input.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "epic/error.h"
#include "epic/grad_dump.h"
#include "epic/report.h"
#include "epic/sim.h"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError {
  std::string message;
};

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError{"cannot open " + path};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw epic::Error(epic::ErrorCode::kInvalidInput, "cannot write " + path);
}

epic::Json ParseJsonFile(const std::string& path) {
  const std::string text = ReadText(path);
  try {
    return epic::Json::parse(text);
  } catch (const epic::Json::parse_error& e) {
    throw UsageError{path + ": invalid JSON at byte offset " + std::to_string(e.byte) +
                     ": " + e.what()};
  }
}

std::string ReportText(const epic::Json& report) { return report.dump(2) + "\n"; }

struct SelectArgs {
  std::string input;
  std::string labels;
  double fraction = 0.1;
  std::string mode = "lazy";
  uint64_t seed = 0;
  size_t guard = 0;
  std::string out;
};

int RunSelectCommand(const SelectArgs& args) {
  epic::GradDump dump;
  try {
    dump = epic::ReadGradDump(args.input);
  } catch (const epic::FormatError& e) {
    throw UsageError{args.input + ": " + e.what() + " (byte offset " +
                     std::to_string(e.position()) + ")"};
  }
  epic::Labels labels;
  try {
    labels = epic::ReadLabels(args.labels, dump.proxies.rows());
  } catch (const epic::FormatError& e) {
    throw UsageError{args.labels + ":" + std::to_string(e.position()) + ": " + e.what()};
  }
  const epic::GreedyMode mode = epic::ParseGreedyMode(args.mode);
  const epic::SelectResult result =
      epic::RunSelect(dump, labels, args.fraction, mode, args.seed, args.guard);
  std::cout << result.listing;
  if (!args.out.empty()) WriteText(args.out, ReportText(result.report));
  return 0;
}

int RunDefendSimCommand(const std::string& config_path, const std::string& out) {
  const epic::Json json = ParseJsonFile(config_path);
  const epic::SimConfig config = epic::SimConfig::FromJson(json);
  const epic::SimResult result = epic::RunSimulation(config);
  const std::string text = ReportText(result.report);
  if (out.empty()) {
    std::cout << text;
    return 0;
  }
  WriteText(out, text);
  auto rate = [](const std::optional<double>& v) {
    return v ? std::to_string(*v) : std::string("n/a");
  };
  std::cout << "trials " << config.trials << ", attack success defended "
            << rate(result.defended_rate) << ", undefended " << rate(result.undefended_rate)
            << "\n";
  std::cout << "test accuracy defended " << rate(result.defended_accuracy) << ", undefended "
            << rate(result.undefended_accuracy) << "\n";
  return 0;
}

int RunExportCommand(const std::string& input, const std::string& series) {
  const epic::Json report = ParseJsonFile(input);
  std::cout << epic::ExportCsv(report, series);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-space medoid defense against targeted data poisoning"};
  app.require_subcommand(1);

  SelectArgs select_args;
  CLI::App* select = app.add_subcommand("select", "One elimination round over a gradient dump");
  select->add_option("--input", select_args.input, "Gradient dump (EPGD)")->required();
  select->add_option("--labels", select_args.labels, "Labels file (<index>,<class>[,poison])")
      ->required();
  select->add_option("--fraction", select_args.fraction, "Medoids per class as a fraction")
      ->capture_default_str();
  select->add_option("--mode", select_args.mode, "Greedy mode: naive, lazy or stochastic")
      ->capture_default_str();
  select->add_option("--seed", select_args.seed, "Seed for stochastic greedy")
      ->capture_default_str();
  select->add_option("--guard", select_args.guard,
                     "Leave classes with at most this many rows untouched")
      ->capture_default_str();
  select->add_option("--out", select_args.out, "Write the JSON report here");

  std::string config_path;
  std::string sim_out;
  CLI::App* sim = app.add_subcommand("defend-sim", "Run a defended training simulation");
  sim->add_option("--config", config_path, "JSON simulation config")->required();
  sim->add_option("--out", sim_out, "Write the JSON report here (default: stdout)");

  std::string export_input;
  std::string series;
  CLI::App* exp = app.add_subcommand("export", "Print one report series as CSV");
  exp->add_option("--input", export_input, "JSON report")->required();
  exp->add_option("--series", series, "Series name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*select) return RunSelectCommand(select_args);
    if (*sim) return RunDefendSimCommand(config_path, sim_out);
    if (*exp) return RunExportCommand(export_input, series);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.message << "\n";
    return kExitUsage;
  } catch (const epic::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == epic::ErrorCode::kInvalidInput ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
