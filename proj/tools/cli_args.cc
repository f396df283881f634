// Copyright 2026 The SnailTrail Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli_args.h"


#include "CLI11.hpp"

namespace snailtrail::cli {

namespace {

void AddThresholds(CLI::App* sub, Thresholds& t, bool with_progress) {
  sub->add_option("--epoch-max", t.epoch_max_ms, "Alert when an epoch spans more than MS milliseconds")
      ->check(CLI::PositiveNumber);
  sub->add_option("--message-max", t.message_max_ms, "Alert on messages slower than MS milliseconds")
      ->check(CLI::PositiveNumber);
  sub->add_option("--operator-max", t.operator_max_ms, "Alert on operator activations longer than MS milliseconds")
      ->check(CLI::PositiveNumber);
  if (with_progress) {
    sub->add_option("--progress-max", t.progress_max_ms,
                    "Alert when a worker goes MS milliseconds without progress traffic")
        ->check(CLI::PositiveNumber);
  }
}

ParseResult Usage(const std::string& text) {
  ParseResult r;
  r.status = ParseStatus::kExit;
  r.exit_code = kExitUsage;
  r.output = text.back() == '\n' ? text : text + "\n";
  return r;
}

}  // namespace

ParseResult ParseArgs(const std::vector<std::string>& argv) {
  ParseResult result;
  RunConfig& c = result.config;

  CLI::App app{"SnailTrail: online critical path profiler for dataflow traces", "snailtrail"};
  app.fallthrough();
  app.require_subcommand(1);

  app.add_option("--from-file", c.from_file, "Replay trace files (worker_<w>_writer_<i>.st2) from DIR");
  app.add_option("--interface", c.interface, "Listen for live trace streams on ADDR");
  app.add_option("--port", c.port, "TCP port for --interface, or of the profiler for simulate --connect");
  app.add_option("--source-peers", c.source_peers, "Number of trace streams (workers x lbf)")
      ->check(CLI::PositiveNumber);
  app.add_option("--snailtrail-workers", c.profiler_workers, "Profiler worker threads (default 1)")
      ->check(CLI::PositiveNumber);

  CLI::App* metrics = app.add_subcommand("metrics", "Write per-epoch activity aggregates as CSV");
  metrics->add_option("--out", c.out_path, "Output CSV path")->required();

  CLI::App* invariants = app.add_subcommand("invariants", "Print an alert line for every invariant violation");
  AddThresholds(invariants, c.thresholds, true);

  CLI::App* algo = app.add_subcommand("algo", "Print k-hop weights backwards from waiting activities");
  algo->add_option("--k", c.k, "Traversal depth (default 10)")->check(CLI::PositiveNumber);

  CLI::App* dashboard = app.add_subcommand("dashboard", "Serve PAGs, metrics and alerts over WebSocket");
  AddThresholds(dashboard, c.thresholds, false);
  dashboard->add_option("--bind", c.bind, "WebSocket listen address (default 127.0.0.1)");
  dashboard->add_option("--ws-port", c.ws_port, "WebSocket port (default 3012, 0 picks one)");
  dashboard->add_option("--retention", c.retention, "Epochs kept for queries (default 1000)")
      ->check(CLI::PositiveNumber);

  app.add_subcommand("inspect", "Print per-epoch event and edge counts with build times");

  CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic trace");
  simulate->add_option("--config", c.sim_config, "Simulator JSON configuration")->required();
  simulate->add_option("--lbf", c.lbf, "Writers per simulated worker (default 1)")->check(CLI::PositiveNumber);
  CLI::Option* out_dir = simulate->add_option("--out-dir", c.out_dir, "Write trace files into DIR");
  CLI::Option* connect = simulate->add_flag("--connect", c.connect,
                                            "Stream to a profiler at --interface/--port or SNAILTRAIL_ADDR");
  out_dir->excludes(connect);

  std::vector<const char*> raw;
  raw.reserve(argv.size());
  for (const std::string& a : argv) raw.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::CallForHelp&) {
    result.status = ParseStatus::kExit;
    result.exit_code = kExitOk;
    result.output = app.help();
    return result;
  } catch (const CLI::ParseError& e) {
    return Usage(std::string(e.what()) + "\n\n" + app.help());
  }

  if (metrics->parsed()) c.command = Command::kMetrics;
  if (invariants->parsed()) c.command = Command::kInvariants;
  if (algo->parsed()) c.command = Command::kAlgo;
  if (dashboard->parsed()) c.command = Command::kDashboard;
  if (simulate->parsed()) c.command = Command::kSimulate;
  if (!metrics->parsed() && !invariants->parsed() && !algo->parsed() && !dashboard->parsed() &&
      !simulate->parsed()) {
    c.command = Command::kInspect;
  }

  if (c.from_file && c.interface) return Usage("--from-file and --interface are mutually exclusive");
  if (c.command == Command::kSimulate) {
    if (c.from_file) return Usage("simulate does not read traces; drop --from-file");
    if (!c.out_dir && !c.connect) return Usage("simulate needs --out-dir DIR or --connect");
    if (c.out_dir && (c.interface || c.port)) return Usage("--interface/--port only apply to simulate --connect");
    if (c.interface.has_value() != c.port.has_value()) return Usage("--interface and --port go together");
    return result;
  }
  if (!c.from_file && !c.interface) return Usage("one of --from-file DIR or --interface ADDR is required");
  if (c.interface && !c.port) return Usage("--interface needs --port");
  if (c.from_file && c.port) return Usage("--port only applies to --interface");
  if (c.interface && !c.source_peers) return Usage("--interface needs --source-peers");
  return result;
}

}  // namespace snailtrail::cli
