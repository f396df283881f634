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

// snailtrail command line tool, built on the C API.

#include <csignal>
#include <cstdio>
#include <string>
#include <type_traits>
#include <vector>

#include "cli_args.h"
#include "snailtrail/snailtrail.h"

namespace {

using snailtrail::cli::Command;
using snailtrail::cli::RunConfig;

static_assert(std::is_same_v<std::sig_atomic_t, int>);
volatile std::sig_atomic_t g_stop = 0;

extern "C" void OnSignal(int) { g_stop = 1; }

void PrintLine(const char* line, void*) {
  std::fputs(line, stdout);
  std::fputc('\n', stdout);
  std::fflush(stdout);
}

void PrintReady(uint16_t port, void* user) {
  const auto* c = static_cast<const RunConfig*>(user);
  std::fprintf(stderr, "dashboard: ws://%s:%u (Ctrl-C to stop)\n", c->bind.c_str(), port);
}

int Report(st_status s) {
  if (s == ST_OK) return snailtrail::cli::kExitOk;
  std::fprintf(stderr, "snailtrail: %s: %s\n", st_status_name(s), st_last_error());
  return snailtrail::cli::kExitRuntime;
}

st_invariant_config Thresholds(const RunConfig& c) {
  st_invariant_config t{};
  t.epoch_max_ms = c.thresholds.epoch_max_ms.value_or(0);
  t.message_max_ms = c.thresholds.message_max_ms.value_or(0);
  t.operator_max_ms = c.thresholds.operator_max_ms.value_or(0);
  t.progress_max_ms = c.thresholds.progress_max_ms.value_or(0);
  return t;
}

int Simulate(const RunConfig& c) {
  st_sim_config* cfg = nullptr;
  st_status s = st_sim_config_load(c.sim_config.c_str(), &cfg);
  if (s != ST_OK) return Report(s);
  if (c.out_dir) {
    s = st_simulate_to_dir(cfg, c.lbf, c.out_dir->c_str());
  } else {
    std::string address;
    if (c.interface) address = *c.interface + ":" + std::to_string(*c.port);
    s = st_simulate_to_socket(cfg, c.lbf, c.interface ? address.c_str() : nullptr);
  }
  st_sim_config_free(cfg);
  return Report(s);
}

int Analyze(RunConfig& c) {
  st_profiler_options opts{};
  opts.source_peers = c.source_peers.value_or(0);
  opts.workers = c.profiler_workers;
  opts.max_epochs_in_flight = 1;

  st_profiler* p = nullptr;
  st_status s = c.from_file ? st_profiler_open_dir(c.from_file->c_str(), &opts, &p)
                            : st_profiler_listen(c.interface->c_str(), *c.port, &opts, &p);
  if (s != ST_OK) return Report(s);
  if (c.interface) {
    std::fprintf(stderr, "snailtrail: waiting for %u streams on %s:%u\n", opts.source_peers, c.interface->c_str(),
                 st_profiler_port(p));
  }

  const st_invariant_config t = Thresholds(c);
  switch (c.command) {
    case Command::kMetrics:
      s = st_profiler_run_metrics(p, c.out_path.c_str());
      break;
    case Command::kInvariants:
      s = st_profiler_run_invariants(p, &t, PrintLine, nullptr);
      break;
    case Command::kAlgo:
      s = st_profiler_run_algo(p, c.k, PrintLine, nullptr);
      break;
    case Command::kInspect:
      s = st_profiler_run_inspect(p, PrintLine, nullptr);
      break;
    case Command::kDashboard:
      std::signal(SIGINT, OnSignal);
      std::signal(SIGTERM, OnSignal);
      s = st_profiler_run_dashboard(p, &t, c.bind.c_str(), c.ws_port, c.retention, PrintReady, PrintLine,
                                    &g_stop, &c);
      break;
    case Command::kSimulate:
      break;
  }
  for (uint32_t i = 0; i < st_profiler_diagnostic_count(p); ++i) {
    std::fprintf(stderr, "snailtrail: warning: %s\n", st_profiler_diagnostic(p, i));
  }
  st_profiler_free(p);
  return Report(s);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  snailtrail::cli::ParseResult parsed = snailtrail::cli::ParseArgs(args);
  if (parsed.status == snailtrail::cli::ParseStatus::kExit) {
    std::fputs(parsed.output.c_str(), parsed.exit_code == 0 ? stdout : stderr);
    return parsed.exit_code;
  }
  RunConfig& c = parsed.config;
  if (c.command == Command::kSimulate) return Simulate(c);
  return Analyze(c);
}
