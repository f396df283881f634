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

// Command line of the snailtrail tool.

#ifndef SNAILTRAIL_TOOLS_CLI_ARGS_H_
#define SNAILTRAIL_TOOLS_CLI_ARGS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace snailtrail::cli {

enum class Command { kMetrics, kInvariants, kAlgo, kDashboard, kInspect, kSimulate };

// Milliseconds; unset rules are off.
struct Thresholds {
  std::optional<double> epoch_max_ms;
  std::optional<double> message_max_ms;
  std::optional<double> operator_max_ms;
  std::optional<double> progress_max_ms;
};

struct RunConfig {
  // Exactly one of from_file / interface for analysis commands.
  std::optional<std::string> from_file;
  std::optional<std::string> interface;
  std::optional<std::uint16_t> port;
  // Offline: optional, checked against the file count. Online: required.
  std::optional<std::uint32_t> source_peers;
  std::uint32_t profiler_workers = 1;

  Command command = Command::kInspect;
  std::string out_path;                    // metrics
  Thresholds thresholds;                   // invariants, dashboard
  std::uint32_t k = 10;                    // algo
  std::string bind = "127.0.0.1";          // dashboard
  std::uint16_t ws_port = 3012;            // dashboard
  std::uint32_t retention = 1000;          // dashboard
  std::string sim_config;                  // simulate
  std::uint32_t lbf = 1;                   // simulate
  std::optional<std::string> out_dir;      // simulate
  bool connect = false;                    // simulate
};

enum class ParseStatus { kRun, kExit };

struct ParseResult {
  ParseStatus status = ParseStatus::kRun;
  int exit_code = 0;  // meaningful for kExit
  std::string output;  // help or usage error text
  RunConfig config;
};

// Never throws. --help yields kExit/0; usage errors yield kExit/2.
ParseResult ParseArgs(const std::vector<std::string>& argv);

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

}  // namespace snailtrail::cli

#endif  // SNAILTRAIL_TOOLS_CLI_ARGS_H_
