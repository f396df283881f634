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

// Analyses attached to the profiler pipeline, one per CLI command.

#ifndef SNAILTRAIL_SRC_COMMANDS_H_
#define SNAILTRAIL_SRC_COMMANDS_H_

#include <atomic>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>

#include "analytics.h"
#include "dashboard.h"
#include "pipeline.h"

namespace snailtrail {

using LineFn = std::function<void(const std::string&)>;

// Writes CSV rows as each epoch closes. Returns the number of epochs.
std::uint64_t RunMetrics(Profiler& profiler, std::ostream& csv);

// One FormatViolation line per violation, in epoch order.
std::uint64_t RunInvariants(Profiler& profiler, const InvariantConfig& cfg, const LineFn& line);

// "epoch=<e> hop=<h> type=<t> count=<c> weight_ns=<w>" per (hop, type).
std::uint64_t RunAlgo(Profiler& profiler, std::uint32_t k, const LineFn& line);

// "epoch=<e> events=<n> records=<n> edges=<n> local=<n> data=<n>
//  control=<n> build_ms=<t>" per epoch, then "epochs=<n>".
std::uint64_t RunInspect(Profiler& profiler, const LineFn& line);

// Everything the dashboard shows for one epoch.
EpochBundle AnalyzeEpoch(const EpochResult& r, const InvariantConfig& cfg, std::uint32_t k);

// Feeds every closed epoch into `buffer` and publishes its violations through
// `server`. Violation lines also go to `line`.
std::uint64_t RunDashboard(Profiler& profiler, const InvariantConfig& cfg, EpochBuffer& buffer,
                           DashboardServer& server, std::uint32_t k, const LineFn& line);

inline constexpr std::uint32_t kDefaultHops = 10;

}  // namespace snailtrail

#endif  // SNAILTRAIL_SRC_COMMANDS_H_
