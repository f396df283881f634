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

// Per-epoch analyses over PAG edges: aggregate metrics, invariants and the
// backward k-hops pattern.

#ifndef SNAILTRAIL_SRC_ANALYTICS_H_
#define SNAILTRAIL_SRC_ANALYTICS_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pag.h"
#include "trace_model.h"

namespace snailtrail {

struct MetricsRow {
  std::uint64_t epoch = 0;
  WorkerId from_worker = 0;
  WorkerId to_worker = 0;
  EdgeType activity_type = EdgeType::kBusy;
  std::uint64_t count = 0;
  std::uint64_t total_duration_ns = 0;
  std::uint64_t total_records = 0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

// One row per (from, to, type) group, sorted by that key.
std::vector<MetricsRow> Metrics(std::uint64_t epoch, std::span<const PagEdge> edges);

// "epoch,from_worker,to_worker,activity_type,count,total_duration_ns,total_records"
std::string MetricsCsvLine(const MetricsRow& row);
void WriteMetricsCsv(std::ostream& out, std::span<const MetricsRow> rows);

// Thresholds in nanoseconds; absent thresholds disable their rule.
struct InvariantConfig {
  std::optional<std::uint64_t> epoch_max_ns;
  std::optional<std::uint64_t> message_max_ns;
  std::optional<std::uint64_t> operator_max_ns;
  std::optional<std::uint64_t> progress_max_ns;

  // Throws kInvalidArgument unless `ms` > 0.
  static std::uint64_t MillisToNanos(double ms);
};

enum class InvariantRule { kEpochMax, kMessageMax, kOperatorMax, kProgressMax, kProgressAbsent };

std::string_view InvariantRuleName(InvariantRule r);

struct InvariantViolation {
  InvariantRule rule = InvariantRule::kEpochMax;
  std::uint64_t epoch = 0;
  std::uint64_t duration_ns = 0;
  WorkerId source_worker = 0;
  std::optional<WorkerId> target_worker;
  PagNode edge_id;  // src node of the offending edge
  std::optional<OperatorId> operator_id;
  std::optional<EdgeType> activity_type;

  friend auto operator<=>(const InvariantViolation&, const InvariantViolation&) = default;
};

// `records` are the epoch's log records (only ControlSent ones matter);
// `workers` is the number of source workers taking part.
std::vector<InvariantViolation> CheckInvariants(std::uint64_t epoch, std::span<const PagEdge> edges,
                                                std::span<const LogRecord> records,
                                                std::uint32_t workers, const InvariantConfig& cfg);

// VIOLATION rule=<rule> epoch=<e> worker=<w> duration_ns=<d> edge=<w>@(<epoch>,<nanos>)
//   [operator=<id>] [type=<t>]
std::string FormatViolation(const InvariantViolation& v);

struct HopEdge {
  std::uint32_t hop = 0;
  PagEdge edge;

  friend auto operator<=>(const HopEdge&, const HopEdge&) = default;
};

// Backward traversal from Waiting edges. Each reached edge appears once,
// tagged with its minimal depth. Result is sorted by (hop, edge).
std::vector<HopEdge> KHops(std::span<const PagEdge> edges, std::uint32_t k);

struct HopSummary {
  std::uint32_t hop = 0;
  EdgeType activity_type = EdgeType::kBusy;
  std::uint64_t count = 0;
  std::uint64_t weight_ns = 0;  // summed durations

  friend bool operator==(const HopSummary&, const HopSummary&) = default;
};

std::vector<HopSummary> WeightHops(std::span<const HopEdge> hops);

}  // namespace snailtrail

#endif  // SNAILTRAIL_SRC_ANALYTICS_H_
