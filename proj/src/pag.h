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

// Program Activity Graph construction for one epoch.

#ifndef SNAILTRAIL_SRC_PAG_H_
#define SNAILTRAIL_SRC_PAG_H_

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trace_model.h"

namespace snailtrail {

enum class EdgeType : std::uint8_t {
  kProcessing,
  kSpinning,
  kWaiting,
  kBusy,
  kDataMessage,
  kControlMessage,
};

inline constexpr EdgeType kAllEdgeTypes[] = {EdgeType::kProcessing,  EdgeType::kSpinning,
                                             EdgeType::kWaiting,     EdgeType::kBusy,
                                             EdgeType::kDataMessage, EdgeType::kControlMessage};

std::string_view EdgeTypeName(EdgeType t);
std::optional<EdgeType> ParseEdgeType(std::string_view name);

inline bool IsRemote(EdgeType t) {
  return t == EdgeType::kDataMessage || t == EdgeType::kControlMessage;
}

struct PagNode {
  WorkerId worker = 0;
  Pair at;

  friend constexpr auto operator<=>(const PagNode&, const PagNode&) = default;
};

std::string ToString(const PagNode& n);  // "<w>@(<epoch>,<nanos>)"

struct PagEdge {
  PagNode src;
  PagNode dst;
  EdgeType type = EdgeType::kBusy;
  std::optional<OperatorId> operator_id;
  std::uint64_t record_count = 0;

  std::uint64_t duration_ns() const { return dst.at.nanos - src.at.nanos; }

  friend auto operator<=>(const PagEdge&, const PagEdge&) = default;
};

struct NodeHash {
  std::size_t operator()(const PagNode& n) const {
    std::uint64_t h = n.at.nanos * 0x9e3779b97f4a7c15ULL;
    h ^= (n.at.epoch + 0x632be59bd9b4e019ULL) * 0xbf58476d1ce4e5b9ULL;
    h ^= static_cast<std::uint64_t>(n.worker) * 0x94d049bb133111ebULL;
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

// Streaming classifier for one worker's timeline in one epoch. Holds the
// previous record and the records of the schedule interval still open.
class LocalEdgeBuilder {
 public:
  explicit LocalEdgeBuilder(std::vector<PagEdge>& out) : out_(out) {}

  // Throws kInvalidArgument if records arrive out of order or from another
  // worker or epoch than the first one.
  void Push(const LogRecord& r);
  // Flushes a trailing open interval. A schedule that never ends is treated
  // as open to the last record.
  void Finish();

 private:
  void FlushInterval(const LogRecord* end);

  std::vector<PagEdge>& out_;
  std::optional<LogRecord> prev_;
  bool inside_ = false;
  std::vector<LogRecord> interval_;  // ScheduleStart and enclosed records
};

// n-1 edges for n records of one worker and epoch, in timeline order.
std::vector<PagEdge> BuildLocalEdges(std::span<const LogRecord> records);

struct MatchDiagnostics {
  std::vector<LogRecord> unmatched_sent;
  std::vector<LogRecord> unmatched_received;
  std::vector<std::string> notes;
};

// Joins on (channel_id, message_seq). Duplicate keys raise kAmbiguousMatch.
std::vector<PagEdge> BuildDataEdges(std::span<const LogRecord> sent,
                                    std::span<const LogRecord> received,
                                    MatchDiagnostics* diag = nullptr);

// Joins (sender, message_seq) against (remote_worker, message_seq) of the
// receives; one edge per receiver.
std::vector<PagEdge> BuildControlEdges(std::span<const LogRecord> sent,
                                       std::span<const LogRecord> received,
                                       MatchDiagnostics* diag = nullptr);

struct Pag {
  std::vector<PagEdge> edges;  // local edges by worker, then remote edges sorted
  MatchDiagnostics diagnostics;
};

// All records of one epoch, in any worker interleaving that keeps each
// worker's own order.
Pag BuildPag(std::span<const LogRecord> records);

}  // namespace snailtrail

#endif  // SNAILTRAIL_SRC_PAG_H_
