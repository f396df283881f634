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

// RawEvent -> LogRecord: outer-scope peeling and kind normalization.

#ifndef SNAILTRAIL_SRC_INGEST_H_
#define SNAILTRAIL_SRC_INGEST_H_

#include <cstdint>
#include <set>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "trace_model.h"

namespace snailtrail {

using OperatorAddress = std::vector<std::uint32_t>;

struct ScopeBlacklist {
  std::set<OperatorAddress> addresses;                      // outer scopes
  std::unordered_map<OperatorId, OperatorAddress> id_index;
};

// Collects every proper, non-empty prefix of every registered address.
// Re-registering an id with the same address is fine. A different address
// raises kSetupConflict.
ScopeBlacklist BuildBlacklist(std::span<const std::pair<OperatorId, OperatorAddress>> operates);

// Same, taking the Operates events of a setup stream (other kinds ignored).
ScopeBlacklist BuildBlacklistFromEvents(std::span<const RawEvent> setup);

// Drops Schedule events of outer-scope operators. Throws kUnknownOperator for
// a Schedule event whose operator was never registered.
std::vector<RawEvent> PeelOps(std::span<const RawEvent> events, const ScopeBlacklist& bl);

// One LogRecord per Schedule, Data and Progress event. seq_no counts 0, 1,
// 2, ... per (worker, epoch). Throws kMalformedTrace on a ScheduleEnd
// without an open ScheduleStart, mismatched operators or nested schedules.
std::vector<LogRecord> ToLogRecords(std::span<const RawEvent> events);

}  // namespace snailtrail

#endif  // SNAILTRAIL_SRC_INGEST_H_
