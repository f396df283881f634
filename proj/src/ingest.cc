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

#include "ingest.h"

#include <map>

#include "error.h"

namespace snailtrail {

ScopeBlacklist BuildBlacklist(std::span<const std::pair<OperatorId, OperatorAddress>> operates) {
  ScopeBlacklist bl;
  for (const auto& [id, address] : operates) {
    auto [it, inserted] = bl.id_index.emplace(id, address);
    if (!inserted && it->second != address) {
      throw Error(ErrorCode::kSetupConflict,
                  "operator " + std::to_string(id) + " registered with two different addresses");
    }
    OperatorAddress prefix = address;
    while (prefix.size() > 1) {
      prefix.pop_back();
      bl.addresses.insert(prefix);
    }
  }
  return bl;
}

ScopeBlacklist BuildBlacklistFromEvents(std::span<const RawEvent> setup) {
  std::vector<std::pair<OperatorId, OperatorAddress>> operates;
  for (const RawEvent& e : setup) {
    if (e.kind != EventKind::kOperates) continue;
    if (!e.operator_id) throw Error(ErrorCode::kMalformedTrace, "Operates event without operator id");
    operates.emplace_back(*e.operator_id, e.operator_address);
  }
  return BuildBlacklist(operates);
}

std::vector<RawEvent> PeelOps(std::span<const RawEvent> events, const ScopeBlacklist& bl) {
  std::vector<RawEvent> out;
  out.reserve(events.size());
  for (const RawEvent& e : events) {
    if (IsScheduleKind(e.kind)) {
      if (!e.operator_id) throw Error(ErrorCode::kMalformedTrace, "schedule event without operator: " + ToString(e));
      auto it = bl.id_index.find(*e.operator_id);
      if (it == bl.id_index.end()) {
        throw Error(ErrorCode::kUnknownOperator,
                    "schedule event for unregistered operator " + std::to_string(*e.operator_id));
      }
      if (bl.addresses.contains(it->second)) continue;
    }
    out.push_back(e);
  }
  return out;
}

std::vector<LogRecord> ToLogRecords(std::span<const RawEvent> events) {
  std::vector<LogRecord> out;
  out.reserve(events.size());
  struct WorkerState {
    std::uint64_t epoch = 0;
    std::uint64_t next_seq = 0;
    std::optional<OperatorId> open;
  };
  std::map<WorkerId, WorkerState> workers;
  for (const RawEvent& e : events) {
    Activity activity;
    switch (e.kind) {
      case EventKind::kScheduleStart: activity = Activity::kScheduleStart; break;
      case EventKind::kScheduleEnd: activity = Activity::kScheduleEnd; break;
      case EventKind::kDataSent: activity = Activity::kDataSent; break;
      case EventKind::kDataReceived: activity = Activity::kDataReceived; break;
      case EventKind::kProgressSent: activity = Activity::kControlSent; break;
      case EventKind::kProgressReceived: activity = Activity::kControlReceived; break;
      default: continue;  // setup and markers carry no activity
    }
    WorkerState& w = workers[e.local_worker];
    if (w.epoch != e.at.epoch) {
      w.epoch = e.at.epoch;
      w.next_seq = 0;
      if (w.open) {
        throw Error(ErrorCode::kMalformedTrace,
                    "schedule of operator " + std::to_string(*w.open) + " left open across epochs on worker " +
                        std::to_string(e.local_worker));
      }
    }
    if (activity == Activity::kScheduleStart) {
      if (w.open) {
        throw Error(ErrorCode::kMalformedTrace,
                    "nested schedule on worker " + std::to_string(e.local_worker) + " at " + ToString(e.at) +
                        "; outer scopes should have been peeled");
      }
      w.open = e.operator_id;
    } else if (activity == Activity::kScheduleEnd) {
      if (!w.open) {
        throw Error(ErrorCode::kMalformedTrace,
                    "ScheduleEnd without ScheduleStart on worker " + std::to_string(e.local_worker) + " at " +
                        ToString(e.at));
      }
      if (*w.open != e.operator_id) {
        throw Error(ErrorCode::kMalformedTrace,
                    "ScheduleEnd operator does not match open schedule on worker " +
                        std::to_string(e.local_worker) + " at " + ToString(e.at));
      }
      w.open.reset();
    }
    LogRecord r;
    r.at = e.at;
    r.local_worker = e.local_worker;
    r.activity = activity;
    r.operator_id = e.operator_id;
    r.channel_id = e.channel_id;
    r.remote_worker = e.remote_worker;
    r.seq_no = w.next_seq++;
    r.message_seq = e.seq_no;
    r.record_count = e.record_count;
    out.push_back(r);
  }
  return out;
}

}  // namespace snailtrail
