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

#include "pag.h"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "error.h"

namespace snailtrail {

std::string_view EdgeTypeName(EdgeType t) {
  switch (t) {
    case EdgeType::kProcessing: return "Processing";
    case EdgeType::kSpinning: return "Spinning";
    case EdgeType::kWaiting: return "Waiting";
    case EdgeType::kBusy: return "Busy";
    case EdgeType::kDataMessage: return "DataMessage";
    case EdgeType::kControlMessage: return "ControlMessage";
  }
  return "?";
}

std::optional<EdgeType> ParseEdgeType(std::string_view name) {
  for (EdgeType t : kAllEdgeTypes) {
    if (EdgeTypeName(t) == name) return t;
  }
  return std::nullopt;
}

std::string ToString(const PagNode& n) { return std::to_string(n.worker) + "@" + ToString(n.at); }

namespace {

PagNode NodeOf(const LogRecord& r) { return {r.local_worker, r.at}; }

bool IsRemoteReceive(const LogRecord& r) {
  return IsReceive(r.activity) && r.remote_worker && *r.remote_worker != r.local_worker;
}

struct KeyHash {
  std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& k) const {
    return std::hash<std::uint64_t>()(k.first * 0x9e3779b97f4a7c15ULL ^ k.second);
  }
};

}  // namespace

void LocalEdgeBuilder::Push(const LogRecord& r) {
  if (prev_) {
    if (r.local_worker != prev_->local_worker || r.at.epoch != prev_->at.epoch) {
      throw Error(ErrorCode::kInvalidArgument, "local edge input mixes workers or epochs at " + ToString(r.at));
    }
    if (r.at.nanos <= prev_->at.nanos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "local edge input not ordered on worker " + std::to_string(r.local_worker) + " at " +
                      ToString(r.at));
    }
  }
  if (inside_) {
    if (r.activity == Activity::kScheduleEnd) {
      FlushInterval(&r);
      inside_ = false;
    } else if (r.activity == Activity::kScheduleStart) {
      throw Error(ErrorCode::kInvalidArgument, "nested schedule in local edge input at " + ToString(r.at));
    } else {
      interval_.push_back(r);
    }
  } else if (prev_) {
    PagEdge e;
    e.src = NodeOf(*prev_);
    e.dst = NodeOf(r);
    e.type = IsRemoteReceive(r) ? EdgeType::kWaiting : EdgeType::kBusy;
    out_.push_back(e);
  }
  if (r.activity == Activity::kScheduleStart && !inside_) {
    inside_ = true;
    interval_.clear();
    interval_.push_back(r);
  }
  prev_ = r;
}

void LocalEdgeBuilder::FlushInterval(const LogRecord* end) {
  if (interval_.empty()) return;
  bool data_inside = false;
  std::uint64_t received = 0;
  for (std::size_t i = 1; i < interval_.size(); ++i) {
    if (IsData(interval_[i].activity)) data_inside = true;
    if (interval_[i].activity == Activity::kDataReceived) received += interval_[i].record_count;
  }
  const bool processing = data_inside || (end != nullptr && end->record_count > 0);
  const std::optional<OperatorId> op = interval_.front().operator_id;
  auto emit = [&](const LogRecord& from, const LogRecord& to, std::uint64_t rc) {
    PagEdge e;
    e.src = NodeOf(from);
    e.dst = NodeOf(to);
    e.type = processing ? EdgeType::kProcessing : EdgeType::kSpinning;
    e.operator_id = op;
    e.record_count = processing ? rc : 0;
    out_.push_back(e);
  };
  for (std::size_t i = 1; i < interval_.size(); ++i) {
    const LogRecord& to = interval_[i];
    emit(interval_[i - 1], to, to.activity == Activity::kDataReceived ? to.record_count : 0);
  }
  if (end != nullptr) {
    const std::uint64_t rest = end->record_count > received ? end->record_count - received : 0;
    emit(interval_.back(), *end, rest);
  }
  interval_.clear();
}

void LocalEdgeBuilder::Finish() {
  if (inside_) FlushInterval(nullptr);
  inside_ = false;
}

std::vector<PagEdge> BuildLocalEdges(std::span<const LogRecord> records) {
  std::vector<PagEdge> out;
  if (records.size() > 1) out.reserve(records.size() - 1);
  LocalEdgeBuilder b(out);
  for (const LogRecord& r : records) b.Push(r);
  b.Finish();
  return out;
}

std::vector<PagEdge> BuildDataEdges(std::span<const LogRecord> sent,
                                    std::span<const LogRecord> received, MatchDiagnostics* diag) {
  using Key = std::pair<std::uint64_t, std::uint64_t>;
  auto key_of = [](const LogRecord& r) -> Key {
    if (!r.channel_id) throw Error(ErrorCode::kMalformedTrace, "data record without channel at " + ToString(r.at));
    return {*r.channel_id, r.message_seq};
  };
  std::unordered_map<Key, const LogRecord*, KeyHash> sends;
  sends.reserve(sent.size());
  for (const LogRecord& s : sent) {
    if (!sends.emplace(key_of(s), &s).second) {
      throw Error(ErrorCode::kAmbiguousMatch, "duplicate DataSent for channel " + std::to_string(*s.channel_id) +
                                                  " seq " + std::to_string(s.message_seq));
    }
  }
  std::unordered_map<Key, bool, KeyHash> matched;
  matched.reserve(received.size());
  std::vector<PagEdge> out;
  out.reserve(received.size());
  for (const LogRecord& r : received) {
    const Key k = key_of(r);
    if (!matched.emplace(k, true).second) {
      throw Error(ErrorCode::kAmbiguousMatch, "duplicate DataReceived for channel " +
                                                  std::to_string(k.first) + " seq " + std::to_string(k.second));
    }
    auto it = sends.find(k);
    if (it == sends.end()) {
      if (diag) diag->unmatched_received.push_back(r);
      continue;
    }
    const LogRecord& s = *it->second;
    if (s.local_worker == r.local_worker) continue;
    if (s.at > r.at) {
      if (diag) diag->notes.push_back("data message received before sent at " + ToString(r.at));
      continue;
    }
    PagEdge e;
    e.src = NodeOf(s);
    e.dst = NodeOf(r);
    e.type = EdgeType::kDataMessage;
    e.record_count = s.record_count;
    out.push_back(e);
  }
  if (diag) {
    for (const LogRecord& s : sent) {
      if (!matched.contains(key_of(s))) diag->unmatched_sent.push_back(s);
    }
  }
  return out;
}

std::vector<PagEdge> BuildControlEdges(std::span<const LogRecord> sent,
                                       std::span<const LogRecord> received, MatchDiagnostics* diag) {
  using Key = std::pair<std::uint64_t, std::uint64_t>;
  std::unordered_map<Key, const LogRecord*, KeyHash> sends;
  sends.reserve(sent.size());
  for (const LogRecord& s : sent) {
    if (!sends.emplace(Key{s.local_worker, s.message_seq}, &s).second && diag) {
      diag->notes.push_back("duplicate ProgressSent from worker " + std::to_string(s.local_worker) + " seq " +
                            std::to_string(s.message_seq));
    }
  }
  std::unordered_map<Key, std::size_t, KeyHash> fanout;
  std::vector<PagEdge> out;
  out.reserve(received.size());
  for (const LogRecord& r : received) {
    if (!r.remote_worker) {
      if (diag) diag->unmatched_received.push_back(r);
      continue;
    }
    const Key k{*r.remote_worker, r.message_seq};
    auto it = sends.find(k);
    if (it == sends.end() || it->second->local_worker == r.local_worker) {
      if (diag) diag->unmatched_received.push_back(r);
      continue;
    }
    const LogRecord& s = *it->second;
    if (s.at > r.at) {
      if (diag) diag->notes.push_back("control message received before sent at " + ToString(r.at));
      continue;
    }
    fanout[k]++;
    PagEdge e;
    e.src = NodeOf(s);
    e.dst = NodeOf(r);
    e.type = EdgeType::kControlMessage;
    e.record_count = 0;
    out.push_back(e);
  }
  if (diag) {
    for (const LogRecord& s : sent) {
      if (!fanout.contains(Key{s.local_worker, s.message_seq})) diag->unmatched_sent.push_back(s);
    }
  }
  return out;
}

Pag BuildPag(std::span<const LogRecord> records) {
  Pag pag;
  std::map<WorkerId, std::vector<const LogRecord*>> timelines;
  std::vector<LogRecord> data_sent, data_received, control_sent, control_received;
  for (const LogRecord& r : records) {
    timelines[r.local_worker].push_back(&r);
    switch (r.activity) {
      case Activity::kDataSent: data_sent.push_back(r); break;
      case Activity::kDataReceived: data_received.push_back(r); break;
      case Activity::kControlSent: control_sent.push_back(r); break;
      case Activity::kControlReceived: control_received.push_back(r); break;
      default: break;
    }
  }
  pag.edges.reserve(records.size() + data_received.size() + control_received.size());
  for (auto& [w, timeline] : timelines) {
    LocalEdgeBuilder b(pag.edges);
    for (const LogRecord* r : timeline) b.Push(*r);
    b.Finish();
  }
  const std::size_t local = pag.edges.size();
  for (PagEdge& e : BuildDataEdges(data_sent, data_received, &pag.diagnostics)) pag.edges.push_back(e);
  for (PagEdge& e : BuildControlEdges(control_sent, control_received, &pag.diagnostics)) pag.edges.push_back(e);
  std::sort(pag.edges.begin() + static_cast<std::ptrdiff_t>(local), pag.edges.end());
  return pag;
}

}  // namespace snailtrail
