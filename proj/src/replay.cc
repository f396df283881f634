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

#include "replay.h"

#include <algorithm>
#include <queue>

#include "error.h"

namespace snailtrail {
namespace {

bool IsTerminateOnly(const Batch& b) {
  return !b.events.empty() && std::all_of(b.events.begin(), b.events.end(), [](const RawEvent& e) {
    return e.kind == EventKind::kTerminate;
  });
}

}  // namespace

ReplaySource::ReplaySource(std::vector<std::unique_ptr<FrameSource>> readers,
                           std::size_t source_peers, std::uint32_t max_epochs_in_flight)
    : max_in_flight_(max_epochs_in_flight) {
  if (readers.size() != source_peers) {
    throw Error(ErrorCode::kInvalidArgument,
                "expected " + std::to_string(source_peers) + " source peers, found " +
                    std::to_string(readers.size()) + " event streams");
  }
  if (source_peers == 0) throw Error(ErrorCode::kInvalidArgument, "source peers must be >= 1");
  if (max_epochs_in_flight == 0) {
    throw Error(ErrorCode::kInvalidArgument, "max epochs in flight must be >= 1");
  }
  readers_.resize(readers.size());
  for (std::size_t i = 0; i < readers.size(); ++i) readers_[i].source = std::move(readers[i]);
}

Pair ReplaySource::frontier() const {
  if (finished_) return Pair::Max();
  return {next_close_, 0};
}

std::size_t ReplaySource::open_epoch_count() const {
  std::uint64_t highest = next_close_;
  bool any = false;
  for (const Reader& r : readers_) {
    if (r.saw_events && r.highest_epoch_seen >= next_close_) {
      highest = std::max(highest, r.highest_epoch_seen);
      any = true;
    }
  }
  return any ? static_cast<std::size_t>(highest - next_close_ + 1) : 0;
}

std::vector<int> ReplaySource::PollDescriptors() const {
  std::vector<int> fds;
  for (const Reader& r : readers_) {
    if (!r.ended && !r.has_pending) fds.push_back(r.source->fd());
  }
  return fds;
}

bool ReplaySource::FetchPending(Reader& r, std::size_t index) {
  std::vector<std::uint8_t> payload;
  PollResult res;
  try {
    res = r.source->TryNext(payload);
    if (res == PollResult::kFrame) {
      r.pending = DecodePayload(payload);
      r.has_pending = true;
      return true;
    }
  } catch (const Error& e) {
    throw Error(e.code(), "reader " + std::to_string(index) + " (" + r.source->name() + "): " + e.what());
  }
  if (res == PollResult::kEnd) {
    r.ended = true;
    if (!r.terminated) {
      diagnostics_.push_back("reader " + std::to_string(index) + " (" + r.source->name() +
                             ") ended without Terminate; closing its open epochs");
    }
  }
  return false;
}

bool ReplaySource::Admissible(const Batch& b) const {
  if (IsTerminateOnly(b)) return true;
  const std::uint64_t floor = std::min(next_close_, external_floor_);
  return b.epoch < floor + max_in_flight_;
}

bool ReplaySource::MarkerComplete(std::uint64_t epoch) const {
  return std::all_of(readers_.begin(), readers_.end(), [&](const Reader& r) {
    return r.ended || r.terminated || r.markers.contains(epoch);
  });
}

void ReplaySource::CloseEpoch(std::uint64_t epoch) {
  if (epoch != next_close_ || !MarkerComplete(epoch)) {
    throw Error(ErrorCode::kInternal,
                "epoch " + std::to_string(epoch) + " cannot close: markers missing or earlier epochs open");
  }
  ++next_close_;
  for (Reader& r : readers_) r.markers.erase(epoch);
}

void ReplaySource::CloseReady(std::vector<std::uint64_t>& closed) {
  if (finished_) return;
  const bool all_done = std::all_of(readers_.begin(), readers_.end(),
                                    [](const Reader& r) { return r.ended && !r.has_pending; });
  if (all_done) {
    std::optional<std::uint64_t> highest;
    for (const Reader& r : readers_) {
      if (r.saw_events) highest = std::max(highest.value_or(0), r.highest_epoch_seen);
    }
    while (highest && next_close_ <= *highest) {
      closed.push_back(next_close_);
      CloseEpoch(next_close_);
    }
    finished_ = true;
    return;
  }
  // Some reader is still live; close while every live reader has the marker.
  for (;;) {
    const bool someone_live_has_marker = std::any_of(readers_.begin(), readers_.end(), [&](const Reader& r) {
      return !r.ended && !r.terminated && r.markers.contains(next_close_);
    });
    const bool all_live_done = std::all_of(readers_.begin(), readers_.end(),
                                           [](const Reader& r) { return r.ended || r.terminated; });
    if (all_live_done || !someone_live_has_marker || !MarkerComplete(next_close_)) break;
    closed.push_back(next_close_);
    CloseEpoch(next_close_);
  }
}

StepResult ReplaySource::Step() {
  StepResult out;
  const std::size_t n = readers_.size();
  for (std::size_t k = 0; k < n && !finished_; ++k) {
    const std::size_t i = (cursor_ + k) % n;
    Reader& r = readers_[i];
    if (!r.has_pending) {
      if (r.ended) continue;
      if (!FetchPending(r, i)) {
        if (r.ended) CloseReady(out.closed_epochs);
        continue;
      }
    }
    if (!Admissible(r.pending)) continue;

    Batch b = std::move(r.pending);
    r.has_pending = false;
    const bool terminate = IsTerminateOnly(b);
    if (!terminate && b.epoch < next_close_) {
      throw Error(ErrorCode::kMalformedTrace,
                  "reader " + std::to_string(i) + " (" + r.source->name() + ") delivered epoch " +
                      std::to_string(b.epoch) + " after it closed");
    }
    for (const RawEvent& e : b.events) {
      if (e.kind == EventKind::kEpochEnd) r.markers.insert(e.at.epoch);
      if (e.kind == EventKind::kTerminate) r.terminated = true;
    }
    if (!terminate) {
      r.highest_epoch_seen = r.saw_events ? std::max(r.highest_epoch_seen, b.epoch) : b.epoch;
      r.saw_events = true;
    }
    cursor_ = (i + 1) % n;
    out.status = StepResult::Status::kBatch;
    out.reader = i;
    out.batch = std::move(b);
    CloseReady(out.closed_epochs);
    out.frontier = frontier();
    return out;
  }
  CloseReady(out.closed_epochs);
  out.status = finished_ ? StepResult::Status::kDone : StepResult::Status::kIdle;
  out.frontier = frontier();
  return out;
}

std::vector<RawEvent> MergeWorkerStreams(std::vector<std::vector<RawEvent>> parts) {
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  std::vector<RawEvent> out;
  out.reserve(total);
  if (parts.size() == 1) {
    out = std::move(parts[0]);
  } else {
    using Head = std::pair<std::uint64_t, std::size_t>;  // (nanos, part)
    std::priority_queue<Head, std::vector<Head>, std::greater<>> heap;
    std::vector<std::size_t> pos(parts.size(), 0);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (!parts[i].empty()) heap.push({parts[i][0].at.nanos, i});
    }
    while (!heap.empty()) {
      const auto [nanos, i] = heap.top();
      heap.pop();
      RawEvent& e = parts[i][pos[i]++];
      if (pos[i] < parts[i].size()) heap.push({parts[i][pos[i]].at.nanos, i});
      if (!out.empty() && out.back().at.nanos == e.at.nanos) {
        if (out.back() == e) continue;
        throw Error(ErrorCode::kMalformedTrace,
                    "two events at nanos " + std::to_string(nanos) + " on worker " +
                        std::to_string(e.local_worker) + ": " + ToString(out.back()) + " and " + ToString(e));
      }
      out.push_back(std::move(e));
    }
  }
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].at.nanos <= out[i - 1].at.nanos) {
      throw Error(ErrorCode::kMalformedTrace,
                  "nanos not increasing on worker " + std::to_string(out[i].local_worker) + " at " +
                      ToString(out[i]));
    }
  }
  return out;
}

}  // namespace snailtrail
