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

// Replays framed event streams with an epoch frontier. Each Step() hands out
// at most one frame, then returns so the caller can interleave other work.

#ifndef SNAILTRAIL_SRC_REPLAY_H_
#define SNAILTRAIL_SRC_REPLAY_H_

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "frame_io.h"
#include "trace_model.h"

namespace snailtrail {

struct StepResult {
  enum class Status {
    kBatch,    // `batch` holds one decoded frame
    kIdle,     // nothing admissible right now
    kDone,     // every reader finished and every epoch is closed
  };
  Status status = Status::kIdle;
  std::size_t reader = 0;
  Batch batch;
  std::vector<std::uint64_t> closed_epochs;  // closed during this step, ascending
  Pair frontier;
};

class ReplaySource {
 public:
  // Throws kInvalidArgument if readers.size() != source_peers or
  // max_epochs_in_flight == 0.
  ReplaySource(std::vector<std::unique_ptr<FrameSource>> readers, std::size_t source_peers,
               std::uint32_t max_epochs_in_flight = 1);

  StepResult Step();

  // Lowest epoch that may still receive events, as (epoch, 0); Pair::Max()
  // once everything is closed.
  Pair frontier() const;

  // Lowest epoch not yet closed by this source.
  std::uint64_t next_open_epoch() const { return next_close_; }
  bool done() const { return finished_; }

  // Caps admission when several sources must advance together: epochs at or
  // past floor + max_epochs_in_flight are held back.
  void SetExternalFloor(std::uint64_t floor) { external_floor_ = floor; }

  // Marks `epoch` closed. Throws kInternal unless every reader has delivered
  // its marker (or ended) and all earlier epochs are closed.
  void CloseEpoch(std::uint64_t epoch);

  std::size_t open_epoch_count() const;
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }
  // Descriptors to wait on after a kIdle step.
  std::vector<int> PollDescriptors() const;

 private:
  struct Reader {
    std::unique_ptr<FrameSource> source;
    bool has_pending = false;
    Batch pending;
    bool ended = false;
    bool terminated = false;
    std::set<std::uint64_t> markers;
    std::uint64_t highest_epoch_seen = 0;
    bool saw_events = false;
  };

  bool FetchPending(Reader& r, std::size_t index);
  bool Admissible(const Batch& b) const;
  bool MarkerComplete(std::uint64_t epoch) const;
  void CloseReady(std::vector<std::uint64_t>& closed);

  std::vector<Reader> readers_;
  std::uint32_t max_in_flight_;
  std::uint64_t next_close_ = 0;
  std::uint64_t external_floor_ = std::numeric_limits<std::uint64_t>::max();
  std::size_t cursor_ = 0;
  bool finished_ = false;
  std::vector<std::string> diagnostics_;
};

// k-way merge of one source worker's per-reader event lists by nanos.
// Broadcast copies (identical events at equal nanos) collapse to one; two
// different events at the same nanos raise kMalformedTrace.
std::vector<RawEvent> MergeWorkerStreams(std::vector<std::vector<RawEvent>> parts);

}  // namespace snailtrail

#endif  // SNAILTRAIL_SRC_REPLAY_H_
