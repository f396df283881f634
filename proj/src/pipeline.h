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

// The profiler pipeline: replay -> ingest -> PAG, one result per closed epoch,
// spread over a configurable number of profiler worker threads.

#ifndef SNAILTRAIL_SRC_PIPELINE_H_
#define SNAILTRAIL_SRC_PIPELINE_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "frame_io.h"
#include "ingest.h"
#include "pag.h"
#include "trace_model.h"

namespace snailtrail {

struct ProfilerOptions {
  std::uint32_t source_peers = 1;
  std::uint32_t workers = 1;               // profiler threads
  std::uint32_t max_epochs_in_flight = 1;
};

struct EpochResult {
  std::uint64_t epoch = 0;
  std::uint32_t source_workers = 0;
  std::uint64_t event_count = 0;           // replayed events, after dedup
  std::vector<LogRecord> records;          // worker by worker
  Pag pag;
  double build_seconds = 0;                // ingest + PAG construction
};

// Builds one epoch's PAG from per-worker event lists (already merged and
// ordered) using `threads` threads. Output is identical for any thread
// count.
Pag BuildEpochPag(const std::vector<std::vector<RawEvent>>& per_worker, const ScopeBlacklist& bl,
                  std::uint32_t threads, std::vector<LogRecord>* records_out = nullptr);

class Profiler {
 public:
  // Throws kInvalidArgument if readers.size() != options.source_peers.
  Profiler(std::vector<std::unique_ptr<FrameSource>> readers, ProfilerOptions options);

  // Opens every worker_<w>_writer_<i>.st2 file in `dir`.
  static std::unique_ptr<Profiler> OpenDirectory(const std::string& dir, ProfilerOptions options);

  // Replays everything. `on_epoch` runs on the calling thread once per closed
  // epoch, in epoch order. Returns after every stream ended.
  void Run(const std::function<void(EpochResult&)>& on_epoch);

  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::unique_ptr<FrameSource>> readers_;
  ProfilerOptions options_;
  std::vector<std::string> diagnostics_;
};

}  // namespace snailtrail

#endif  // SNAILTRAIL_SRC_PIPELINE_H_
