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

// Source-side boundary: event filtering, load-balanced writer routing and the
// offline (file) and online (TCP) transports.

#ifndef SNAILTRAIL_SRC_ADAPTER_H_
#define SNAILTRAIL_SRC_ADAPTER_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "frame_io.h"
#include "simulator.h"
#include "trace_model.h"

namespace snailtrail {

// Drops worker-local Data and Progress events; everything else passes in
// order.
std::vector<RawEvent> FilterEvents(std::span<const RawEvent> events);

enum class BatchKind { kProgress, kSetup, kLog };

// Writer indices in [0, lbf) that receive a batch. Progress and Setup are
// broadcast, Log batches rotate by epoch.
std::vector<std::size_t> RouteBatch(BatchKind kind, std::uint64_t epoch, std::uint32_t lbf);

inline constexpr std::size_t kDefaultMaxBatchEvents = 1024;

// Frames one worker's filtered stream onto its `sinks` (size == lbf). EpochEnd
// and Terminate travel as broadcast marker frames. Does not close the sinks.
void WriteWorkerStream(std::span<const RawEvent> filtered, std::span<FrameSink* const> sinks,
                       std::size_t max_batch_events = kDefaultMaxBatchEvents);

std::string WriterFileName(WorkerId worker, std::uint32_t writer);

// Filters each stream and writes workers x lbf files into `dir` (created if
// missing). Returns the paths in (worker, writer) order.
std::vector<std::string> WriteOffline(const WorkerStreams& streams, std::uint32_t lbf,
                                      const std::string& dir);

// One connection per (worker, writer), one sending thread per worker.
void WriteOnline(const WorkerStreams& streams, std::uint32_t lbf, const std::string& host,
                 std::uint16_t port);

// Parses "host:port".
std::pair<std::string, std::uint16_t> ParseHostPort(const std::string& text);

// Explicit address if given, else SNAILTRAIL_ADDR. Throws kInvalidArgument when
// neither is available.
std::pair<std::string, std::uint16_t> ResolveSourceAddress(
    const std::optional<std::string>& explicit_address);

// Files `worker_<w>_writer_<i>.st2` in `dir`, sorted by (worker, writer).
std::vector<std::string> ListTraceFiles(const std::string& dir);

}  // namespace snailtrail

#endif  // SNAILTRAIL_SRC_ADAPTER_H_
