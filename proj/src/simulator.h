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

// Deterministic stand-in for a profiled dataflow computation. It emits one
// event stream per worker that honors the profiling contract: every worker
// logs scheduling, data and progress events, computes one epoch at a time and
// marks the end of each epoch.
//
// Execution model per epoch (all workers start the epoch together):
//   rounds_per_epoch rounds of: for each leaf operator in topological order,
//     pick up arrived progress messages, schedule the operator (wrapped in the
//     schedules of its enclosing scopes), consume arrived input messages,
//     forward records along output channels; then broadcast one progress
//     message.
//   drain steps (one per hop of the longest channel path) that wait for and
//     consume every outstanding data message.
//   wait for every outstanding progress message, then EpochEnd.

#ifndef SNAILTRAIL_SRC_SIMULATOR_H_
#define SNAILTRAIL_SRC_SIMULATOR_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "trace_model.h"

namespace snailtrail {

enum class ExchangeKind { kUniform, kAllToWorker, kHashMod };

struct ExchangePolicy {
  ExchangeKind kind = ExchangeKind::kUniform;
  WorkerId target = 0;  // kAllToWorker only
};

struct OperatorSpec {
  OperatorId id = 0;
  std::vector<std::uint32_t> address;
  std::uint64_t service_ns = 1000;     // mean cost of one schedule
  std::uint64_t record_cost_ns = 0;    // added per consumed or produced record
};

struct ChannelSpec {
  ChannelId id = 0;
  OperatorId src_operator = 0;
  OperatorId dst_operator = 0;
  ExchangePolicy exchange;
};

struct SkewExchange {
  ChannelId channel = 0;
  WorkerId target_worker = 0;
};
struct SlowOperator {
  OperatorId op = 0;
  std::uint64_t added_ns = 0;
};
struct StallWorker {
  WorkerId worker = 0;
  std::uint64_t from_epoch = 0;
};
struct DelayedMessage {
  ChannelId channel = 0;
  std::uint64_t added_ns = 0;
};

using FaultSpec = std::variant<SkewExchange, SlowOperator, StallWorker, DelayedMessage>;

struct SimConfig {
  std::uint32_t workers = 1;
  std::uint64_t epochs = 1;
  std::uint64_t records_per_worker_per_epoch = 0;
  std::uint32_t rounds_per_epoch = 4;
  std::uint64_t batch_size = 100;          // records per input batch
  std::uint64_t network_delay_ns = 20000;  // mean cross-worker latency
  std::uint64_t local_delay_ns = 200;      // same-worker channel latency
  std::uint64_t epoch_gap_ns = 1000;
  std::vector<OperatorSpec> operators;
  std::vector<ChannelSpec> channels;
  std::vector<FaultSpec> faults;
  std::uint64_t rng_seed = 0;
};

// Throws Error(kInvalidConfig) naming the violated invariant.
void ValidateSimConfig(const SimConfig& config);

// JSON schema documented in docs/simulator_config.md. rng_seed is mandatory.
SimConfig SimConfigFromJson(std::string_view json);
SimConfig LoadSimConfig(const std::string& path);
std::string SimConfigToJson(const SimConfig& config);

// Channel id carried by progress events. The control plane is not a dataflow
// channel and has no Channels setup record.
inline constexpr ChannelId kControlChannel = ChannelId{1} << 63;

using WorkerStreams = std::vector<std::vector<RawEvent>>;

// One stream per worker, index == worker id.
WorkerStreams Simulate(const SimConfig& config);

inline constexpr std::size_t kEventKindSlots = 11;  // indexed by wire tag
using KindCounts = std::array<std::uint64_t, kEventKindSlots>;

struct EventCountEstimate {
  KindCounts setup{};                  // Operates/Channels, all workers
  std::vector<KindCounts> per_epoch;   // all workers, EpochEnd included
  KindCounts terminate{};

  std::uint64_t EpochTotal(std::size_t epoch) const;
};

// Exact per-epoch event counts the simulator emits for `config`, derived from
// the execution model without running the timing simulation.
EventCountEstimate EstimateEventCounts(const SimConfig& config);

KindCounts CountKinds(std::span<const RawEvent> events);

// Standalone profiling-contract check over simulator (or any) output. An
// empty result means the streams conform.
std::vector<std::string> CheckContract(const WorkerStreams& streams);

// Four workers, ten epochs, all data of channel 0 exchanged onto worker 0.
// `records_per_worker` defaults to 2000.
SimConfig DataSkewConfig(std::uint64_t records_per_worker = 2000,
                         std::uint64_t seed = 7);

}  // namespace snailtrail

#endif  // SNAILTRAIL_SRC_SIMULATOR_H_
