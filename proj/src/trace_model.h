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

// Shared vocabulary of the profiler: bitemporal timestamps, raw events as they
// appear on the wire, normalized log records, and the framed binary codec.

#ifndef SNAILTRAIL_SRC_TRACE_MODEL_H_
#define SNAILTRAIL_SRC_TRACE_MODEL_H_

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace snailtrail {

using WorkerId = std::uint32_t;
using OperatorId = std::uint64_t;
using ChannelId = std::uint64_t;

// Two-dimensional logical time: epoch first, processing time second.
struct Pair {
  std::uint64_t epoch = 0;
  std::uint64_t nanos = 0;

  friend constexpr auto operator<=>(const Pair&, const Pair&) = default;

  static constexpr Pair Max() {
    return {std::numeric_limits<std::uint64_t>::max(),
            std::numeric_limits<std::uint64_t>::max()};
  }
};

enum class Ordering { kLess, kEqual, kGreater };

constexpr Ordering ComparePairs(const Pair& a, const Pair& b) {
  if (a.epoch != b.epoch) return a.epoch < b.epoch ? Ordering::kLess : Ordering::kGreater;
  if (a.nanos != b.nanos) return a.nanos < b.nanos ? Ordering::kLess : Ordering::kGreater;
  return Ordering::kEqual;
}

std::string ToString(const Pair& p);

// Wire tags are part of the stream format; do not renumber.
enum class EventKind : std::uint8_t {
  kScheduleStart = 1,
  kScheduleEnd = 2,
  kDataSent = 3,
  kDataReceived = 4,
  kProgressSent = 5,
  kProgressReceived = 6,
  kOperates = 7,
  kChannels = 8,
  kEpochEnd = 9,
  kTerminate = 10,
};

std::string_view EventKindName(EventKind kind);
bool IsValidEventKindTag(std::uint8_t tag);

inline bool IsMessageKind(EventKind k) {
  return k == EventKind::kDataSent || k == EventKind::kDataReceived ||
         k == EventKind::kProgressSent || k == EventKind::kProgressReceived;
}
inline bool IsScheduleKind(EventKind k) {
  return k == EventKind::kScheduleStart || k == EventKind::kScheduleEnd;
}
inline bool IsSetupKind(EventKind k) {
  return k == EventKind::kOperates || k == EventKind::kChannels;
}

struct RawEvent {
  Pair at;
  WorkerId local_worker = 0;
  EventKind kind = EventKind::kTerminate;
  std::optional<OperatorId> operator_id;
  std::vector<std::uint32_t> operator_address;  // Operates only
  std::optional<ChannelId> channel_id;
  std::uint64_t seq_no = 0;
  std::optional<WorkerId> remote_worker;  // unset on a broadcast ProgressSent
  std::uint64_t record_count = 0;
  // Channels only: the operators a channel connects.
  std::optional<OperatorId> src_operator;
  std::optional<OperatorId> dst_operator;

  friend bool operator==(const RawEvent&, const RawEvent&) = default;
};

std::string ToString(const RawEvent& e);

// Normalized activity of a log record.
enum class Activity : std::uint8_t {
  kScheduleStart,
  kScheduleEnd,
  kDataSent,
  kDataReceived,
  kControlSent,
  kControlReceived,
};

std::string_view ActivityName(Activity a);

inline bool IsData(Activity a) {
  return a == Activity::kDataSent || a == Activity::kDataReceived;
}
inline bool IsControl(Activity a) {
  return a == Activity::kControlSent || a == Activity::kControlReceived;
}
inline bool IsReceive(Activity a) {
  return a == Activity::kDataReceived || a == Activity::kControlReceived;
}

struct LogRecord {
  Pair at;
  WorkerId local_worker = 0;
  Activity activity = Activity::kScheduleStart;
  std::optional<OperatorId> operator_id;
  std::optional<ChannelId> channel_id;
  std::optional<WorkerId> remote_worker;
  std::uint64_t seq_no = 0;      // worker-local ordinal within the epoch
  std::uint64_t message_seq = 0; // sender-assigned message sequence number
  std::uint64_t record_count = 0;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

// ---------------------------------------------------------------------------
// Framed little-endian codec.
//
// frame   = u32 payload_length, payload
// payload = u64 epoch, u32 event_count, event_count records
// record  = u8 kind, u64 nanos, u32 local_worker, u64 operator_id,
//           u64 channel_id, u64 seq_no, u32 remote_worker, u64 record_count
//           [Operates: u8 addr_len, addr_len x u32]
//           [Channels: u64 src_operator, u64 dst_operator]
// Absent optionals are all-ones.

inline constexpr std::size_t kFrameHeaderBytes = 4;
inline constexpr std::size_t kPayloadHeaderBytes = 8 + 4;
inline constexpr std::size_t kFixedRecordBytes = 1 + 8 + 4 + 8 + 8 + 8 + 4 + 8;
inline constexpr std::uint64_t kNone64 = std::numeric_limits<std::uint64_t>::max();
inline constexpr std::uint32_t kNone32 = std::numeric_limits<std::uint32_t>::max();

struct Batch {
  std::uint64_t epoch = 0;
  std::vector<RawEvent> events;

  friend bool operator==(const Batch&, const Batch&) = default;
};

// Throws Error(kInvalidArgument) if an event's epoch differs from `epoch`.
std::vector<std::uint8_t> EncodeBatch(std::uint64_t epoch,
                                      std::span<const RawEvent> events);

// Appends the encoded frame to `out` instead of allocating a new buffer.
void AppendEncodedBatch(std::uint64_t epoch, std::span<const RawEvent> events,
                        std::vector<std::uint8_t>& out);

// Decodes exactly one complete frame (length prefix included). Throws
// Error(kMalformedFrame) naming the byte offset and cause.
Batch DecodeBatch(std::span<const std::uint8_t> frame);

// Decodes a payload without its length prefix; `base_offset` is only used for
// error messages.
Batch DecodePayload(std::span<const std::uint8_t> payload,
                    std::size_t base_offset = kFrameHeaderBytes);

// Size in bytes the record for `e` occupies on the wire.
std::size_t EncodedRecordSize(const RawEvent& e);

}  // namespace snailtrail

#endif  // SNAILTRAIL_SRC_TRACE_MODEL_H_
