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

#include "trace_model.h"

#include <cstring>
#include <sstream>

#include "error.h"

namespace snailtrail {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kMalformedFrame: return "malformed-frame";
    case ErrorCode::kMalformedTrace: return "malformed-trace";
    case ErrorCode::kSetupConflict: return "setup-conflict";
    case ErrorCode::kUnknownOperator: return "unknown-operator";
    case ErrorCode::kAmbiguousMatch: return "ambiguous-match";
    case ErrorCode::kNetwork: return "network";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

std::string ToString(const Pair& p) {
  return "(" + std::to_string(p.epoch) + "," + std::to_string(p.nanos) + ")";
}

std::string_view EventKindName(EventKind kind) {
  switch (kind) {
    case EventKind::kScheduleStart: return "ScheduleStart";
    case EventKind::kScheduleEnd: return "ScheduleEnd";
    case EventKind::kDataSent: return "DataSent";
    case EventKind::kDataReceived: return "DataReceived";
    case EventKind::kProgressSent: return "ProgressSent";
    case EventKind::kProgressReceived: return "ProgressReceived";
    case EventKind::kOperates: return "Operates";
    case EventKind::kChannels: return "Channels";
    case EventKind::kEpochEnd: return "EpochEnd";
    case EventKind::kTerminate: return "Terminate";
  }
  return "?";
}

bool IsValidEventKindTag(std::uint8_t tag) { return tag >= 1 && tag <= 10; }

std::string_view ActivityName(Activity a) {
  switch (a) {
    case Activity::kScheduleStart: return "ScheduleStart";
    case Activity::kScheduleEnd: return "ScheduleEnd";
    case Activity::kDataSent: return "DataSent";
    case Activity::kDataReceived: return "DataReceived";
    case Activity::kControlSent: return "ControlSent";
    case Activity::kControlReceived: return "ControlReceived";
  }
  return "?";
}

std::string ToString(const RawEvent& e) {
  std::ostringstream os;
  os << EventKindName(e.kind) << "{w=" << e.local_worker << " at=" << ToString(e.at);
  if (e.operator_id) os << " op=" << *e.operator_id;
  if (e.channel_id) os << " ch=" << *e.channel_id;
  if (e.remote_worker) os << " peer=" << *e.remote_worker;
  os << " seq=" << e.seq_no << " rc=" << e.record_count << "}";
  return os.str();
}

namespace {

template <typename T>
void Put(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::size_t base)
      : bytes_(bytes), base_(base) {}

  template <typename T>
  T Get(const char* what) {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw Error(ErrorCode::kMalformedFrame,
                  "truncated " + std::string(what) + " at byte offset " +
                      std::to_string(base_ + pos_));
    }
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(T);
    return v;
  }

  std::size_t offset() const { return base_ + pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

std::uint64_t Opt64(const std::optional<std::uint64_t>& v) { return v ? *v : kNone64; }
std::uint32_t Opt32(const std::optional<std::uint32_t>& v) { return v ? *v : kNone32; }

std::optional<std::uint64_t> From64(std::uint64_t v) {
  return v == kNone64 ? std::nullopt : std::optional<std::uint64_t>(v);
}
std::optional<std::uint32_t> From32(std::uint32_t v) {
  return v == kNone32 ? std::nullopt : std::optional<std::uint32_t>(v);
}

}  // namespace

std::size_t EncodedRecordSize(const RawEvent& e) {
  std::size_t n = kFixedRecordBytes;
  if (e.kind == EventKind::kOperates) n += 1 + 4 * e.operator_address.size();
  if (e.kind == EventKind::kChannels) n += 16;
  return n;
}

void AppendEncodedBatch(std::uint64_t epoch, std::span<const RawEvent> events,
                        std::vector<std::uint8_t>& out) {
  std::size_t payload = kPayloadHeaderBytes;
  for (const RawEvent& e : events) {
    if (e.at.epoch != epoch) {
      throw Error(ErrorCode::kInvalidArgument,
                  "event " + ToString(e) + " does not belong to batch epoch " +
                      std::to_string(epoch));
    }
    if (e.kind == EventKind::kOperates && e.operator_address.size() > 255) {
      throw Error(ErrorCode::kInvalidArgument, "operator address longer than 255");
    }
    payload += EncodedRecordSize(e);
  }
  if (payload > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "batch too large for one frame");
  }
  out.reserve(out.size() + kFrameHeaderBytes + payload);
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(payload));
  Put<std::uint64_t>(out, epoch);
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(events.size()));
  for (const RawEvent& e : events) {
    Put<std::uint8_t>(out, static_cast<std::uint8_t>(e.kind));
    Put<std::uint64_t>(out, e.at.nanos);
    Put<std::uint32_t>(out, e.local_worker);
    Put<std::uint64_t>(out, Opt64(e.operator_id));
    Put<std::uint64_t>(out, Opt64(e.channel_id));
    Put<std::uint64_t>(out, e.seq_no);
    Put<std::uint32_t>(out, Opt32(e.remote_worker));
    Put<std::uint64_t>(out, e.record_count);
    if (e.kind == EventKind::kOperates) {
      Put<std::uint8_t>(out, static_cast<std::uint8_t>(e.operator_address.size()));
      for (std::uint32_t a : e.operator_address) Put<std::uint32_t>(out, a);
    } else if (e.kind == EventKind::kChannels) {
      Put<std::uint64_t>(out, Opt64(e.src_operator));
      Put<std::uint64_t>(out, Opt64(e.dst_operator));
    }
  }
}

std::vector<std::uint8_t> EncodeBatch(std::uint64_t epoch,
                                      std::span<const RawEvent> events) {
  std::vector<std::uint8_t> out;
  AppendEncodedBatch(epoch, events, out);
  return out;
}

Batch DecodePayload(std::span<const std::uint8_t> payload, std::size_t base_offset) {
  Reader r(payload, base_offset);
  Batch batch;
  batch.epoch = r.Get<std::uint64_t>("epoch");
  const std::uint32_t count = r.Get<std::uint32_t>("event_count");
  // Every record is at least kFixedRecordBytes; reject absurd counts before
  // reserving.
  if (static_cast<std::uint64_t>(count) * kFixedRecordBytes > r.remaining()) {
    throw Error(ErrorCode::kMalformedFrame,
                "event_count " + std::to_string(count) +
                    " exceeds payload length at byte offset " +
                    std::to_string(base_offset + 8));
  }
  batch.events.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t record_offset = r.offset();
    const std::uint8_t tag = r.Get<std::uint8_t>("kind tag");
    if (!IsValidEventKindTag(tag)) {
      throw Error(ErrorCode::kMalformedFrame,
                  "unknown kind tag " + std::to_string(tag) + " at byte offset " +
                      std::to_string(record_offset));
    }
    RawEvent e;
    e.kind = static_cast<EventKind>(tag);
    e.at = {batch.epoch, r.Get<std::uint64_t>("nanos")};
    e.local_worker = r.Get<std::uint32_t>("local_worker");
    e.operator_id = From64(r.Get<std::uint64_t>("operator_id"));
    e.channel_id = From64(r.Get<std::uint64_t>("channel_id"));
    e.seq_no = r.Get<std::uint64_t>("seq_no");
    e.remote_worker = From32(r.Get<std::uint32_t>("remote_worker"));
    e.record_count = r.Get<std::uint64_t>("record_count");
    if (e.kind == EventKind::kOperates) {
      const std::uint8_t len = r.Get<std::uint8_t>("addr_len");
      e.operator_address.reserve(len);
      for (std::uint8_t j = 0; j < len; ++j) {
        e.operator_address.push_back(r.Get<std::uint32_t>("address element"));
      }
    } else if (e.kind == EventKind::kChannels) {
      e.src_operator = From64(r.Get<std::uint64_t>("src_operator"));
      e.dst_operator = From64(r.Get<std::uint64_t>("dst_operator"));
    }
    batch.events.push_back(std::move(e));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kMalformedFrame,
                "payload length mismatch: " + std::to_string(r.remaining()) +
                    " trailing bytes at byte offset " + std::to_string(r.offset()));
  }
  return batch;
}

Batch DecodeBatch(std::span<const std::uint8_t> frame) {
  Reader r(frame, 0);
  const std::uint32_t length = r.Get<std::uint32_t>("length prefix");
  if (frame.size() - kFrameHeaderBytes != length) {
    throw Error(ErrorCode::kMalformedFrame,
                "payload length mismatch: prefix says " + std::to_string(length) +
                    " bytes, frame holds " +
                    std::to_string(frame.size() - kFrameHeaderBytes) +
                    " at byte offset 0");
  }
  return DecodePayload(frame.subspan(kFrameHeaderBytes), kFrameHeaderBytes);
}

}  // namespace snailtrail
