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

#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <random>

#include "error.h"

namespace snailtrail {
namespace {

std::vector<std::uint8_t> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInternal;
}

RawEvent RandomEvent(std::mt19937_64& rng, std::uint64_t epoch) {
  std::uniform_int_distribution<int> tag(1, 10);
  RawEvent e;
  e.kind = static_cast<EventKind>(tag(rng));
  e.at = {epoch, rng() % 1'000'000'000'000ULL};
  e.local_worker = static_cast<WorkerId>(rng() % 64);
  if (rng() % 2) e.operator_id = rng() % 1000;
  if (rng() % 2) e.channel_id = rng() >> 1;
  e.seq_no = rng();
  if (rng() % 2) e.remote_worker = static_cast<WorkerId>(rng() % 64);
  e.record_count = rng() % 100000;
  if (e.kind == EventKind::kOperates) {
    e.operator_address.push_back(0);
    const std::size_t extra = rng() % 6;
    for (std::size_t i = 0; i < extra; ++i) e.operator_address.push_back(static_cast<std::uint32_t>(rng()));
  }
  if (e.kind == EventKind::kChannels) {
    e.src_operator = rng() % 50;
    e.dst_operator = rng() % 50;
  }
  return e;
}

TEST(PairCompareTest, Examples) {
  EXPECT_EQ(ComparePairs({2, 10}, {2, 13}), Ordering::kLess);
  EXPECT_EQ(ComparePairs({3, 5}, {3, 5}), Ordering::kEqual);
  EXPECT_EQ(ComparePairs({1, 999999999}, {2, 0}), Ordering::kLess);
  EXPECT_EQ(ComparePairs({2, 0}, {1, 999999999}), Ordering::kGreater);
}

TEST(PairCompareTest, TotalOrderOnRandomTriples) {
  std::mt19937_64 rng(1);
  auto small = [&] { return Pair{rng() % 3, rng() % 3}; };
  for (int i = 0; i < 5000; ++i) {
    const Pair a = small(), b = small(), c = small();
    const Ordering ab = ComparePairs(a, b);
    const Ordering ba = ComparePairs(b, a);
    // Antisymmetry.
    if (ab == Ordering::kLess) {
      EXPECT_EQ(ba, Ordering::kGreater);
    }
    if (ab == Ordering::kEqual) {
      EXPECT_TRUE(a.epoch == b.epoch && a.nanos == b.nanos);
    }
    // Transitivity.
    if (ab == Ordering::kLess && ComparePairs(b, c) == Ordering::kLess) {
      EXPECT_EQ(ComparePairs(a, c), Ordering::kLess);
    }
    // Agrees with the lexicographic tuple order.
    const bool less = std::tie(a.epoch, a.nanos) < std::tie(b.epoch, b.nanos);
    EXPECT_EQ(ab == Ordering::kLess, less);
    EXPECT_EQ(ab == Ordering::kLess, a < b);
  }
}

TEST(CodecTest, EmptyBatchHasOnlyHeader) {
  const auto frame = EncodeBatch(0, {});
  // u32 length + u64 epoch + u32 count.
  ASSERT_EQ(frame.size(), 4u + 8u + 4u);
  EXPECT_EQ(frame[0], 12);
  for (std::size_t i = 1; i < frame.size(); ++i) EXPECT_EQ(frame[i], 0) << i;
  const Batch b = DecodeBatch(frame);
  EXPECT_EQ(b.epoch, 0u);
  EXPECT_TRUE(b.events.empty());
}

TEST(CodecTest, EpochEndRecordSize) {
  RawEvent e;
  e.kind = EventKind::kEpochEnd;
  e.at = {4, 77};
  e.local_worker = 2;
  const auto frame = EncodeBatch(4, std::vector<RawEvent>{e});
  // tag, nanos, worker, operator, channel, seq, remote, records.
  const std::size_t record = 1 + 8 + 4 + 8 + 8 + 8 + 4 + 8;
  ASSERT_EQ(frame.size(), 4 + 12 + record);
  const std::uint32_t prefix = frame[0] | frame[1] << 8 | frame[2] << 16 | frame[3] << 24;
  EXPECT_EQ(prefix, 12 + record);
  EXPECT_EQ(DecodeBatch(frame).events.front(), e);
}

TEST(CodecTest, RandomRoundTrip) {
  std::mt19937_64 rng(42);
  std::vector<RawEvent> events;
  for (int i = 0; i < 1000; ++i) events.push_back(RandomEvent(rng, 9));
  const auto frame = EncodeBatch(9, events);
  const Batch b = DecodeBatch(frame);
  EXPECT_EQ(b.epoch, 9u);
  ASSERT_EQ(b.events.size(), events.size());
  for (std::size_t i = 0; i < events.size(); ++i) EXPECT_EQ(b.events[i], events[i]) << i;
  EXPECT_EQ(EncodeBatch(9, b.events), frame);
}

TEST(CodecTest, SizeHelperMatchesEncoding) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const RawEvent e = RandomEvent(rng, 1);
    EXPECT_EQ(EncodeBatch(1, std::vector<RawEvent>{e}).size(), 16 + EncodedRecordSize(e));
  }
}

TEST(CodecTest, AppendConcatenatesFrames) {
  RawEvent e;
  e.kind = EventKind::kTerminate;
  std::vector<std::uint8_t> out;
  AppendEncodedBatch(0, std::vector<RawEvent>{e}, out);
  AppendEncodedBatch(0, {}, out);
  auto a = EncodeBatch(0, std::vector<RawEvent>{e});
  const auto b = EncodeBatch(0, {});
  a.insert(a.end(), b.begin(), b.end());
  EXPECT_EQ(out, a);
}

TEST(CodecTest, RejectsEpochMismatch) {
  RawEvent e;
  e.kind = EventKind::kEpochEnd;
  e.at = {2, 0};
  EXPECT_EQ(CodeOf([&] { EncodeBatch(3, std::vector<RawEvent>{e}); }), ErrorCode::kInvalidArgument);
}

TEST(CodecTest, TruncatedFrameIsMalformed) {
  std::mt19937_64 rng(3);
  std::vector<RawEvent> events;
  for (int i = 0; i < 10; ++i) events.push_back(RandomEvent(rng, 1));
  auto frame = EncodeBatch(1, events);
  frame.resize(frame.size() / 2);
  EXPECT_EQ(CodeOf([&] { DecodeBatch(frame); }), ErrorCode::kMalformedFrame);
  std::vector<std::uint8_t> two = {1, 0};
  EXPECT_EQ(CodeOf([&] { DecodeBatch(two); }), ErrorCode::kMalformedFrame);
}

TEST(CodecTest, UnknownKindTag) {
  int valid = 0;
  std::uint8_t invalid_tag = 0;
  for (int t = 0; t < 256; ++t) {
    if (IsValidEventKindTag(static_cast<std::uint8_t>(t))) {
      ++valid;
    } else if (t >= 11) {
      invalid_tag = static_cast<std::uint8_t>(t);
    }
  }
  EXPECT_EQ(valid, 10);
  ASSERT_EQ(invalid_tag, 255);
  RawEvent e;
  e.kind = EventKind::kEpochEnd;
  auto frame = EncodeBatch(0, std::vector<RawEvent>{e});
  frame[16] = 250;
  try {
    DecodeBatch(frame);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kMalformedFrame);
    EXPECT_NE(std::string(err.what()).find("250"), std::string::npos);
    EXPECT_NE(std::string(err.what()).find("offset 16"), std::string::npos);
  }
}

TEST(CodecTest, PayloadLengthMismatch) {
  RawEvent e;
  e.kind = EventKind::kEpochEnd;
  auto frame = EncodeBatch(0, std::vector<RawEvent>{e});
  frame.push_back(0);
  EXPECT_EQ(CodeOf([&] { DecodeBatch(frame); }), ErrorCode::kMalformedFrame);
  frame[0] += 1;  // prefix now agrees, count does not
  EXPECT_EQ(CodeOf([&] { DecodeBatch(frame); }), ErrorCode::kMalformedFrame);
}

// tests/fixtures/gen_golden_batch.py wrote this file straight from the
// layout; the expected list below mirrors that script.
TEST(CodecTest, GoldenFixture) {
  const auto bytes = ReadFile(std::string(ST_FIXTURE_DIR) + "/golden_batch.st2");
  ASSERT_EQ(bytes.size(), 384u);

  std::vector<RawEvent> want(7);
  for (RawEvent& e : want) {
    e.at.epoch = 3;
    e.local_worker = 1;
  }
  want[0].kind = EventKind::kOperates;
  want[0].at.nanos = 10;
  want[0].operator_id = 5;
  want[0].operator_address = {0, 2};
  want[1].kind = EventKind::kChannels;
  want[1].at.nanos = 20;
  want[1].channel_id = 2;
  want[1].src_operator = 4;
  want[1].dst_operator = 5;
  want[2].kind = EventKind::kScheduleStart;
  want[2].at.nanos = 100;
  want[2].operator_id = 5;
  want[3].kind = EventKind::kDataReceived;
  want[3].at.nanos = 150;
  want[3].channel_id = 2;
  want[3].seq_no = 7;
  want[3].remote_worker = 0;
  want[3].record_count = 500;
  want[4].kind = EventKind::kScheduleEnd;
  want[4].at.nanos = 200;
  want[4].operator_id = 5;
  want[4].record_count = 10;
  want[5].kind = EventKind::kProgressSent;
  want[5].at.nanos = 250;
  want[5].channel_id = std::uint64_t{1} << 63;
  want[5].seq_no = 3;
  want[6].kind = EventKind::kEpochEnd;
  want[6].at.nanos = 300;

  const Batch b = DecodeBatch(bytes);
  EXPECT_EQ(b.epoch, 3u);
  ASSERT_EQ(b.events.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_EQ(b.events[i], want[i]) << ToString(b.events[i]);
  EXPECT_EQ(EncodeBatch(3, want), bytes);
}

TEST(EventKindTest, Names) {
  EXPECT_EQ(EventKindName(EventKind::kScheduleStart), "ScheduleStart");
  EXPECT_EQ(EventKindName(EventKind::kTerminate), "Terminate");
  EXPECT_TRUE(IsMessageKind(EventKind::kProgressReceived));
  EXPECT_FALSE(IsMessageKind(EventKind::kEpochEnd));
  EXPECT_TRUE(IsSetupKind(EventKind::kChannels));
}

}  // namespace
}  // namespace snailtrail
