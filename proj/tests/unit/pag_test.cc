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

#include <gtest/gtest.h>

#include <map>
#include <random>

#include "error.h"
#include "simulator.h"
#include "test_util.h"

namespace snailtrail {
namespace {

LogRecord Rec(Activity a, std::uint64_t nanos, WorkerId w = 0) {
  LogRecord r;
  r.activity = a;
  r.at = {0, nanos};
  r.local_worker = w;
  return r;
}

LogRecord Sched(Activity a, OperatorId op, std::uint64_t nanos, std::uint64_t rc = 0) {
  LogRecord r = Rec(a, nanos);
  r.operator_id = op;
  r.record_count = rc;
  return r;
}

LogRecord Data(Activity a, WorkerId local, WorkerId remote, ChannelId ch, std::uint64_t seq, std::uint64_t nanos,
               std::uint64_t rc = 0) {
  LogRecord r = Rec(a, nanos, local);
  r.remote_worker = remote;
  r.channel_id = ch;
  r.message_seq = seq;
  r.record_count = rc;
  return r;
}

TEST(LocalEdgesTest, ProcessingAroundData) {
  const std::vector<LogRecord> in = {Sched(Activity::kScheduleStart, 5, 10),
                                     Data(Activity::kDataReceived, 0, 1, 2, 0, 20, 4),
                                     Sched(Activity::kScheduleEnd, 5, 30, 10)};
  const auto edges = BuildLocalEdges(in);
  ASSERT_EQ(edges.size(), 2u);
  for (const PagEdge& e : edges) {
    EXPECT_EQ(e.type, EdgeType::kProcessing);
    EXPECT_EQ(e.operator_id, 5u);
  }
  EXPECT_EQ(edges[0].record_count + edges[1].record_count, 10u);
  EXPECT_EQ(edges[0].duration_ns(), 10u);
}

TEST(LocalEdgesTest, EmptyScheduleSpins) {
  const std::vector<LogRecord> in = {Sched(Activity::kScheduleStart, 5, 10), Sched(Activity::kScheduleEnd, 5, 30)};
  const auto edges = BuildLocalEdges(in);
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_EQ(edges[0].type, EdgeType::kSpinning);
  EXPECT_EQ(edges[0].record_count, 0u);
  // A schedule that reports records is processing even without messages.
  const std::vector<LogRecord> busy = {Sched(Activity::kScheduleStart, 5, 10),
                                       Sched(Activity::kScheduleEnd, 5, 30, 3)};
  EXPECT_EQ(BuildLocalEdges(busy)[0].type, EdgeType::kProcessing);
}

TEST(LocalEdgesTest, GapClassification) {
  const std::vector<LogRecord> in = {Sched(Activity::kScheduleStart, 5, 10), Sched(Activity::kScheduleEnd, 5, 20),
                                     Data(Activity::kDataReceived, 0, 1, 2, 0, 50),
                                     Data(Activity::kDataSent, 0, 1, 2, 1, 60),
                                     Data(Activity::kDataReceived, 0, 0, 2, 2, 70)};
  const auto edges = BuildLocalEdges(in);
  ASSERT_EQ(edges.size(), 4u);
  EXPECT_EQ(edges[1].type, EdgeType::kWaiting);
  EXPECT_EQ(edges[1].src.at.nanos, 20u);
  EXPECT_EQ(edges[1].dst.at.nanos, 50u);
  EXPECT_EQ(edges[2].type, EdgeType::kBusy);  // ends in a send
  EXPECT_EQ(edges[3].type, EdgeType::kBusy);  // local receive
}

TEST(LocalEdgesTest, TrivialInputs) {
  EXPECT_TRUE(BuildLocalEdges({}).empty());
  const std::vector<LogRecord> one = {Rec(Activity::kControlSent, 1)};
  EXPECT_TRUE(BuildLocalEdges(one).empty());
  std::vector<LogRecord> k;
  for (std::uint64_t i = 0; i < 9; ++i) k.push_back(Rec(Activity::kControlSent, 10 * i + 1));
  const auto edges = BuildLocalEdges(k);
  EXPECT_EQ(edges.size(), 8u);
  for (const PagEdge& e : edges) EXPECT_EQ(e.type, EdgeType::kBusy);
}

TEST(LocalEdgesTest, RejectsUnorderedOrMixedInput) {
  const std::vector<LogRecord> back = {Rec(Activity::kControlSent, 5), Rec(Activity::kControlSent, 4)};
  EXPECT_THROW(BuildLocalEdges(back), Error);
  const std::vector<LogRecord> mixed = {Rec(Activity::kControlSent, 5, 0), Rec(Activity::kControlSent, 6, 1)};
  EXPECT_THROW(BuildLocalEdges(mixed), Error);
}

TEST(DataEdgesTest, MatchByChannelAndSeq) {
  const std::vector<LogRecord> sent = {Data(Activity::kDataSent, 0, 1, 1, 7, 100, 500)};
  const std::vector<LogRecord> recv = {Data(Activity::kDataReceived, 1, 0, 1, 7, 300)};
  const auto edges = BuildDataEdges(sent, recv);
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_EQ(edges[0].src, (PagNode{0, {0, 100}}));
  EXPECT_EQ(edges[0].dst, (PagNode{1, {0, 300}}));
  EXPECT_EQ(edges[0].type, EdgeType::kDataMessage);
  EXPECT_EQ(edges[0].record_count, 500u);

  MatchDiagnostics diag;
  EXPECT_TRUE(BuildDataEdges(sent, {}, &diag).empty());
  ASSERT_EQ(diag.unmatched_sent.size(), 1u);
  EXPECT_EQ(diag.unmatched_sent[0], sent[0]);
}

TEST(DataEdgesTest, DuplicateKeysAreAmbiguous) {
  const std::vector<LogRecord> sent = {Data(Activity::kDataSent, 0, 1, 1, 7, 100),
                                       Data(Activity::kDataSent, 2, 1, 1, 7, 110)};
  const std::vector<LogRecord> recv = {Data(Activity::kDataReceived, 1, 0, 1, 7, 300)};
  try {
    BuildDataEdges(sent, recv);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAmbiguousMatch);
  }
  const std::vector<LogRecord> two = {recv[0], recv[0]};
  EXPECT_THROW(BuildDataEdges({sent.data(), 1}, two), Error);
}

TEST(ControlEdgesTest, BroadcastFanOut) {
  std::vector<LogRecord> sent = {Rec(Activity::kControlSent, 10, 0)};
  sent[0].message_seq = 4;
  std::vector<LogRecord> recv;
  for (WorkerId w = 1; w <= 3; ++w) {
    LogRecord r = Rec(Activity::kControlReceived, 100 + w, w);
    r.remote_worker = 0;
    r.message_seq = 4;
    recv.push_back(r);
  }
  const auto edges = BuildControlEdges(sent, recv);
  ASSERT_EQ(edges.size(), 3u);
  for (const PagEdge& e : edges) {
    EXPECT_EQ(e.src, (PagNode{0, {0, 10}}));
    EXPECT_EQ(e.type, EdgeType::kControlMessage);
  }
  MatchDiagnostics diag;
  EXPECT_TRUE(BuildControlEdges(sent, {}, &diag).empty());
  EXPECT_EQ(diag.unmatched_sent.size(), 1u);
  EXPECT_TRUE(BuildControlEdges({}, recv, &diag).empty());
  EXPECT_EQ(diag.unmatched_received.size(), 3u);
}

TEST(EdgeTypeTest, Names) {
  for (EdgeType t : kAllEdgeTypes) EXPECT_EQ(ParseEdgeType(EdgeTypeName(t)), t);
  EXPECT_FALSE(ParseEdgeType("Sleeping"));
  EXPECT_EQ(ToString(PagNode{2, {3, 4}}), "2@(3,4)");
}

// Structural properties on simulator epochs, with counts taken from the raw
// streams rather than from the builder.
TEST(BuildPagTest, SimulatorEpochs) {
  std::mt19937_64 rng(31);
  for (int iter = 0; iter < 25; ++iter) {
    const SimConfig c = testing::RandomSimConfig(rng);
    const WorkerStreams s = Simulate(c);
    for (const auto& t : testing::SplitEpochs(c, s)) {
      const Pag pag = BuildPag(t.records);
      std::map<WorkerId, std::size_t> per_worker;
      std::set<PagNode> nodes;
      for (const LogRecord& r : t.records) {
        per_worker[r.local_worker]++;
        nodes.insert({r.local_worker, r.at});
      }
      std::size_t want = 0;
      for (auto& [w, n] : per_worker) want += n - 1;
      std::multiset<std::pair<WorkerId, WorkerId>> routes;
      std::size_t control = 0;
      for (const auto& events : t.per_worker) {
        for (const RawEvent& e : events) {
          if (e.kind == EventKind::kDataSent) routes.insert({e.local_worker, *e.remote_worker});
          if (e.kind == EventKind::kProgressReceived) ++control;
        }
      }
      want += routes.size() + control;
      ASSERT_EQ(pag.edges.size(), want) << "iteration " << iter << " epoch " << t.epoch;

      std::multiset<std::pair<WorkerId, WorkerId>> got;
      std::map<PagNode, int> in_local, out_local;
      for (const PagEdge& e : pag.edges) {
        EXPECT_EQ(e.src.at.epoch, t.epoch);
        EXPECT_EQ(e.dst.at.epoch, t.epoch);
        EXPECT_LE(e.src.at.nanos, e.dst.at.nanos);
        EXPECT_TRUE(nodes.count(e.src) && nodes.count(e.dst)) << "dangling endpoint";
        if (e.type == EdgeType::kDataMessage) got.insert({e.src.worker, e.dst.worker});
        if (!IsRemote(e.type)) {
          EXPECT_EQ(e.src.worker, e.dst.worker);
          out_local[e.src]++;
          in_local[e.dst]++;
        } else {
          EXPECT_NE(e.src.worker, e.dst.worker);
        }
      }
      EXPECT_EQ(got, routes);
      // One path per worker: every node but the ends has one local edge in and out.
      for (const PagNode& n : nodes) {
        EXPECT_LE(in_local[n], 1);
        EXPECT_LE(out_local[n], 1);
      }
      for (auto& [w, n] : per_worker) {
        std::size_t starts = 0;
        for (const PagNode& node : nodes) {
          if (node.worker == w && in_local[node] == 0) ++starts;
        }
        EXPECT_EQ(starts, 1u);
      }
      EXPECT_EQ(BuildPag(t.records).edges, pag.edges);
    }
  }
}

TEST(BuildPagTest, SkewEpochDataGoesToWorkerZero) {
  const SimConfig c = DataSkewConfig(200);
  for (const auto& t : testing::SplitEpochs(c, Simulate(c))) {
    std::size_t data = 0;
    for (const PagEdge& e : BuildPag(t.records).edges) {
      if (e.type != EdgeType::kDataMessage) continue;
      ++data;
      EXPECT_EQ(e.dst.worker, 0u);
    }
    EXPECT_GT(data, 0u);
  }
}

}  // namespace
}  // namespace snailtrail
