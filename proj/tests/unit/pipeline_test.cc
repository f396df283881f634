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

#include "pipeline.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "adapter.h"
#include "error.h"
#include "simulator.h"
#include "test_util.h"

namespace snailtrail {
namespace {

using testing::TempDir;

struct Closed {
  std::uint64_t epoch;
  std::uint32_t source_workers;
  std::vector<PagEdge> edges;
  std::size_t records;

  friend bool operator==(const Closed&, const Closed&) = default;
};

std::vector<Closed> RunDir(const std::string& dir, std::uint32_t peers, std::uint32_t threads,
                           std::uint32_t flight) {
  ProfilerOptions o;
  o.source_peers = peers;
  o.workers = threads;
  o.max_epochs_in_flight = flight;
  auto p = Profiler::OpenDirectory(dir, o);
  std::vector<Closed> out;
  p->Run([&](EpochResult& r) {
    std::vector<PagEdge> edges = r.pag.edges;
    std::sort(edges.begin(), edges.end());
    out.push_back({r.epoch, r.source_workers, std::move(edges), r.records.size()});
  });
  return out;
}

TEST(ProfilerTest, MatchesDirectConstruction) {
  std::mt19937_64 rng(53);
  for (int iter = 0; iter < 8; ++iter) {
    const SimConfig c = testing::RandomSimConfig(rng);
    const WorkerStreams s = Simulate(c);
    const std::uint32_t lbf = 1 + iter % 2;
    TempDir dir;
    WriteOffline(s, lbf, dir.path());
    const auto got = RunDir(dir.path(), c.workers * lbf, 1, 1);
    const auto want = testing::SplitEpochs(c, s);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].epoch, i);
      EXPECT_EQ(got[i].source_workers, c.workers);
      std::vector<PagEdge> edges = BuildPag(want[i].records).edges;
      std::sort(edges.begin(), edges.end());
      EXPECT_EQ(got[i].edges, edges) << "iteration " << iter << " epoch " << i;
      EXPECT_EQ(got[i].records, want[i].records.size());
    }
  }
}

TEST(ProfilerTest, ThreadsAndFlightDoNotChangeResults) {
  const SimConfig c = DataSkewConfig(150);
  TempDir dir;
  WriteOffline(Simulate(c), 2, dir.path());
  const auto base = RunDir(dir.path(), 8, 1, 1);
  ASSERT_EQ(base.size(), c.epochs);
  EXPECT_EQ(RunDir(dir.path(), 8, 4, 1), base);
  EXPECT_EQ(RunDir(dir.path(), 8, 2, 3), base);
  EXPECT_EQ(RunDir(dir.path(), 8, 3, 10), base);
}

TEST(BuildEpochPagTest, ThreadCountInvariant) {
  const SimConfig c = DataSkewConfig(200);
  const WorkerStreams s = Simulate(c);
  const auto epochs = testing::SplitEpochs(c, s);
  const ScopeBlacklist bl = BuildBlacklistFromEvents(epochs[0].setup);
  std::vector<LogRecord> r1, r4;
  const Pag one = BuildEpochPag(epochs[2].per_worker, bl, 1, &r1);
  const Pag four = BuildEpochPag(epochs[2].per_worker, bl, 4, &r4);
  EXPECT_EQ(one.edges, four.edges);
  EXPECT_EQ(r1, r4);
  EXPECT_EQ(r1, epochs[2].records);
}

TEST(ProfilerTest, OpenDirectoryErrors) {
  TempDir empty;
  try {
    Profiler::OpenDirectory(empty.path(), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
  EXPECT_THROW(Profiler::OpenDirectory(empty / "missing", {}), Error);
}

TEST(ProfilerTest, SourcePeerMismatch) {
  TempDir dir;
  WriteOffline(Simulate(DataSkewConfig(10)), 1, dir.path());
  ProfilerOptions o;
  o.source_peers = 3;
  try {
    Profiler::OpenDirectory(dir.path(), o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
    EXPECT_NE(std::string(e.what()).find("4 event streams"), std::string::npos) << e.what();
  }
  o.source_peers = 4;
  o.workers = 0;
  EXPECT_THROW(Profiler::OpenDirectory(dir.path(), o), Error);
}

}  // namespace
}  // namespace snailtrail
