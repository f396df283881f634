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

#include "adapter.h"

#include <gtest/gtest.h>
#include <stdlib.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <thread>

#include "error.h"
#include "frame_io.h"
#include "test_util.h"

namespace snailtrail {
namespace {

using testing::TempDir;

// Every frame of one source, decoded.
std::vector<Batch> ReadAll(FrameSource& src) {
  std::vector<Batch> out;
  std::vector<std::uint8_t> payload;
  for (;;) {
    const PollResult r = src.TryNext(payload);
    if (r == PollResult::kEnd) break;
    if (r == PollResult::kNotReady) {
      const int fd = src.fd();
      WaitReadable(std::span<const int>(&fd, 1), 100);
      continue;
    }
    out.push_back(DecodePayload(payload));
  }
  return out;
}

std::vector<Batch> ReadFile(const std::string& path) {
  FileFrameSource src(path);
  return ReadAll(src);
}

RawEvent Message(EventKind kind, WorkerId local, std::optional<WorkerId> remote, std::uint64_t nanos) {
  RawEvent e;
  e.kind = kind;
  e.local_worker = local;
  e.remote_worker = remote;
  e.channel_id = 0;
  e.at = {0, nanos};
  return e;
}

// Rebuilds one worker's stream from its writers' frames: broadcast copies
// must be identical, then everything is ordered by nanos.
std::vector<RawEvent> Reconstruct(const std::vector<std::vector<Batch>>& writers) {
  std::map<std::uint64_t, RawEvent> by_nanos;
  for (const auto& frames : writers) {
    for (const Batch& b : frames) {
      for (const RawEvent& e : b.events) {
        auto [it, fresh] = by_nanos.emplace(e.at.nanos, e);
        if (!fresh) {
          EXPECT_EQ(it->second, e) << "conflicting events at nanos " << e.at.nanos;
        }
      }
    }
  }
  std::vector<RawEvent> out;
  for (auto& [nanos, e] : by_nanos) out.push_back(e);
  return out;
}

TEST(FilterEventsTest, DropsWorkerLocalMessages) {
  std::vector<RawEvent> in = {
      Message(EventKind::kDataSent, 1, 1, 1),
      Message(EventKind::kDataSent, 1, 2, 2),
      Message(EventKind::kProgressSent, 1, std::nullopt, 3),
      Message(EventKind::kProgressReceived, 1, 1, 4),
      Message(EventKind::kDataReceived, 1, 0, 5),
  };
  RawEvent sched;
  sched.kind = EventKind::kScheduleStart;
  sched.local_worker = 1;
  sched.operator_id = 3;
  sched.at = {0, 6};
  in.push_back(sched);
  const auto out = FilterEvents(in);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[0], in[1]);
  EXPECT_EQ(out[1], in[2]);
  EXPECT_EQ(out[2], in[4]);
  EXPECT_EQ(out[3], in[5]);
  EXPECT_TRUE(FilterEvents({}).empty());
}

TEST(FilterEventsTest, CrossOnlyTraceUnchanged) {
  SimConfig c;
  c.workers = 2;
  c.epochs = 3;
  c.rng_seed = 4;
  c.operators = {{0, {0}, 100, 0}, {1, {0, 1}, 500, 0}};
  const WorkerStreams s = Simulate(c);
  for (const auto& stream : s) EXPECT_EQ(FilterEvents(stream), stream);
}

TEST(RouteBatchTest, Table) {
  using V = std::vector<std::size_t>;
  EXPECT_EQ(RouteBatch(BatchKind::kProgress, 5, 2), (V{0, 1}));
  EXPECT_EQ(RouteBatch(BatchKind::kLog, 7, 1), (V{0}));
  EXPECT_EQ(RouteBatch(BatchKind::kLog, 0, 3), (V{0}));
  EXPECT_EQ(RouteBatch(BatchKind::kLog, 1, 3), (V{1}));
  EXPECT_EQ(RouteBatch(BatchKind::kLog, 2, 3), (V{2}));
  EXPECT_EQ(RouteBatch(BatchKind::kLog, 3, 3), (V{0}));
  EXPECT_EQ(RouteBatch(BatchKind::kSetup, 0, 3), (V{0, 1, 2}));
  EXPECT_THROW(RouteBatch(BatchKind::kSetup, 1, 3), Error);
  EXPECT_THROW(RouteBatch(BatchKind::kLog, 1, 0), Error);
}

TEST(WriteOfflineTest, FileLayout) {
  TempDir dir;
  const auto paths = WriteOffline(Simulate(DataSkewConfig(100)), 2, dir.path());
  ASSERT_EQ(paths.size(), 8u);
  EXPECT_EQ(std::filesystem::path(paths[3]).filename(), "worker_1_writer_1.st2");
  EXPECT_EQ(ListTraceFiles(dir.path()), paths);

  SimConfig two;
  two.workers = 2;
  two.epochs = 2;
  two.rng_seed = 1;
  two.operators = {{0, {0}, 100, 0}};
  TempDir d2;
  EXPECT_EQ(WriteOffline(Simulate(two), 2, d2.path()).size(), 4u);
}

TEST(WriteOfflineTest, ZeroEpochsIsOneTerminateFrame) {
  SimConfig c;
  c.workers = 1;
  c.epochs = 0;
  c.rng_seed = 1;
  c.operators = {{0, {0}, 100, 0}};
  TempDir dir;
  const auto paths = WriteOffline(Simulate(c), 1, dir.path());
  ASSERT_EQ(paths.size(), 1u);
  const auto frames = ReadFile(paths[0]);
  ASSERT_EQ(frames.size(), 1u);
  ASSERT_EQ(frames[0].events.size(), 1u);
  EXPECT_EQ(frames[0].events[0].kind, EventKind::kTerminate);
}

TEST(WriteOfflineTest, ReconstructsFilteredStreams) {
  std::mt19937_64 rng(8);
  for (std::uint32_t lbf : {1u, 2u, 3u}) {
    for (int i = 0; i < 4; ++i) {
      const SimConfig c = testing::RandomSimConfig(rng);
      const WorkerStreams s = Simulate(c);
      TempDir dir;
      WriteOffline(s, lbf, dir.path());
      for (WorkerId w = 0; w < c.workers; ++w) {
        std::vector<std::vector<Batch>> writers;
        for (std::uint32_t k = 0; k < lbf; ++k) {
          writers.push_back(ReadFile(dir / WriterFileName(w, k)));
          // Per-writer order and marker coverage.
          std::uint64_t last = 0;
          std::set<std::uint64_t> markers;
          std::set<std::uint64_t> log_epochs;
          for (const Batch& b : writers.back()) {
            for (const RawEvent& e : b.events) {
              EXPECT_GE(e.at.nanos, last);
              last = e.at.nanos;
              EXPECT_EQ(e.at.epoch, b.epoch);
              if (e.kind == EventKind::kEpochEnd) markers.insert(b.epoch);
              if (!IsSetupKind(e.kind) && e.kind != EventKind::kEpochEnd && e.kind != EventKind::kTerminate) {
                log_epochs.insert(b.epoch);
                EXPECT_EQ(b.epoch % lbf, k) << "log batch on the wrong writer";
              }
            }
          }
          for (std::uint64_t ep : log_epochs) EXPECT_TRUE(markers.count(ep));
          EXPECT_EQ(markers.size(), c.epochs) << "markers go to every writer";
        }
        EXPECT_EQ(Reconstruct(writers), FilterEvents(s[w]));
      }
    }
  }
}

TEST(WriteOfflineTest, UnwritableDirectory) {
  TempDir dir;
  std::ofstream(dir / "file") << "x";
  try {
    WriteOffline(Simulate(DataSkewConfig(10)), 1, dir / "file");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
    EXPECT_NE(std::string(e.what()).find("file"), std::string::npos);
  }
}

TEST(WriteOnlineTest, MatchesOffline) {
  const WorkerStreams s = Simulate(DataSkewConfig(200));
  for (std::uint32_t lbf : {1u, 2u}) {
    TempDir dir;
    WriteOffline(s, lbf, dir.path());

    FrameListener listener("127.0.0.1", 0);
    std::thread sender([&] { WriteOnline(s, lbf, "127.0.0.1", listener.port()); });
    auto readers = listener.Accept(s.size() * lbf);
    std::map<WorkerId, std::vector<std::vector<Batch>>> online;
    for (auto& r : readers) {
      auto frames = ReadAll(*r);
      ASSERT_FALSE(frames.empty());
      online[frames.front().events.front().local_worker].push_back(std::move(frames));
    }
    sender.join();
    for (WorkerId w = 0; w < s.size(); ++w) {
      std::vector<std::vector<Batch>> offline;
      for (std::uint32_t k = 0; k < lbf; ++k) offline.push_back(ReadFile(dir / WriterFileName(w, k)));
      ASSERT_EQ(online[w].size(), lbf);
      EXPECT_EQ(Reconstruct(online[w]), Reconstruct(offline));
    }
  }
}

TEST(WriteOnlineTest, ConnectionRefused) {
  std::uint16_t port = 0;
  {
    FrameListener probe("127.0.0.1", 0);
    port = probe.port();
  }
  try {
    WriteOnline(Simulate(DataSkewConfig(10)), 1, "127.0.0.1", port);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNetwork);
    EXPECT_NE(std::string(e.what()).find("worker"), std::string::npos) << e.what();
  }
}

TEST(AddressTest, ParseAndEnvironment) {
  EXPECT_EQ(ParseHostPort("127.0.0.1:8000"), (std::pair<std::string, std::uint16_t>{"127.0.0.1", 8000}));
  EXPECT_THROW(ParseHostPort("localhost"), Error);
  EXPECT_THROW(ParseHostPort("localhost:"), Error);
  EXPECT_THROW(ParseHostPort("localhost:99999"), Error);
  EXPECT_THROW(ParseHostPort("localhost:12ab"), Error);

  unsetenv("SNAILTRAIL_ADDR");
  EXPECT_THROW(ResolveSourceAddress(std::nullopt), Error);
  setenv("SNAILTRAIL_ADDR", "10.0.0.2:4100", 1);
  EXPECT_EQ(ResolveSourceAddress(std::nullopt).second, 4100);
  EXPECT_EQ(ResolveSourceAddress(std::string("a:1")).first, "a");
  unsetenv("SNAILTRAIL_ADDR");
}

TEST(ListTraceFilesTest, SortsNumericallyAndIgnoresOthers) {
  TempDir dir;
  for (const char* name : {"worker_10_writer_0.st2", "worker_2_writer_1.st2", "worker_2_writer_0.st2",
                           "notes.txt", "worker_x_writer_0.st2"}) {
    std::ofstream(dir / name) << "";
  }
  const auto files = ListTraceFiles(dir.path());
  ASSERT_EQ(files.size(), 3u);
  EXPECT_EQ(std::filesystem::path(files[0]).filename(), "worker_2_writer_0.st2");
  EXPECT_EQ(std::filesystem::path(files[1]).filename(), "worker_2_writer_1.st2");
  EXPECT_EQ(std::filesystem::path(files[2]).filename(), "worker_10_writer_0.st2");
  EXPECT_THROW(ListTraceFiles(dir / "missing"), Error);
}

}  // namespace
}  // namespace snailtrail
