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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "adapter.h"
#include "error.h"
#include "replay.h"

namespace snailtrail {
namespace {

// Runs fn(i) for i in [0, n), task i on thread i mod threads.
template <typename Fn>
void ParallelFor(std::uint32_t threads, std::size_t n, Fn fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::uint32_t used = static_cast<std::uint32_t>(std::min<std::size_t>(threads, n));
  std::vector<std::exception_ptr> errors(used);
  std::vector<std::thread> pool;
  for (std::uint32_t t = 1; t < used; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += used) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  try {
    for (std::size_t i = 0; i < n; i += used) fn(i);
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::uint64_t MixKey(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a * 0x9e3779b97f4a7c15ULL ^ (b + 0x632be59bd9b4e019ULL);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  return x ^ (x >> 31);
}

struct Bucket {
  std::vector<LogRecord> data_sent, data_received, control_sent, control_received;
};

}  // namespace

Pag BuildEpochPag(const std::vector<std::vector<RawEvent>>& per_worker, const ScopeBlacklist& bl,
                  std::uint32_t threads, std::vector<LogRecord>* records_out) {
  const std::size_t n = per_worker.size();
  const std::uint32_t parts = std::max<std::uint32_t>(threads, 1);
  std::vector<std::vector<LogRecord>> records(n);
  std::vector<std::vector<PagEdge>> local(n);
  // buckets[producer][partition]
  std::vector<std::vector<Bucket>> buckets(n, std::vector<Bucket>(parts));

  ParallelFor(threads, n, [&](std::size_t w) {
    records[w] = ToLogRecords(PeelOps(per_worker[w], bl));
    LocalEdgeBuilder builder(local[w]);
    local[w].reserve(records[w].size());
    for (const LogRecord& r : records[w]) {
      builder.Push(r);
      switch (r.activity) {
        case Activity::kDataSent:
        case Activity::kDataReceived: {
          Bucket& b = buckets[w][MixKey(r.channel_id.value_or(kNone64), r.message_seq) % parts];
          (r.activity == Activity::kDataSent ? b.data_sent : b.data_received).push_back(r);
          break;
        }
        case Activity::kControlSent:
          buckets[w][MixKey(r.local_worker, r.message_seq) % parts].control_sent.push_back(r);
          break;
        case Activity::kControlReceived:
          buckets[w][MixKey(r.remote_worker.value_or(kNone32), r.message_seq) % parts].control_received.push_back(r);
          break;
        default:
          break;
      }
    }
    builder.Finish();
  });

  std::vector<std::vector<PagEdge>> remote(parts);
  std::vector<MatchDiagnostics> diags(parts);
  ParallelFor(threads, parts, [&](std::size_t p) {
    Bucket all;
    for (std::size_t w = 0; w < n; ++w) {
      Bucket& b = buckets[w][p];
      all.data_sent.insert(all.data_sent.end(), b.data_sent.begin(), b.data_sent.end());
      all.data_received.insert(all.data_received.end(), b.data_received.begin(), b.data_received.end());
      all.control_sent.insert(all.control_sent.end(), b.control_sent.begin(), b.control_sent.end());
      all.control_received.insert(all.control_received.end(), b.control_received.begin(),
                                  b.control_received.end());
    }
    remote[p] = BuildDataEdges(all.data_sent, all.data_received, &diags[p]);
    for (PagEdge& e : BuildControlEdges(all.control_sent, all.control_received, &diags[p])) {
      remote[p].push_back(e);
    }
    std::sort(remote[p].begin(), remote[p].end());
  });

  Pag pag;
  std::size_t total = 0;
  for (auto& l : local) total += l.size();
  for (auto& r : remote) total += r.size();
  pag.edges.reserve(total);
  for (auto& l : local) pag.edges.insert(pag.edges.end(), l.begin(), l.end());
  const auto local_end = static_cast<std::ptrdiff_t>(pag.edges.size());
  for (auto& r : remote) pag.edges.insert(pag.edges.end(), r.begin(), r.end());
  std::sort(pag.edges.begin() + local_end, pag.edges.end());
  for (auto& d : diags) {
    auto& out = pag.diagnostics;
    out.unmatched_sent.insert(out.unmatched_sent.end(), d.unmatched_sent.begin(), d.unmatched_sent.end());
    out.unmatched_received.insert(out.unmatched_received.end(), d.unmatched_received.begin(),
                                  d.unmatched_received.end());
    out.notes.insert(out.notes.end(), d.notes.begin(), d.notes.end());
  }
  if (records_out != nullptr) {
    records_out->clear();
    for (auto& r : records) records_out->insert(records_out->end(), r.begin(), r.end());
  }
  return pag;
}

Profiler::Profiler(std::vector<std::unique_ptr<FrameSource>> readers, ProfilerOptions options)
    : readers_(std::move(readers)), options_(options) {
  if (options_.source_peers == 0) throw Error(ErrorCode::kInvalidArgument, "source peers must be >= 1");
  if (readers_.size() != options_.source_peers) {
    throw Error(ErrorCode::kInvalidArgument,
                "--source-peers is " + std::to_string(options_.source_peers) + " but " +
                    std::to_string(readers_.size()) + " event streams are present");
  }
  if (options_.workers == 0) throw Error(ErrorCode::kInvalidArgument, "profiler workers must be >= 1");
}

std::unique_ptr<Profiler> Profiler::OpenDirectory(const std::string& dir, ProfilerOptions options) {
  std::vector<std::unique_ptr<FrameSource>> readers;
  for (const std::string& path : ListTraceFiles(dir)) readers.push_back(std::make_unique<FileFrameSource>(path));
  if (readers.empty()) throw Error(ErrorCode::kIo, "no worker_<w>_writer_<i>.st2 files in " + dir);
  return std::make_unique<Profiler>(std::move(readers), options);
}

namespace {

// One profiler worker's share of the readers.
struct Shard {
  std::unique_ptr<ReplaySource> source;
  std::size_t reader_count = 0;
  std::atomic<std::uint64_t> floor{0};
  // Guarded by the profiler mutex.
  std::map<std::uint64_t, std::map<WorkerId, std::vector<std::vector<RawEvent>>>> pending;
  std::uint64_t closed = 0;
  bool done = false;
  std::exception_ptr error;
  std::vector<std::string> diagnostics;
};

}  // namespace

void Profiler::Run(const std::function<void(EpochResult&)>& on_epoch) {
  const std::uint32_t threads = options_.workers;
  const std::size_t shard_count = std::min<std::size_t>(threads, readers_.size());
  std::vector<std::unique_ptr<Shard>> shards;
  {
    std::vector<std::vector<std::unique_ptr<FrameSource>>> split(shard_count);
    for (std::size_t i = 0; i < readers_.size(); ++i) split[i % shard_count].push_back(std::move(readers_[i]));
    readers_.clear();
    for (auto& s : split) {
      auto shard = std::make_unique<Shard>();
      shard->reader_count = s.size();
      shard->source = std::make_unique<ReplaySource>(std::move(s), shard->reader_count, options_.max_epochs_in_flight);
      shards.push_back(std::move(shard));
    }
  }

  std::mutex mu;
  std::condition_variable progress_cv;  // shard -> coordinator
  std::condition_variable floor_cv;     // coordinator -> shards
  std::vector<RawEvent> setup;
  std::atomic<bool> stop{false};

  auto reader_loop = [&](Shard& shard, bool yield_on_close) {
    try {
      for (;;) {
        if (stop.load()) break;
        shard.source->SetExternalFloor(shard.floor.load());
        StepResult step = shard.source->Step();
        if (step.status == StepResult::Status::kBatch) {
          std::lock_guard<std::mutex> lock(mu);
          for (RawEvent& e : step.batch.events) {
            if (IsSetupKind(e.kind)) {
              setup.push_back(std::move(e));
              continue;
            }
            if (e.kind == EventKind::kTerminate) continue;
            auto& parts = shard.pending[e.at.epoch][e.local_worker];
            if (parts.size() < shard.reader_count) parts.resize(shard.reader_count);
            parts[step.reader].push_back(std::move(e));
          }
        }
        if (!step.closed_epochs.empty() || step.status == StepResult::Status::kDone) {
          std::lock_guard<std::mutex> lock(mu);
          shard.closed = shard.source->next_open_epoch();
          shard.done = step.status == StepResult::Status::kDone;
          progress_cv.notify_all();
          if (yield_on_close) break;
        }
        if (step.status == StepResult::Status::kDone) break;
        if (step.status == StepResult::Status::kIdle) {
          std::vector<int> fds = shard.source->PollDescriptors();
          const bool sockets = std::any_of(fds.begin(), fds.end(), [](int fd) { return fd >= 0; });
          if (sockets) {
            WaitReadable(fds, 10);
          } else {
            std::unique_lock<std::mutex> lock(mu);
            const std::uint64_t seen = shard.floor.load();
            floor_cv.wait_for(lock, std::chrono::milliseconds(10),
                              [&] { return stop.load() || shard.floor.load() != seen; });
          }
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      shard.error = std::current_exception();
      shard.done = true;
      progress_cv.notify_all();
    }
  };

  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < shards.size(); ++i) pool.emplace_back(reader_loop, std::ref(*shards[i]), false);
  // With one shard the coordinator reads inline; otherwise shard 0 gets a
  // thread as well.
  if (shards.size() > 1) pool.emplace_back(reader_loop, std::ref(*shards[0]), false);

  std::exception_ptr failure;
  std::optional<ScopeBlacklist> blacklist;
  std::set<WorkerId> source_workers;
  std::uint64_t next_epoch = 0;

  auto process = [&](std::uint64_t epoch,
                     std::map<WorkerId, std::vector<std::vector<std::vector<RawEvent>>>>& gathered) {
    if (!blacklist) {
      blacklist = BuildBlacklistFromEvents(setup);
      for (const RawEvent& e : setup) source_workers.insert(e.local_worker);
    }
    EpochResult result;
    result.epoch = epoch;
    std::vector<std::vector<RawEvent>> per_worker;
    std::vector<WorkerId> ids;
    for (auto& [w, shard_parts] : gathered) {
      ids.push_back(w);
      source_workers.insert(w);
    }
    per_worker.resize(ids.size());
    ParallelFor(threads, ids.size(), [&](std::size_t i) {
      std::vector<std::vector<RawEvent>> parts;
      for (auto& shard_parts : gathered.at(ids[i])) {
        for (auto& p : shard_parts) {
          if (!p.empty()) parts.push_back(std::move(p));
        }
      }
      per_worker[i] = parts.empty() ? std::vector<RawEvent>{} : MergeWorkerStreams(std::move(parts));
    });
    for (auto& v : per_worker) result.event_count += v.size();
    const auto start = std::chrono::steady_clock::now();
    result.pag = BuildEpochPag(per_worker, *blacklist, threads, &result.records);
    result.build_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.source_workers = static_cast<std::uint32_t>(source_workers.size());
    on_epoch(result);
  };

  try {
    for (;;) {
      if (shards.size() == 1) {
        // Inline single-shard mode: step until something closes.
        Shard& s = *shards[0];
        s.floor.store(std::numeric_limits<std::uint64_t>::max());
        reader_loop(s, true);
      }
      std::unique_lock<std::mutex> lock(mu);
      auto global_closed = [&] {
        std::uint64_t c = std::numeric_limits<std::uint64_t>::max();
        for (auto& s : shards) {
          if (s->error) std::rethrow_exception(s->error);
          if (!s->done) c = std::min(c, s->closed);
        }
        return c;
      };
      auto all_done = [&] {
        return std::all_of(shards.begin(), shards.end(), [](const auto& s) { return s->done; });
      };
      progress_cv.wait(lock, [&] {
        for (auto& s : shards) {
          if (s->error) return true;
        }
        return all_done() || global_closed() > next_epoch;
      });
      const std::uint64_t closed = global_closed();
      const bool finished = all_done();
      // Epochs ready to process: below the global frontier, or everything
      // left once all streams ended.
      std::vector<std::uint64_t> ready;
      std::set<std::uint64_t> known;
      for (auto& s : shards) {
        for (auto& [e, m] : s->pending) known.insert(e);
      }
      for (std::uint64_t e : known) {
        if (e < closed || finished) ready.push_back(e);
      }
      std::vector<std::pair<std::uint64_t, std::map<WorkerId, std::vector<std::vector<std::vector<RawEvent>>>>>> batches;
      for (std::uint64_t e : ready) {
        auto& gathered = batches.emplace_back(e, decltype(batches)::value_type::second_type{}).second;
        for (auto& s : shards) {
          auto it = s->pending.find(e);
          if (it == s->pending.end()) continue;
          for (auto& [w, parts] : it->second) gathered[w].push_back(std::move(parts));
          s->pending.erase(it);
        }
      }
      if (closed != std::numeric_limits<std::uint64_t>::max()) next_epoch = std::max(next_epoch, closed);
      for (auto& s : shards) s->floor.store(closed);
      floor_cv.notify_all();
      lock.unlock();
      for (auto& [e, gathered] : batches) process(e, gathered);
      if (finished) break;
    }
  } catch (...) {
    failure = std::current_exception();
  }
  stop.store(true);
  floor_cv.notify_all();
  for (auto& t : pool) t.join();
  for (auto& s : shards) {
    for (const std::string& d : s->source->diagnostics()) diagnostics_.push_back(d);
  }
  if (failure) std::rethrow_exception(failure);
  for (auto& s : shards) {
    if (s->error) std::rethrow_exception(s->error);
  }
}

}  // namespace snailtrail
