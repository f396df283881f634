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

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <memory>
#include <regex>
#include <thread>
#include <tuple>

#include "error.h"

namespace snailtrail {

std::vector<RawEvent> FilterEvents(std::span<const RawEvent> events) {
  std::vector<RawEvent> out;
  out.reserve(events.size());
  for (const RawEvent& e : events) {
    if (IsMessageKind(e.kind) && e.remote_worker && *e.remote_worker == e.local_worker) continue;
    out.push_back(e);
  }
  return out;
}

std::vector<std::size_t> RouteBatch(BatchKind kind, std::uint64_t epoch, std::uint32_t lbf) {
  if (lbf == 0) throw Error(ErrorCode::kInvalidArgument, "load balance factor must be >= 1");
  std::vector<std::size_t> out;
  switch (kind) {
    case BatchKind::kSetup:
      if (epoch != 0) {
        throw Error(ErrorCode::kInvalidArgument,
                    "setup batch at epoch " + std::to_string(epoch) + "; setup must precede epoch 0 logs");
      }
      [[fallthrough]];
    case BatchKind::kProgress:
      for (std::size_t i = 0; i < lbf; ++i) out.push_back(i);
      break;
    case BatchKind::kLog:
      out.push_back(static_cast<std::size_t>(epoch % lbf));
      break;
  }
  return out;
}

void WriteWorkerStream(std::span<const RawEvent> filtered, std::span<FrameSink* const> sinks,
                       std::size_t max_batch_events) {
  const auto lbf = static_cast<std::uint32_t>(sinks.size());
  std::vector<std::uint8_t> frame;
  std::vector<RawEvent> pending;
  BatchKind pending_kind = BatchKind::kLog;
  std::uint64_t pending_epoch = 0;

  auto flush = [&] {
    if (pending.empty()) return;
    frame.clear();
    AppendEncodedBatch(pending_epoch, pending, frame);
    for (std::size_t i : RouteBatch(pending_kind, pending_epoch, lbf)) sinks[i]->Write(frame);
    pending.clear();
  };

  for (const RawEvent& e : filtered) {
    BatchKind kind = BatchKind::kLog;
    if (IsSetupKind(e.kind)) kind = BatchKind::kSetup;
    if (e.kind == EventKind::kEpochEnd || e.kind == EventKind::kTerminate) kind = BatchKind::kProgress;
    if (!pending.empty() &&
        (kind != pending_kind || e.at.epoch != pending_epoch || pending.size() >= max_batch_events ||
         kind == BatchKind::kProgress)) {
      flush();
    }
    pending_kind = kind;
    pending_epoch = e.at.epoch;
    pending.push_back(e);
  }
  flush();
}

std::string WriterFileName(WorkerId worker, std::uint32_t writer) {
  return "worker_" + std::to_string(worker) + "_writer_" + std::to_string(writer) + ".st2";
}

std::vector<std::string> WriteOffline(const WorkerStreams& streams, std::uint32_t lbf,
                                      const std::string& dir) {
  if (lbf == 0) throw Error(ErrorCode::kInvalidArgument, "load balance factor must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create directory " + dir + ": " + ec.message());
  std::vector<std::string> paths;
  for (WorkerId w = 0; w < streams.size(); ++w) {
    std::vector<std::unique_ptr<FileFrameSink>> owned;
    std::vector<FrameSink*> sinks;
    for (std::uint32_t i = 0; i < lbf; ++i) {
      paths.push_back((std::filesystem::path(dir) / WriterFileName(w, i)).string());
      owned.push_back(std::make_unique<FileFrameSink>(paths.back()));
      sinks.push_back(owned.back().get());
    }
    const std::vector<RawEvent> filtered = FilterEvents(streams[w]);
    WriteWorkerStream(filtered, sinks);
    for (auto& s : owned) s->Close();
  }
  return paths;
}

void WriteOnline(const WorkerStreams& streams, std::uint32_t lbf, const std::string& host,
                 std::uint16_t port) {
  if (lbf == 0) throw Error(ErrorCode::kInvalidArgument, "load balance factor must be >= 1");
  std::vector<std::exception_ptr> errors(streams.size());
  std::vector<std::thread> threads;
  for (WorkerId w = 0; w < streams.size(); ++w) {
    threads.emplace_back([&, w] {
      try {
        std::vector<std::unique_ptr<SocketFrameSink>> owned;
        std::vector<FrameSink*> sinks;
        for (std::uint32_t i = 0; i < lbf; ++i) {
          owned.push_back(std::make_unique<SocketFrameSink>(
              host, port, "worker " + std::to_string(w) + " writer " + std::to_string(i)));
          sinks.push_back(owned.back().get());
        }
        const std::vector<RawEvent> filtered = FilterEvents(streams[w]);
        WriteWorkerStream(filtered, sinks);
        for (auto& s : owned) s->Close();
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::pair<std::string, std::uint16_t> ParseHostPort(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw Error(ErrorCode::kInvalidArgument, "expected host:port, got '" + text + "'");
  }
  const std::string port_text = text.substr(colon + 1);
  char* end = nullptr;
  const unsigned long port = std::strtoul(port_text.c_str(), &end, 10);
  if (*end != '\0' || port == 0 || port > 65535) {
    throw Error(ErrorCode::kInvalidArgument, "bad port in '" + text + "'");
  }
  return {text.substr(0, colon), static_cast<std::uint16_t>(port)};
}

std::pair<std::string, std::uint16_t> ResolveSourceAddress(
    const std::optional<std::string>& explicit_address) {
  if (explicit_address) return ParseHostPort(*explicit_address);
  const char* env = std::getenv("SNAILTRAIL_ADDR");
  if (env == nullptr || *env == '\0') {
    throw Error(ErrorCode::kInvalidArgument, "no profiler address given and SNAILTRAIL_ADDR is unset");
  }
  return ParseHostPort(env);
}

std::vector<std::string> ListTraceFiles(const std::string& dir) {
  std::error_code ec;
  std::filesystem::directory_iterator it(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot read directory " + dir + ": " + ec.message());
  static const std::regex kName(R"(worker_(\d+)_writer_(\d+)\.st2)");
  std::vector<std::tuple<unsigned long, unsigned long, std::string>> found;
  for (const auto& entry : it) {
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (entry.is_regular_file() && std::regex_match(name, m, kName)) {
      found.emplace_back(std::stoul(m[1]), std::stoul(m[2]), entry.path().string());
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> paths;
  for (auto& [w, i, p] : found) paths.push_back(p);
  return paths;
}

}  // namespace snailtrail
