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

// Dashboard backend: per-epoch result buffer, the JSON protocol and a
// WebSocket server. Protocol reference: docs/protocol.md.

#ifndef SNAILTRAIL_SRC_DASHBOARD_H_
#define SNAILTRAIL_SRC_DASHBOARD_H_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "analytics.h"
#include "json.hpp"
#include "pag.h"

namespace snailtrail {

enum class BundleKind { kPag, kMetrics, kKHops, kInvariants };

struct EpochBundle {
  std::uint64_t epoch = 0;
  std::vector<PagEdge> pag;
  std::vector<MetricsRow> metrics;
  std::vector<HopEdge> khops;
  std::vector<HopSummary> khop_summary;
  std::vector<InvariantViolation> violations;

  friend bool operator==(const EpochBundle&, const EpochBundle&) = default;
};

inline constexpr std::size_t kDefaultRetention = 1000;

// Thread-safe. An epoch is served once all four kinds arrived and the epoch
// was marked closed.
class EpochBuffer {
 public:
  explicit EpochBuffer(std::size_t retention = kDefaultRetention);

  void IngestPag(std::uint64_t epoch, std::vector<PagEdge> edges);
  void IngestMetrics(std::uint64_t epoch, std::vector<MetricsRow> rows);
  void IngestKHops(std::uint64_t epoch, std::vector<HopEdge> hops, std::vector<HopSummary> summary);
  void IngestViolations(std::uint64_t epoch, std::vector<InvariantViolation> violations);
  void MarkClosed(std::uint64_t epoch);

  std::optional<EpochBundle> Get(std::uint64_t epoch) const;
  // Newest complete epoch.
  std::optional<std::uint64_t> latest() const;
  std::vector<std::uint64_t> epochs() const;

  // Alert log replayed to clients that connect late.
  void AddViolation(const InvariantViolation& v);
  std::vector<InvariantViolation> violations() const;

  std::vector<std::string> warnings() const;

 private:
  struct Slot {
    EpochBundle bundle;
    unsigned kinds = 0;
    bool closed = false;
    bool complete() const { return closed && kinds == 0xF; }
  };
  Slot& Touch(std::uint64_t epoch, BundleKind kind);
  void Evict();

  std::size_t retention_;
  mutable std::mutex mu_;
  std::map<std::uint64_t, Slot> slots_;
  std::vector<InvariantViolation> violations_;
  std::vector<std::string> warnings_;
  std::optional<std::uint64_t> newest_;
};

nlohmann::json ToJson(const PagNode& n);
nlohmann::json ToJson(const PagEdge& e);
nlohmann::json ToJson(const MetricsRow& r);
nlohmann::json ToJson(const HopEdge& h);
nlohmann::json ToJson(const HopSummary& s);
nlohmann::json ToJson(const InvariantViolation& v);  // full invariant_violation frame
nlohmann::json EpochDataJson(const EpochBundle& b);

// Inverse of EpochDataJson; throws kInvalidArgument on schema mismatch.
EpochBundle EpochBundleFromJson(const nlohmann::json& j);
InvariantViolation ViolationFromJson(const nlohmann::json& j);

// Answers one client text frame. Never throws; protocol errors come back as
// error frames.
std::string HandleRequest(const EpochBuffer& buffer, std::string_view message);

// WebSocket server on its own I/O thread.
class DashboardServer {
 public:
  // Binds immediately; port 0 picks a free port.
  DashboardServer(EpochBuffer& buffer, const std::string& bind, std::uint16_t port,
                  std::size_t max_queued_frames = 4096);
  ~DashboardServer();
  DashboardServer(const DashboardServer&) = delete;
  DashboardServer& operator=(const DashboardServer&) = delete;

  std::uint16_t port() const;
  // Records `v` in the alert log and pushes it to every open connection, in
  // call order.
  void Publish(const InvariantViolation& v);
  std::size_t client_count() const;
  void Stop();

  struct Impl;  // opaque

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace snailtrail

#endif  // SNAILTRAIL_SRC_DASHBOARD_H_
