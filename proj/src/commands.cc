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

#include "commands.h"

#include <cstdio>

namespace snailtrail {

std::uint64_t RunMetrics(Profiler& profiler, std::ostream& csv) {
  std::uint64_t epochs = 0;
  profiler.Run([&](EpochResult& r) {
    WriteMetricsCsv(csv, Metrics(r.epoch, r.pag.edges));
    csv.flush();
    ++epochs;
  });
  return epochs;
}

std::uint64_t RunInvariants(Profiler& profiler, const InvariantConfig& cfg, const LineFn& line) {
  std::uint64_t epochs = 0;
  profiler.Run([&](EpochResult& r) {
    for (const InvariantViolation& v : CheckInvariants(r.epoch, r.pag.edges, r.records, r.source_workers, cfg)) {
      line(FormatViolation(v));
    }
    ++epochs;
  });
  return epochs;
}

std::uint64_t RunAlgo(Profiler& profiler, std::uint32_t k, const LineFn& line) {
  std::uint64_t epochs = 0;
  profiler.Run([&](EpochResult& r) {
    for (const HopSummary& s : WeightHops(KHops(r.pag.edges, k))) {
      line("epoch=" + std::to_string(r.epoch) + " hop=" + std::to_string(s.hop) + " type=" +
           std::string(EdgeTypeName(s.activity_type)) + " count=" + std::to_string(s.count) +
           " weight_ns=" + std::to_string(s.weight_ns));
    }
    ++epochs;
  });
  return epochs;
}

std::uint64_t RunInspect(Profiler& profiler, const LineFn& line) {
  std::uint64_t epochs = 0;
  profiler.Run([&](EpochResult& r) {
    std::uint64_t data = 0;
    std::uint64_t control = 0;
    for (const PagEdge& e : r.pag.edges) {
      if (e.type == EdgeType::kDataMessage) ++data;
      if (e.type == EdgeType::kControlMessage) ++control;
    }
    char ms[32];
    std::snprintf(ms, sizeof(ms), "%.3f", r.build_seconds * 1e3);
    line("epoch=" + std::to_string(r.epoch) + " events=" + std::to_string(r.event_count) +
         " records=" + std::to_string(r.records.size()) + " edges=" + std::to_string(r.pag.edges.size()) +
         " local=" + std::to_string(r.pag.edges.size() - data - control) + " data=" + std::to_string(data) +
         " control=" + std::to_string(control) + " build_ms=" + ms);
    ++epochs;
  });
  line("epochs=" + std::to_string(epochs));
  return epochs;
}

EpochBundle AnalyzeEpoch(const EpochResult& r, const InvariantConfig& cfg, std::uint32_t k) {
  EpochBundle b;
  b.epoch = r.epoch;
  b.pag = r.pag.edges;
  b.metrics = Metrics(r.epoch, r.pag.edges);
  b.khops = KHops(r.pag.edges, k);
  b.khop_summary = WeightHops(b.khops);
  b.violations = CheckInvariants(r.epoch, r.pag.edges, r.records, r.source_workers, cfg);
  return b;
}

std::uint64_t RunDashboard(Profiler& profiler, const InvariantConfig& cfg, EpochBuffer& buffer,
                           DashboardServer& server, std::uint32_t k, const LineFn& line) {
  std::uint64_t epochs = 0;
  profiler.Run([&](EpochResult& r) {
    EpochBundle b = AnalyzeEpoch(r, cfg, k);
    for (const InvariantViolation& v : b.violations) {
      server.Publish(v);
      if (line) line(FormatViolation(v));
    }
    buffer.IngestPag(b.epoch, std::move(b.pag));
    buffer.IngestMetrics(b.epoch, std::move(b.metrics));
    buffer.IngestKHops(b.epoch, std::move(b.khops), std::move(b.khop_summary));
    buffer.IngestViolations(b.epoch, std::move(b.violations));
    buffer.MarkClosed(b.epoch);
    ++epochs;
  });
  return epochs;
}

}  // namespace snailtrail
