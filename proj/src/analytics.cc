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

#include "analytics.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "error.h"

namespace snailtrail {

std::vector<MetricsRow> Metrics(std::uint64_t epoch, std::span<const PagEdge> edges) {
  std::map<std::tuple<WorkerId, WorkerId, EdgeType>, MetricsRow> groups;
  for (const PagEdge& e : edges) {
    MetricsRow& row = groups[{e.src.worker, e.dst.worker, e.type}];
    row.count++;
    row.total_duration_ns += e.duration_ns();
    row.total_records += e.record_count;
  }
  std::vector<MetricsRow> rows;
  rows.reserve(groups.size());
  for (auto& [key, row] : groups) {
    row.epoch = epoch;
    std::tie(row.from_worker, row.to_worker, row.activity_type) = key;
    rows.push_back(row);
  }
  return rows;
}

std::string MetricsCsvLine(const MetricsRow& r) {
  std::string s;
  s += std::to_string(r.epoch);
  s += ',';
  s += std::to_string(r.from_worker);
  s += ',';
  s += std::to_string(r.to_worker);
  s += ',';
  s += EdgeTypeName(r.activity_type);
  s += ',';
  s += std::to_string(r.count);
  s += ',';
  s += std::to_string(r.total_duration_ns);
  s += ',';
  s += std::to_string(r.total_records);
  return s;
}

void WriteMetricsCsv(std::ostream& out, std::span<const MetricsRow> rows) {
  for (const MetricsRow& r : rows) out << MetricsCsvLine(r) << '\n';
}

std::uint64_t InvariantConfig::MillisToNanos(double ms) {
  if (!(ms > 0) || !std::isfinite(ms)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must be a positive number of milliseconds");
  }
  return static_cast<std::uint64_t>(std::llround(ms * 1e6));
}

std::string_view InvariantRuleName(InvariantRule r) {
  switch (r) {
    case InvariantRule::kEpochMax: return "EpochMax";
    case InvariantRule::kMessageMax: return "MessageMax";
    case InvariantRule::kOperatorMax: return "OperatorMax";
    case InvariantRule::kProgressMax: return "ProgressMax";
    case InvariantRule::kProgressAbsent: return "ProgressAbsent";
  }
  return "?";
}

std::vector<InvariantViolation> CheckInvariants(std::uint64_t epoch, std::span<const PagEdge> edges,
                                                std::span<const LogRecord> records,
                                                std::uint32_t workers, const InvariantConfig& cfg) {
  std::vector<InvariantViolation> out;
  auto violation = [&](InvariantRule rule, const PagEdge& e, std::uint64_t duration) {
    InvariantViolation v;
    v.rule = rule;
    v.epoch = epoch;
    v.duration_ns = duration;
    v.source_worker = e.src.worker;
    v.target_worker = e.dst.worker;
    v.edge_id = e.src;
    v.operator_id = e.operator_id;
    v.activity_type = e.type;
    return v;
  };

  for (const PagEdge& e : edges) {
    if (cfg.message_max_ns && IsRemote(e.type) && e.duration_ns() > *cfg.message_max_ns) {
      out.push_back(violation(InvariantRule::kMessageMax, e, e.duration_ns()));
    }
    if (cfg.operator_max_ns && e.type == EdgeType::kProcessing && e.duration_ns() > *cfg.operator_max_ns) {
      out.push_back(violation(InvariantRule::kOperatorMax, e, e.duration_ns()));
    }
  }

  if (cfg.epoch_max_ns && !edges.empty()) {
    const PagEdge* first = &edges[0];
    std::uint64_t lo = edges[0].src.at.nanos;
    std::uint64_t hi = edges[0].dst.at.nanos;
    for (const PagEdge& e : edges) {
      if (e.src.at.nanos < lo || (e.src.at.nanos == lo && e.src < first->src)) {
        lo = e.src.at.nanos;
        first = &e;
      }
      hi = std::max(hi, e.dst.at.nanos);
    }
    if (hi - lo > *cfg.epoch_max_ns) {
      InvariantViolation v = violation(InvariantRule::kEpochMax, *first, hi - lo);
      v.target_worker.reset();
      v.operator_id.reset();
      v.activity_type.reset();
      out.push_back(v);
    }
  }

  if (cfg.progress_max_ns) {
    std::map<WorkerId, std::vector<const PagEdge*>> by_receiver;
    for (const PagEdge& e : edges) {
      if (e.type == EdgeType::kControlMessage) by_receiver[e.dst.worker].push_back(&e);
    }
    for (auto& [w, list] : by_receiver) {
      std::sort(list.begin(), list.end(), [](const PagEdge* a, const PagEdge* b) { return *a < *b; });
      std::stable_sort(list.begin(), list.end(),
                       [](const PagEdge* a, const PagEdge* b) { return a->dst.at < b->dst.at; });
      for (std::size_t i = 1; i < list.size(); ++i) {
        const std::uint64_t gap = list[i]->dst.at.nanos - list[i - 1]->dst.at.nanos;
        if (gap > *cfg.progress_max_ns) out.push_back(violation(InvariantRule::kProgressMax, *list[i], gap));
      }
    }
  }

  // Evaluated per worker: a worker that stops sending progress is a breach
  // even while its peers keep talking.
  if (workers >= 2) {
    std::set<WorkerId> senders;
    std::map<WorkerId, Pair> first_node;
    for (const LogRecord& r : records) {
      if (r.activity == Activity::kControlSent) senders.insert(r.local_worker);
      auto [it, inserted] = first_node.emplace(r.local_worker, r.at);
      if (!inserted && r.at < it->second) it->second = r.at;
    }
    for (WorkerId w = 0; w < workers; ++w) {
      if (senders.contains(w)) continue;
      InvariantViolation v;
      v.rule = InvariantRule::kProgressAbsent;
      v.epoch = epoch;
      v.source_worker = w;
      auto it = first_node.find(w);
      v.edge_id = {w, it != first_node.end() ? it->second : Pair{epoch, 0}};
      out.push_back(v);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string FormatViolation(const InvariantViolation& v) {
  std::ostringstream os;
  os << "VIOLATION rule=" << InvariantRuleName(v.rule) << " epoch=" << v.epoch << " worker=" << v.source_worker
     << " duration_ns=" << v.duration_ns << " edge=" << ToString(v.edge_id);
  if (v.operator_id) os << " operator=" << *v.operator_id;
  if (v.activity_type) os << " type=" << EdgeTypeName(*v.activity_type);
  return os.str();
}

std::vector<HopEdge> KHops(std::span<const PagEdge> edges, std::uint32_t k) {
  std::vector<HopEdge> out;
  if (k == 0 || edges.empty()) return out;
  std::unordered_map<PagNode, std::vector<std::uint32_t>, NodeHash> by_dst;
  std::unordered_map<PagNode, std::vector<std::uint32_t>, NodeHash> by_src;
  by_dst.reserve(edges.size());
  by_src.reserve(edges.size());
  for (std::uint32_t i = 0; i < edges.size(); ++i) {
    by_dst[edges[i].dst].push_back(i);
    by_src[edges[i].src].push_back(i);
  }
  auto ending_at = [&](const PagNode& n) -> const std::vector<std::uint32_t>* {
    auto it = by_dst.find(n);
    return it == by_dst.end() ? nullptr : &it->second;
  };

  std::vector<std::uint32_t> depth(edges.size(), 0);
  std::vector<std::uint32_t> frontier;
  auto reach = [&](std::uint32_t i, std::uint32_t d) {
    if (depth[i] != 0) return;
    depth[i] = d;
    frontier.push_back(i);
  };

  for (std::uint32_t wi = 0; wi < edges.size(); ++wi) {
    const PagEdge& w = edges[wi];
    if (w.type != EdgeType::kWaiting) continue;
    // (i) remote edges into the waiting edge's end.
    if (auto* list = ending_at(w.dst)) {
      for (std::uint32_t i : *list) {
        if (IsRemote(edges[i].type)) reach(i, 1);
      }
    }
    // (ii) the processing edge leaving that node and data arriving at it.
    if (auto it = by_src.find(w.dst); it != by_src.end()) {
      for (std::uint32_t p : it->second) {
        if (edges[p].type != EdgeType::kProcessing) continue;
        reach(p, 1);
        for (const PagNode& n : {edges[p].src, edges[p].dst}) {
          if (auto* list = ending_at(n)) {
            for (std::uint32_t i : *list) {
              if (edges[i].type == EdgeType::kDataMessage) reach(i, 1);
            }
          }
        }
      }
    }
    // (iii) remote edges into the waiting edge's start.
    if (auto* list = ending_at(w.src)) {
      for (std::uint32_t i : *list) {
        if (IsRemote(edges[i].type)) reach(i, 1);
      }
    }
  }

  std::vector<std::uint32_t> current;
  for (std::uint32_t d = 1; d < k && !frontier.empty(); ++d) {
    current.swap(frontier);
    frontier.clear();
    for (std::uint32_t e : current) {
      if (auto* list = ending_at(edges[e].src)) {
        for (std::uint32_t i : *list) reach(i, d + 1);
      }
    }
  }

  for (std::uint32_t i = 0; i < edges.size(); ++i) {
    if (depth[i] != 0) out.push_back({depth[i], edges[i]});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<HopSummary> WeightHops(std::span<const HopEdge> hops) {
  std::map<std::pair<std::uint32_t, EdgeType>, HopSummary> groups;
  for (const HopEdge& h : hops) {
    HopSummary& s = groups[{h.hop, h.edge.type}];
    s.hop = h.hop;
    s.activity_type = h.edge.type;
    s.count++;
    s.weight_ns += h.edge.duration_ns();
  }
  std::vector<HopSummary> out;
  out.reserve(groups.size());
  for (auto& [key, s] : groups) out.push_back(s);
  return out;
}

}  // namespace snailtrail
