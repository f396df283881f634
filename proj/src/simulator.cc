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

#include "simulator.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "error.h"
#include "json.hpp"

namespace snailtrail {

namespace {

std::uint64_t Mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

[[noreturn]] void Invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidConfig, "invalid config: " + what);
}

struct Topology {
  std::unordered_map<OperatorId, std::size_t> op_index;
  std::unordered_map<ChannelId, std::size_t> channel_index;
  std::vector<std::size_t> leaf_order;               // topological
  std::vector<std::vector<std::size_t>> scopes;      // outermost first
  std::vector<std::vector<std::size_t>> out_channels;
  std::vector<std::size_t> channel_dst;              // operator index
  std::vector<bool> is_source;
  std::vector<std::size_t> source_rank;              // index among sources
  std::uint32_t longest_path = 0;
  std::vector<ExchangePolicy> policy;
  std::vector<std::uint64_t> channel_extra_ns;
  std::vector<std::uint64_t> op_extra_ns;
  std::vector<std::uint64_t> stall_from;             // per worker
  std::uint64_t schedule_events_per_slot_set = 0;    // SS+SE for all leaves

  bool Stalled(WorkerId w, std::uint64_t epoch) const { return epoch >= stall_from[w]; }
};

bool IsPrefix(const std::vector<std::uint32_t>& p, const std::vector<std::uint32_t>& a) {
  return p.size() < a.size() && std::equal(p.begin(), p.end(), a.begin());
}

Topology BuildTopology(const SimConfig& c) {
  if (c.workers == 0) Invalid("workers must be >= 1");
  if (c.rounds_per_epoch == 0) Invalid("rounds_per_epoch must be >= 1");
  if (c.batch_size == 0) Invalid("batch_size must be >= 1");
  if (c.operators.empty()) Invalid("dataflow has no operators");

  Topology t;
  std::set<std::vector<std::uint32_t>> addresses;
  for (std::size_t i = 0; i < c.operators.size(); ++i) {
    const OperatorSpec& op = c.operators[i];
    if (op.id == kNone64) Invalid("operator id is reserved");
    if (!t.op_index.emplace(op.id, i).second) {
      Invalid("duplicate operator id " + std::to_string(op.id));
    }
    if (op.address.empty() || op.address.front() != 0) {
      Invalid("operator " + std::to_string(op.id) +
              " address must be rooted at [0]");
    }
    if (op.address.size() > 255) Invalid("operator address too long");
    if (!addresses.insert(op.address).second) {
      Invalid("duplicate operator address for operator " + std::to_string(op.id));
    }
  }

  const std::size_t n = c.operators.size();
  std::vector<bool> leaf(n, true);
  t.scopes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (IsPrefix(c.operators[i].address, c.operators[j].address)) leaf[i] = false;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (IsPrefix(c.operators[j].address, c.operators[i].address)) t.scopes[i].push_back(j);
    }
    std::sort(t.scopes[i].begin(), t.scopes[i].end(), [&](std::size_t a, std::size_t b) {
      return c.operators[a].address.size() < c.operators[b].address.size();
    });
  }

  t.out_channels.resize(n);
  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t k = 0; k < c.channels.size(); ++k) {
    const ChannelSpec& ch = c.channels[k];
    if (ch.id == kNone64 || ch.id == kControlChannel) Invalid("channel id is reserved");
    if (!t.channel_index.emplace(ch.id, k).second) {
      Invalid("duplicate channel id " + std::to_string(ch.id));
    }
    auto s = t.op_index.find(ch.src_operator);
    auto d = t.op_index.find(ch.dst_operator);
    if (s == t.op_index.end() || d == t.op_index.end()) {
      Invalid("channel " + std::to_string(ch.id) + " references an unknown operator");
    }
    if (!leaf[s->second] || !leaf[d->second]) {
      Invalid("channel " + std::to_string(ch.id) + " must connect leaf operators");
    }
    if (s->second == d->second) Invalid("channel " + std::to_string(ch.id) + " is a self-loop");
    if (ch.exchange.kind == ExchangeKind::kAllToWorker && ch.exchange.target >= c.workers) {
      Invalid("channel " + std::to_string(ch.id) + " targets a nonexistent worker");
    }
    t.out_channels[s->second].push_back(k);
    t.channel_dst.push_back(d->second);
    indegree[d->second]++;
    t.policy.push_back(ch.exchange);
  }

  // Kahn's algorithm over leaves, stable by declaration order.
  std::vector<std::size_t> remaining = indegree;
  std::vector<std::uint32_t> depth(n, 0);
  std::vector<bool> done(n, false);
  for (;;) {
    bool progressed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!leaf[i] || done[i] || remaining[i] != 0) continue;
      done[i] = true;
      progressed = true;
      t.leaf_order.push_back(i);
      for (std::size_t k : t.out_channels[i]) {
        const std::size_t d = t.channel_dst[k];
        depth[d] = std::max(depth[d], depth[i] + 1);
        t.longest_path = std::max(t.longest_path, depth[d]);
        remaining[d]--;
      }
    }
    if (!progressed) break;
  }
  const auto leaves = static_cast<std::size_t>(std::count(leaf.begin(), leaf.end(), true));
  if (t.leaf_order.size() != leaves) Invalid("channels form a cycle");

  t.is_source.assign(n, false);
  t.source_rank.assign(n, 0);
  std::size_t sources = 0;
  for (std::size_t i : t.leaf_order) {
    if (indegree[i] == 0) {
      t.is_source[i] = true;
      t.source_rank[i] = sources++;
    }
    t.schedule_events_per_slot_set += 2 * (1 + t.scopes[i].size());
  }

  t.channel_extra_ns.assign(c.channels.size(), 0);
  t.op_extra_ns.assign(n, 0);
  t.stall_from.assign(c.workers, std::numeric_limits<std::uint64_t>::max());
  for (const FaultSpec& f : c.faults) {
    if (const auto* skew = std::get_if<SkewExchange>(&f)) {
      auto it = t.channel_index.find(skew->channel);
      if (it == t.channel_index.end()) Invalid("skew_exchange references an unknown channel");
      if (skew->target_worker >= c.workers) Invalid("skew_exchange targets a nonexistent worker");
      t.policy[it->second] = {ExchangeKind::kAllToWorker, skew->target_worker};
    } else if (const auto* slow = std::get_if<SlowOperator>(&f)) {
      auto it = t.op_index.find(slow->op);
      if (it == t.op_index.end()) Invalid("slow_operator references an unknown operator");
      t.op_extra_ns[it->second] += slow->added_ns;
    } else if (const auto* stall = std::get_if<StallWorker>(&f)) {
      if (stall->worker >= c.workers) Invalid("stall_worker references a nonexistent worker");
      t.stall_from[stall->worker] = std::min(t.stall_from[stall->worker], stall->from_epoch);
    } else if (const auto* delay = std::get_if<DelayedMessage>(&f)) {
      auto it = t.channel_index.find(delay->channel);
      if (it == t.channel_index.end()) Invalid("delayed_message references an unknown channel");
      t.channel_extra_ns[it->second] += delay->added_ns;
    }
  }
  return t;
}

// Splits one unit of records over destination workers; empty parts are
// omitted and parts come in ascending worker order.
std::vector<std::pair<WorkerId, std::vector<std::uint64_t>>> Split(
    const std::vector<std::uint64_t>& ids, const ExchangePolicy& policy,
    std::uint32_t workers) {
  std::vector<std::pair<WorkerId, std::vector<std::uint64_t>>> parts;
  switch (policy.kind) {
    case ExchangeKind::kAllToWorker:
      if (!ids.empty()) parts.emplace_back(policy.target, ids);
      break;
    case ExchangeKind::kUniform: {
      const std::size_t base = ids.size() / workers;
      const std::size_t extra = ids.size() % workers;
      std::size_t pos = 0;
      for (WorkerId w = 0; w < workers; ++w) {
        const std::size_t len = base + (w < extra ? 1 : 0);
        if (len == 0) continue;
        parts.emplace_back(w, std::vector<std::uint64_t>(ids.begin() + pos, ids.begin() + pos + len));
        pos += len;
      }
      break;
    }
    case ExchangeKind::kHashMod: {
      std::vector<std::vector<std::uint64_t>> buckets(workers);
      for (std::uint64_t id : ids) buckets[Mix(id) % workers].push_back(id);
      for (WorkerId w = 0; w < workers; ++w) {
        if (!buckets[w].empty()) parts.emplace_back(w, std::move(buckets[w]));
      }
      break;
    }
  }
  return parts;
}

std::uint64_t BatchCount(const SimConfig& c) {
  return (c.records_per_worker_per_epoch + c.batch_size - 1) / c.batch_size;
}

std::vector<std::uint64_t> BatchIds(const SimConfig& c, std::uint64_t epoch, WorkerId w,
                                    std::size_t source_rank, std::uint64_t batch) {
  const std::uint64_t first = batch * c.batch_size;
  const std::uint64_t len = std::min(c.batch_size, c.records_per_worker_per_epoch - first);
  std::vector<std::uint64_t> ids(len);
  const std::uint64_t base = Mix(Mix(Mix(c.rng_seed ^ epoch) ^ w) ^ source_rank);
  for (std::uint64_t i = 0; i < len; ++i) ids[i] = Mix(base + first + i);
  return ids;
}

struct PendingData {
  std::size_t channel = 0;
  WorkerId from = 0;
  std::uint64_t seq = 0;
  std::uint64_t arrival = 0;
  std::uint64_t order = 0;
  std::vector<std::uint64_t> ids;
};

struct PendingProgress {
  WorkerId from = 0;
  std::uint64_t seq = 0;
  std::uint64_t arrival = 0;
};

struct WorkerState {
  std::uint64_t clock = 0;
  std::uint64_t event_seq = 0;
  std::uint64_t progress_seq = 0;
  std::vector<std::vector<PendingData>> inbox;  // per operator index
  std::vector<PendingProgress> progress;
  std::vector<RawEvent>* out = nullptr;
};

class Simulation {
 public:
  Simulation(const SimConfig& c, const Topology& t)
      : c_(c), t_(t), rng_(c.rng_seed), states_(c.workers), channel_seq_(c.channels.size(), 0) {
    streams_.resize(c.workers);
    for (WorkerId w = 0; w < c.workers; ++w) {
      states_[w].out = &streams_[w];
      states_[w].inbox.resize(c.operators.size());
    }
  }

  WorkerStreams Run() {
    if (c_.epochs > 0) EmitSetup();
    for (std::uint64_t e = 0; e < c_.epochs; ++e) RunEpoch(e);
    for (WorkerId w = 0; w < c_.workers; ++w) {
      Emit(w, EventKind::kTerminate, c_.epochs, 1);
    }
    return std::move(streams_);
  }

 private:
  std::uint64_t Jitter(std::uint64_t mean) {
    if (mean == 0) return 0;
    std::uniform_int_distribution<std::uint64_t> d(mean - mean / 2, mean + mean / 2);
    return d(rng_);
  }

  RawEvent& Emit(WorkerId w, EventKind kind, std::uint64_t epoch, std::uint64_t gap,
                 std::uint64_t not_before = 0) {
    WorkerState& s = states_[w];
    s.clock = std::max(s.clock + std::max<std::uint64_t>(gap, 1), not_before);
    RawEvent& e = s.out->emplace_back();
    e.at = {epoch, s.clock};
    e.local_worker = w;
    e.kind = kind;
    if (kind != EventKind::kEpochEnd && kind != EventKind::kTerminate) e.seq_no = s.event_seq;
    s.event_seq++;
    return e;
  }

  void EmitSetup() {
    for (WorkerId w = 0; w < c_.workers; ++w) {
      for (const OperatorSpec& op : c_.operators) {
        RawEvent& e = Emit(w, EventKind::kOperates, 0, 10);
        e.operator_id = op.id;
        e.operator_address = op.address;
      }
      for (const ChannelSpec& ch : c_.channels) {
        RawEvent& e = Emit(w, EventKind::kChannels, 0, 10);
        e.channel_id = ch.id;
        e.src_operator = ch.src_operator;
        e.dst_operator = ch.dst_operator;
      }
    }
  }

  void SyncClocks() {
    std::uint64_t latest = 0;
    for (const WorkerState& s : states_) latest = std::max(latest, s.clock);
    for (WorkerState& s : states_) s.clock = latest + c_.epoch_gap_ns;
  }

  void RunEpoch(std::uint64_t epoch) {
    SyncClocks();
    for (std::uint32_t r = 0; r < c_.rounds_per_epoch; ++r) {
      for (WorkerId w = 0; w < c_.workers; ++w) {
        for (std::size_t op : t_.leaf_order) RunSlot(w, op, epoch, r, /*drain=*/false);
        SendProgress(w, epoch);
      }
    }
    for (std::uint32_t step = 0; step < t_.longest_path; ++step) {
      for (WorkerId w = 0; w < c_.workers; ++w) {
        for (std::size_t op : t_.leaf_order) RunSlot(w, op, epoch, 0, /*drain=*/true);
      }
    }
    for (WorkerId w = 0; w < c_.workers; ++w) {
      for (const auto& box : states_[w].inbox) {
        if (!box.empty()) throw Error(ErrorCode::kInternal, "simulator left undelivered data");
      }
      ReceiveProgress(w, epoch, /*all=*/true);
      Emit(w, EventKind::kEpochEnd, epoch, 10);
    }
  }

  void ReceiveProgress(WorkerId w, std::uint64_t epoch, bool all) {
    WorkerState& s = states_[w];
    std::vector<PendingProgress> ready;
    std::vector<PendingProgress> later;
    for (const PendingProgress& p : s.progress) {
      (all || p.arrival <= s.clock ? ready : later).push_back(p);
    }
    s.progress = std::move(later);
    std::sort(ready.begin(), ready.end(), [](const PendingProgress& a, const PendingProgress& b) {
      return std::tie(a.arrival, a.from, a.seq) < std::tie(b.arrival, b.from, b.seq);
    });
    for (const PendingProgress& p : ready) {
      RawEvent& e = Emit(w, EventKind::kProgressReceived, epoch, 20, p.arrival);
      e.channel_id = kControlChannel;
      e.seq_no = p.seq;
      e.remote_worker = p.from;
    }
  }

  void SendProgress(WorkerId w, std::uint64_t epoch) {
    if (t_.Stalled(w, epoch)) return;
    WorkerState& s = states_[w];
    RawEvent& e = Emit(w, EventKind::kProgressSent, epoch, 50);
    e.channel_id = kControlChannel;
    e.seq_no = s.progress_seq++;
    // No peer means broadcast. A lone worker only talks to itself.
    if (c_.workers == 1) e.remote_worker = w;
    const std::uint64_t sent = e.at.nanos;
    for (WorkerId peer = 0; peer < c_.workers; ++peer) {
      if (peer == w) continue;
      states_[peer].progress.push_back({w, e.seq_no, sent + Jitter(c_.network_delay_ns)});
    }
  }

  void RunSlot(WorkerId w, std::size_t op, std::uint64_t epoch, std::uint32_t round, bool drain) {
    WorkerState& s = states_[w];
    ReceiveProgress(w, epoch, /*all=*/false);

    std::vector<PendingData> consumed;
    std::vector<PendingData> kept;
    for (PendingData& m : s.inbox[op]) {
      (drain || m.arrival <= s.clock ? consumed : kept).push_back(std::move(m));
    }
    s.inbox[op] = std::move(kept);
    std::sort(consumed.begin(), consumed.end(), [](const PendingData& a, const PendingData& b) {
      return std::tie(a.arrival, a.order) < std::tie(b.arrival, b.order);
    });
    // A drain slot idles until its first input is available.
    std::uint64_t start_not_before = 0;
    if (drain && !consumed.empty()) start_not_before = consumed.front().arrival;

    const OperatorSpec& spec = c_.operators[op];
    for (std::size_t scope : t_.scopes[op]) {
      Emit(w, EventKind::kScheduleStart, epoch, 10, start_not_before).operator_id =
          c_.operators[scope].id;
    }
    Emit(w, EventKind::kScheduleStart, epoch, 10, start_not_before).operator_id = spec.id;
    s.clock += Jitter(spec.service_ns) + t_.op_extra_ns[op];

    std::uint64_t consumed_records = 0;
    for (PendingData& m : consumed) {
      RawEvent& e = Emit(w, EventKind::kDataReceived, epoch, 30, m.arrival);
      e.channel_id = c_.channels[m.channel].id;
      e.seq_no = m.seq;
      e.remote_worker = m.from;
      e.record_count = m.ids.size();
      consumed_records += m.ids.size();
      s.clock += spec.record_cost_ns * m.ids.size();
      Forward(w, op, epoch, m.ids);
    }
    if (t_.is_source[op] && !drain) {
      for (std::uint64_t b = round; b < BatchCount(c_); b += c_.rounds_per_epoch) {
        std::vector<std::uint64_t> ids = BatchIds(c_, epoch, w, t_.source_rank[op], b);
        s.clock += spec.record_cost_ns * ids.size();
        Forward(w, op, epoch, ids);
      }
    }

    RawEvent& end = Emit(w, EventKind::kScheduleEnd, epoch, 10);
    end.operator_id = spec.id;
    end.record_count = consumed_records;
    for (auto it = t_.scopes[op].rbegin(); it != t_.scopes[op].rend(); ++it) {
      Emit(w, EventKind::kScheduleEnd, epoch, 10).operator_id = c_.operators[*it].id;
    }
  }

  void Forward(WorkerId w, std::size_t op, std::uint64_t epoch,
               const std::vector<std::uint64_t>& ids) {
    for (std::size_t k : t_.out_channels[op]) {
      for (auto& [dest, part] : Split(ids, t_.policy[k], c_.workers)) {
        RawEvent& e = Emit(w, EventKind::kDataSent, epoch, 40);
        e.channel_id = c_.channels[k].id;
        e.seq_no = channel_seq_[k]++;
        e.remote_worker = dest;
        e.record_count = part.size();
        const std::uint64_t delay =
            (dest == w ? c_.local_delay_ns : Jitter(c_.network_delay_ns)) + t_.channel_extra_ns[k];
        PendingData m;
        m.channel = k;
        m.from = w;
        m.seq = e.seq_no;
        m.arrival = e.at.nanos + std::max<std::uint64_t>(delay, 1);
        m.order = next_order_++;
        m.ids = std::move(part);
        states_[dest].inbox[t_.channel_dst[k]].push_back(std::move(m));
      }
    }
  }

  const SimConfig& c_;
  const Topology& t_;
  std::mt19937_64 rng_;
  std::vector<WorkerState> states_;
  WorkerStreams streams_;
  std::vector<std::uint64_t> channel_seq_;  // channel-wide, unique across senders
  std::uint64_t next_order_ = 0;
};

void CountForward(const SimConfig& c, const Topology& t, std::size_t op,
                  const std::vector<std::uint64_t>& ids, KindCounts& counts) {
  for (std::size_t k : t.out_channels[op]) {
    for (auto& [dest, part] : Split(ids, t.policy[k], c.workers)) {
      counts[static_cast<std::size_t>(EventKind::kDataSent)]++;
      counts[static_cast<std::size_t>(EventKind::kDataReceived)]++;
      CountForward(c, t, t.channel_dst[k], part, counts);
    }
  }
}

using Json = nlohmann::json;

std::vector<std::uint32_t> ParseAddress(const Json& j) {
  std::vector<std::uint32_t> a;
  for (const Json& v : j) a.push_back(v.get<std::uint32_t>());
  return a;
}

ExchangePolicy ParseExchange(const Json& ch) {
  const std::string kind = ch.value("exchange", std::string("uniform"));
  if (kind == "uniform") return {ExchangeKind::kUniform, 0};
  if (kind == "hash_mod") return {ExchangeKind::kHashMod, 0};
  if (kind == "all_to_worker") {
    if (!ch.contains("worker")) Invalid("all_to_worker exchange needs 'worker'");
    return {ExchangeKind::kAllToWorker, ch.at("worker").get<WorkerId>()};
  }
  Invalid("unknown exchange policy '" + kind + "'");
}

FaultSpec ParseFault(const Json& f) {
  const std::string kind = f.at("kind").get<std::string>();
  if (kind == "skew_exchange") {
    return SkewExchange{f.at("channel").get<ChannelId>(), f.at("worker").get<WorkerId>()};
  }
  if (kind == "slow_operator") {
    return SlowOperator{f.at("operator").get<OperatorId>(), f.at("added_ns").get<std::uint64_t>()};
  }
  if (kind == "stall_worker") {
    return StallWorker{f.at("worker").get<WorkerId>(), f.value("from_epoch", std::uint64_t{0})};
  }
  if (kind == "delayed_message") {
    return DelayedMessage{f.at("channel").get<ChannelId>(), f.at("added_ns").get<std::uint64_t>()};
  }
  Invalid("unknown fault kind '" + kind + "'");
}

}  // namespace

void ValidateSimConfig(const SimConfig& config) { (void)BuildTopology(config); }

WorkerStreams Simulate(const SimConfig& config) {
  const Topology t = BuildTopology(config);
  return Simulation(config, t).Run();
}

std::uint64_t EventCountEstimate::EpochTotal(std::size_t epoch) const {
  std::uint64_t total = 0;
  for (std::uint64_t v : per_epoch.at(epoch)) total += v;
  return total;
}

EventCountEstimate EstimateEventCounts(const SimConfig& c) {
  const Topology t = BuildTopology(c);
  auto slot = [](EventKind k) { return static_cast<std::size_t>(k); };
  EventCountEstimate est;
  est.terminate[slot(EventKind::kTerminate)] = c.workers;
  if (c.epochs == 0) return est;
  est.setup[slot(EventKind::kOperates)] = std::uint64_t{c.workers} * c.operators.size();
  est.setup[slot(EventKind::kChannels)] = std::uint64_t{c.workers} * c.channels.size();

  const std::uint64_t slot_sets = c.rounds_per_epoch + t.longest_path;
  for (std::uint64_t e = 0; e < c.epochs; ++e) {
    KindCounts k{};
    const std::uint64_t schedules = c.workers * slot_sets * t.schedule_events_per_slot_set / 2;
    k[slot(EventKind::kScheduleStart)] = schedules;
    k[slot(EventKind::kScheduleEnd)] = schedules;
    std::uint64_t senders = 0;
    for (WorkerId w = 0; w < c.workers; ++w) senders += t.Stalled(w, e) ? 0 : 1;
    k[slot(EventKind::kProgressSent)] = senders * c.rounds_per_epoch;
    k[slot(EventKind::kProgressReceived)] = senders * c.rounds_per_epoch * (c.workers - 1);
    for (WorkerId w = 0; w < c.workers; ++w) {
      for (std::size_t op : t.leaf_order) {
        if (!t.is_source[op]) continue;
        for (std::uint64_t b = 0; b < BatchCount(c); ++b) {
          CountForward(c, t, op, BatchIds(c, e, w, t.source_rank[op], b), k);
        }
      }
    }
    k[slot(EventKind::kEpochEnd)] = c.workers;
    est.per_epoch.push_back(k);
  }
  return est;
}

KindCounts CountKinds(std::span<const RawEvent> events) {
  KindCounts k{};
  for (const RawEvent& e : events) k[static_cast<std::size_t>(e.kind)]++;
  return k;
}

std::vector<std::string> CheckContract(const WorkerStreams& streams) {
  std::vector<std::string> problems;
  auto fail = [&](WorkerId w, const std::string& what) {
    problems.push_back("worker " + std::to_string(w) + ": " + what);
  };
  // (channel, sender, seq) -> (nanos, epoch, receiver); progress keyed by (sender, seq).
  std::map<std::tuple<ChannelId, WorkerId, std::uint64_t>, std::tuple<std::uint64_t, std::uint64_t, WorkerId>> sent;
  std::map<std::pair<WorkerId, std::uint64_t>, std::pair<std::uint64_t, std::uint64_t>> progress_sent;
  std::uint64_t progress_sends = 0;
  std::uint64_t max_epochs = 0;

  for (WorkerId w = 0; w < streams.size(); ++w) {
    const auto& s = streams[w];
    std::uint64_t open = 0;  // epochs closed so far == epoch currently open
    bool terminated = false;
    bool setup_done = false;
    std::uint64_t last_nanos = 0;
    bool first = true;
    std::set<std::uint64_t> epochs_with_schedules;
    for (const RawEvent& e : s) {
      if (terminated) {
        fail(w, "event after Terminate");
        break;
      }
      if (e.local_worker != w) fail(w, "foreign event " + ToString(e));
      if (!first && e.at.nanos <= last_nanos) fail(w, "nanos not strictly increasing at " + ToString(e));
      first = false;
      last_nanos = e.at.nanos;
      if (IsSetupKind(e.kind)) {
        if (setup_done || e.at.epoch != 0) fail(w, "setup event after log events");
        if (e.kind == EventKind::kOperates && (!e.operator_id || e.operator_address.empty())) {
          fail(w, "Operates without operator identity");
        }
        continue;
      }
      setup_done = true;
      if (e.kind == EventKind::kTerminate) {
        terminated = true;
        continue;
      }
      if (e.at.epoch > open) fail(w, "epoch " + std::to_string(e.at.epoch) + " event before EpochEnd(" + std::to_string(open) + ")");
      if (e.at.epoch < open) fail(w, "late event of closed epoch " + std::to_string(e.at.epoch));
      switch (e.kind) {
        case EventKind::kEpochEnd:
          if (e.at.epoch == open) ++open;
          break;
        case EventKind::kScheduleStart:
        case EventKind::kScheduleEnd:
          if (!e.operator_id) fail(w, "schedule without operator");
          epochs_with_schedules.insert(e.at.epoch);
          break;
        case EventKind::kDataSent:
        case EventKind::kDataReceived:
        case EventKind::kProgressSent:
        case EventKind::kProgressReceived:
          // Broadcast progress names no peer.
          if (!e.channel_id || (!e.remote_worker && e.kind != EventKind::kProgressSent)) {
            fail(w, "message without channel/peer " + ToString(e));
            break;
          }
          if (e.kind == EventKind::kDataSent) {
            if (!sent.emplace(std::make_tuple(*e.channel_id, w, e.seq_no),
                              std::make_tuple(e.at.nanos, e.at.epoch, *e.remote_worker)).second) {
              fail(w, "duplicate data send " + ToString(e));
            }
          } else if (e.kind == EventKind::kProgressSent) {
            progress_sends++;
            progress_sent.emplace(std::make_pair(w, e.seq_no), std::make_pair(e.at.nanos, e.at.epoch));
          }
          break;
        default:
          break;
      }
    }
    if (!terminated) fail(w, "stream does not end with Terminate");
    for (std::uint64_t ep = 0; ep < open; ++ep) {
      if (!epochs_with_schedules.contains(ep)) fail(w, "epoch " + std::to_string(ep) + " has no processing events");
    }
    max_epochs = std::max(max_epochs, open);
    if (w > 0 && open != max_epochs) fail(w, "worker closed a different number of epochs");
  }

  // Receives are matched in a second pass so every send is known.
  std::set<std::tuple<ChannelId, WorkerId, std::uint64_t>> received;
  for (WorkerId w = 0; w < streams.size(); ++w) {
    for (const RawEvent& e : streams[w]) {
      if (!e.channel_id || !e.remote_worker) continue;
      if (e.kind == EventKind::kDataReceived) {
        auto key = std::make_tuple(*e.channel_id, *e.remote_worker, e.seq_no);
        auto it = sent.find(key);
        if (it == sent.end()) {
          fail(w, "data receive without send " + ToString(e));
        } else {
          const auto& [nanos, epoch, receiver] = it->second;
          if (receiver != w) fail(w, "data received by wrong worker " + ToString(e));
          if (nanos >= e.at.nanos) fail(w, "data received before it was sent " + ToString(e));
          if (epoch != e.at.epoch) fail(w, "data message crosses epochs " + ToString(e));
          if (!received.insert(key).second) fail(w, "duplicate data receive " + ToString(e));
        }
      } else if (e.kind == EventKind::kProgressReceived) {
        auto it = progress_sent.find({*e.remote_worker, e.seq_no});
        if (it == progress_sent.end()) {
          fail(w, "progress receive without send " + ToString(e));
        } else if (it->second.first >= e.at.nanos) {
          fail(w, "progress received before it was sent " + ToString(e));
        }
      }
    }
  }
  if (received.size() != sent.size()) {
    problems.push_back(std::to_string(sent.size() - received.size()) + " data messages were never received");
  }
  if (streams.size() > 1 && max_epochs > 0 && progress_sends == 0) {
    problems.push_back("multi-worker run without control messages");
  }
  return problems;
}

SimConfig SimConfigFromJson(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    Invalid(std::string("not valid JSON: ") + e.what());
  }
  SimConfig c;
  try {
    if (!j.contains("rng_seed")) Invalid("rng_seed is mandatory");
    c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    c.workers = j.value("workers", c.workers);
    c.epochs = j.value("epochs", c.epochs);
    c.records_per_worker_per_epoch = j.value("records_per_worker_per_epoch", c.records_per_worker_per_epoch);
    c.rounds_per_epoch = j.value("rounds_per_epoch", c.rounds_per_epoch);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.network_delay_ns = j.value("network_delay_ns", c.network_delay_ns);
    c.local_delay_ns = j.value("local_delay_ns", c.local_delay_ns);
    c.epoch_gap_ns = j.value("epoch_gap_ns", c.epoch_gap_ns);
    for (const Json& op : j.value("operators", Json::array())) {
      OperatorSpec spec;
      spec.id = op.at("id").get<OperatorId>();
      spec.address = ParseAddress(op.at("address"));
      spec.service_ns = op.value("service_ns", spec.service_ns);
      spec.record_cost_ns = op.value("record_cost_ns", spec.record_cost_ns);
      c.operators.push_back(std::move(spec));
    }
    for (const Json& ch : j.value("channels", Json::array())) {
      ChannelSpec spec;
      spec.id = ch.at("id").get<ChannelId>();
      spec.src_operator = ch.at("src").get<OperatorId>();
      spec.dst_operator = ch.at("dst").get<OperatorId>();
      spec.exchange = ParseExchange(ch);
      c.channels.push_back(spec);
    }
    for (const Json& f : j.value("faults", Json::array())) c.faults.push_back(ParseFault(f));
  } catch (const Json::exception& e) {
    Invalid(std::string("bad field: ") + e.what());
  }
  ValidateSimConfig(c);
  return c;
}

SimConfig LoadSimConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return SimConfigFromJson(ss.str());
}

std::string SimConfigToJson(const SimConfig& c) {
  Json j;
  j["workers"] = c.workers;
  j["epochs"] = c.epochs;
  j["records_per_worker_per_epoch"] = c.records_per_worker_per_epoch;
  j["rounds_per_epoch"] = c.rounds_per_epoch;
  j["batch_size"] = c.batch_size;
  j["network_delay_ns"] = c.network_delay_ns;
  j["local_delay_ns"] = c.local_delay_ns;
  j["epoch_gap_ns"] = c.epoch_gap_ns;
  j["rng_seed"] = c.rng_seed;
  j["operators"] = Json::array();
  for (const OperatorSpec& op : c.operators) {
    j["operators"].push_back({{"id", op.id}, {"address", op.address},
                              {"service_ns", op.service_ns}, {"record_cost_ns", op.record_cost_ns}});
  }
  j["channels"] = Json::array();
  for (const ChannelSpec& ch : c.channels) {
    Json cj = {{"id", ch.id}, {"src", ch.src_operator}, {"dst", ch.dst_operator}};
    switch (ch.exchange.kind) {
      case ExchangeKind::kUniform: cj["exchange"] = "uniform"; break;
      case ExchangeKind::kHashMod: cj["exchange"] = "hash_mod"; break;
      case ExchangeKind::kAllToWorker:
        cj["exchange"] = "all_to_worker";
        cj["worker"] = ch.exchange.target;
        break;
    }
    j["channels"].push_back(cj);
  }
  j["faults"] = Json::array();
  for (const FaultSpec& f : c.faults) {
    std::visit([&](const auto& v) {
      using T = std::decay_t<decltype(v)>;
      if constexpr (std::is_same_v<T, SkewExchange>) {
        j["faults"].push_back({{"kind", "skew_exchange"}, {"channel", v.channel}, {"worker", v.target_worker}});
      } else if constexpr (std::is_same_v<T, SlowOperator>) {
        j["faults"].push_back({{"kind", "slow_operator"}, {"operator", v.op}, {"added_ns", v.added_ns}});
      } else if constexpr (std::is_same_v<T, StallWorker>) {
        j["faults"].push_back({{"kind", "stall_worker"}, {"worker", v.worker}, {"from_epoch", v.from_epoch}});
      } else {
        j["faults"].push_back({{"kind", "delayed_message"}, {"channel", v.channel}, {"added_ns", v.added_ns}});
      }
    }, f);
  }
  return j.dump(2);
}

SimConfig DataSkewConfig(std::uint64_t records_per_worker, std::uint64_t seed) {
  SimConfig c;
  c.workers = 4;
  c.epochs = 10;
  c.records_per_worker_per_epoch = records_per_worker;
  c.rounds_per_epoch = 5;
  c.batch_size = 50;
  c.network_delay_ns = 20'000;
  c.rng_seed = seed;
  c.operators = {
      {0, {0}, 500, 0},                // dataflow scope
      {1, {0, 1}, 2'000, 1'000},       // input
      {2, {0, 2}, 1'000, 5'000},       // keyed map behind the exchange
  };
  c.channels = {{0, 1, 2, {ExchangeKind::kHashMod, 0}}};
  c.faults = {SkewExchange{0, 0}};
  return c;
}

}  // namespace snailtrail
