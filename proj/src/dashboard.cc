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

#include "dashboard.h"

#include <atomic>
#include <deque>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "error.h"

namespace snailtrail {

using Json = nlohmann::json;

EpochBuffer::EpochBuffer(std::size_t retention) : retention_(retention) {
  if (retention == 0) throw Error(ErrorCode::kInvalidArgument, "retention must be >= 1");
}

EpochBuffer::Slot& EpochBuffer::Touch(std::uint64_t epoch, BundleKind kind) {
  Slot& s = slots_[epoch];
  s.bundle.epoch = epoch;
  const unsigned bit = 1u << static_cast<unsigned>(kind);
  if (s.kinds & bit) {
    warnings_.push_back("epoch " + std::to_string(epoch) + " result kind " +
                        std::to_string(static_cast<int>(kind)) + " ingested twice; overwriting");
  }
  s.kinds |= bit;
  newest_ = std::max(newest_.value_or(epoch), epoch);
  return s;
}

void EpochBuffer::Evict() {
  if (!newest_ || *newest_ < retention_) return;
  const std::uint64_t cutoff = *newest_ - retention_;  // evict epoch <= cutoff
  slots_.erase(slots_.begin(), slots_.upper_bound(cutoff));
  std::erase_if(violations_, [&](const InvariantViolation& v) { return v.epoch <= cutoff; });
}

void EpochBuffer::IngestPag(std::uint64_t epoch, std::vector<PagEdge> edges) {
  std::lock_guard<std::mutex> lock(mu_);
  Touch(epoch, BundleKind::kPag).bundle.pag = std::move(edges);
  Evict();
}

void EpochBuffer::IngestMetrics(std::uint64_t epoch, std::vector<MetricsRow> rows) {
  std::lock_guard<std::mutex> lock(mu_);
  Touch(epoch, BundleKind::kMetrics).bundle.metrics = std::move(rows);
  Evict();
}

void EpochBuffer::IngestKHops(std::uint64_t epoch, std::vector<HopEdge> hops, std::vector<HopSummary> summary) {
  std::lock_guard<std::mutex> lock(mu_);
  Slot& s = Touch(epoch, BundleKind::kKHops);
  s.bundle.khops = std::move(hops);
  s.bundle.khop_summary = std::move(summary);
  Evict();
}

void EpochBuffer::IngestViolations(std::uint64_t epoch, std::vector<InvariantViolation> violations) {
  std::lock_guard<std::mutex> lock(mu_);
  Touch(epoch, BundleKind::kInvariants).bundle.violations = std::move(violations);
  Evict();
}

void EpochBuffer::MarkClosed(std::uint64_t epoch) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = slots_.find(epoch);
  if (it != slots_.end()) it->second.closed = true;
}

std::optional<EpochBundle> EpochBuffer::Get(std::uint64_t epoch) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = slots_.find(epoch);
  if (it == slots_.end() || !it->second.complete()) return std::nullopt;
  return it->second.bundle;
}

std::optional<std::uint64_t> EpochBuffer::latest() const {
  std::lock_guard<std::mutex> lock(mu_);
  for (auto it = slots_.rbegin(); it != slots_.rend(); ++it) {
    if (it->second.complete()) return it->first;
  }
  return std::nullopt;
}

std::vector<std::uint64_t> EpochBuffer::epochs() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::uint64_t> out;
  for (const auto& [e, s] : slots_) {
    if (s.complete()) out.push_back(e);
  }
  return out;
}

void EpochBuffer::AddViolation(const InvariantViolation& v) {
  std::lock_guard<std::mutex> lock(mu_);
  violations_.push_back(v);
}

std::vector<InvariantViolation> EpochBuffer::violations() const {
  std::lock_guard<std::mutex> lock(mu_);
  return violations_;
}

std::vector<std::string> EpochBuffer::warnings() const {
  std::lock_guard<std::mutex> lock(mu_);
  return warnings_;
}

// ---------------------------------------------------------------------------
// JSON

Json ToJson(const PagNode& n) { return {{"w", n.worker}, {"epoch", n.at.epoch}, {"nanos", n.at.nanos}}; }

Json ToJson(const PagEdge& e) {
  return {{"src", ToJson(e.src)},
          {"dst", ToJson(e.dst)},
          {"type", EdgeTypeName(e.type)},
          {"op", e.operator_id ? Json(*e.operator_id) : Json(nullptr)},
          {"rc", e.record_count}};
}

Json ToJson(const MetricsRow& r) {
  return {{"epoch", r.epoch},
          {"from_worker", r.from_worker},
          {"to_worker", r.to_worker},
          {"activity_type", EdgeTypeName(r.activity_type)},
          {"count", r.count},
          {"total_duration_ns", r.total_duration_ns},
          {"total_records", r.total_records}};
}

Json ToJson(const HopEdge& h) { return {{"hop", h.hop}, {"edge", ToJson(h.edge)}}; }

Json ToJson(const HopSummary& s) {
  return {{"hop", s.hop}, {"type", EdgeTypeName(s.activity_type)}, {"count", s.count}, {"weight_ns", s.weight_ns}};
}

Json ToJson(const InvariantViolation& v) {
  return {{"type", "invariant_violation"},
          {"rule", InvariantRuleName(v.rule)},
          {"epoch", v.epoch},
          {"duration_ns", v.duration_ns},
          {"source_worker", v.source_worker},
          {"target_worker", v.target_worker ? Json(*v.target_worker) : Json(nullptr)},
          {"edge", ToJson(v.edge_id)},
          {"operator", v.operator_id ? Json(*v.operator_id) : Json(nullptr)},
          {"activity_type", v.activity_type ? Json(EdgeTypeName(*v.activity_type)) : Json(nullptr)}};
}

Json EpochDataJson(const EpochBundle& b) {
  Json j = {{"type", "epoch_data"}, {"epoch", b.epoch}, {"available", true}};
  j["pag"] = Json::array();
  for (const PagEdge& e : b.pag) j["pag"].push_back(ToJson(e));
  j["metrics"] = Json::array();
  for (const MetricsRow& r : b.metrics) j["metrics"].push_back(ToJson(r));
  j["khops"] = Json::array();
  for (const HopEdge& h : b.khops) j["khops"].push_back(ToJson(h));
  j["khop_summary"] = Json::array();
  for (const HopSummary& s : b.khop_summary) j["khop_summary"].push_back(ToJson(s));
  j["violations"] = Json::array();
  for (const InvariantViolation& v : b.violations) j["violations"].push_back(ToJson(v));
  return j;
}

namespace {

[[noreturn]] void SchemaError(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, "protocol schema mismatch: " + what);
}

EdgeType EdgeTypeFromJson(const Json& j) {
  auto t = ParseEdgeType(j.get<std::string>());
  if (!t) SchemaError("unknown activity type " + j.dump());
  return *t;
}

PagNode NodeFromJson(const Json& j) {
  return {j.at("w").get<WorkerId>(), {j.at("epoch").get<std::uint64_t>(), j.at("nanos").get<std::uint64_t>()}};
}

PagEdge EdgeFromJson(const Json& j) {
  PagEdge e;
  e.src = NodeFromJson(j.at("src"));
  e.dst = NodeFromJson(j.at("dst"));
  e.type = EdgeTypeFromJson(j.at("type"));
  if (!j.at("op").is_null()) e.operator_id = j.at("op").get<OperatorId>();
  e.record_count = j.at("rc").get<std::uint64_t>();
  return e;
}

}  // namespace

InvariantViolation ViolationFromJson(const Json& j) {
  try {
    if (j.at("type") != "invariant_violation") SchemaError("not an invariant_violation frame");
    InvariantViolation v;
    const std::string rule = j.at("rule").get<std::string>();
    bool found = false;
    for (auto r : {InvariantRule::kEpochMax, InvariantRule::kMessageMax, InvariantRule::kOperatorMax,
                   InvariantRule::kProgressMax, InvariantRule::kProgressAbsent}) {
      if (InvariantRuleName(r) == rule) {
        v.rule = r;
        found = true;
      }
    }
    if (!found) SchemaError("unknown rule " + rule);
    v.epoch = j.at("epoch").get<std::uint64_t>();
    v.duration_ns = j.at("duration_ns").get<std::uint64_t>();
    v.source_worker = j.at("source_worker").get<WorkerId>();
    if (!j.at("target_worker").is_null()) v.target_worker = j.at("target_worker").get<WorkerId>();
    v.edge_id = NodeFromJson(j.at("edge"));
    if (!j.at("operator").is_null()) v.operator_id = j.at("operator").get<OperatorId>();
    if (!j.at("activity_type").is_null()) v.activity_type = EdgeTypeFromJson(j.at("activity_type"));
    return v;
  } catch (const Json::exception& e) {
    SchemaError(e.what());
  }
}

EpochBundle EpochBundleFromJson(const Json& j) {
  try {
    if (j.at("type") != "epoch_data" || !j.at("available").get<bool>()) SchemaError("not an available epoch_data frame");
    EpochBundle b;
    b.epoch = j.at("epoch").get<std::uint64_t>();
    for (const Json& e : j.at("pag")) b.pag.push_back(EdgeFromJson(e));
    for (const Json& r : j.at("metrics")) {
      MetricsRow row;
      row.epoch = r.at("epoch").get<std::uint64_t>();
      row.from_worker = r.at("from_worker").get<WorkerId>();
      row.to_worker = r.at("to_worker").get<WorkerId>();
      row.activity_type = EdgeTypeFromJson(r.at("activity_type"));
      row.count = r.at("count").get<std::uint64_t>();
      row.total_duration_ns = r.at("total_duration_ns").get<std::uint64_t>();
      row.total_records = r.at("total_records").get<std::uint64_t>();
      b.metrics.push_back(row);
    }
    for (const Json& h : j.at("khops")) b.khops.push_back({h.at("hop").get<std::uint32_t>(), EdgeFromJson(h.at("edge"))});
    for (const Json& s : j.at("khop_summary")) {
      b.khop_summary.push_back({s.at("hop").get<std::uint32_t>(), EdgeTypeFromJson(s.at("type")),
                                s.at("count").get<std::uint64_t>(), s.at("weight_ns").get<std::uint64_t>()});
    }
    for (const Json& v : j.at("violations")) b.violations.push_back(ViolationFromJson(v));
    return b;
  } catch (const Json::exception& e) {
    SchemaError(e.what());
  }
}

std::string HandleRequest(const EpochBuffer& buffer, std::string_view message) {
  auto error = [](const std::string& reason) { return Json{{"type", "error"}, {"reason", reason}}.dump(); };
  Json req = Json::parse(message, nullptr, /*allow_exceptions=*/false);
  if (req.is_discarded()) return error("message is not valid JSON");
  if (!req.is_object()) return error("message must be a JSON object");
  if (!req.contains("type") || !req["type"].is_string()) return error("missing string field 'type'");
  if (req["type"] != "get_epoch") return error("unknown request type '" + req["type"].get<std::string>() + "'");
  if (!req.contains("epoch") || !req["epoch"].is_number_unsigned()) {
    return error("get_epoch needs a non-negative integer 'epoch'");
  }
  const auto epoch = req["epoch"].get<std::uint64_t>();
  if (auto bundle = buffer.Get(epoch)) return EpochDataJson(*bundle).dump();
  const auto latest = buffer.latest();
  return Json{{"type", "epoch_data"},
              {"epoch", epoch},
              {"available", false},
              {"latest", latest ? Json(*latest) : Json(nullptr)}}
      .dump();
}

// ---------------------------------------------------------------------------
// WebSocket server

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {
class Session;
}

struct DashboardServer::Impl {
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  EpochBuffer& buffer;
  std::size_t max_queued;
  std::set<std::shared_ptr<Session>> sessions;  // io thread only
  std::atomic<std::size_t> clients{0};
  std::thread thread;
  std::uint16_t port = 0;
  bool stopped = false;

  Impl(EpochBuffer& b, std::size_t max) : buffer(b), max_queued(max) {}
  void Accept();
  void Remove(const std::shared_ptr<Session>& s) {
    if (sessions.erase(s) > 0) clients--;
  }
};

namespace {

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, DashboardServer::Impl& server) : ws_(std::move(socket)), server_(server) {}

  void Start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->OnAccept(ec); });
  }

  void Send(std::shared_ptr<const std::string> frame) {
    if (closed_) return;
    // Slow consumers are cut off rather than allowed to grow without bound.
    if (queue_.size() >= server_.max_queued) {
      Drop();
      return;
    }
    queue_.push_back(std::move(frame));
    if (!writing_) DoWrite();
  }

  void Drop() {
    if (closed_) return;
    closed_ = true;
    server_.Remove(shared_from_this());
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }

 private:
  void OnAccept(beast::error_code ec) {
    if (ec) return;
    server_.sessions.insert(shared_from_this());
    server_.clients++;
    for (const InvariantViolation& v : server_.buffer.violations()) {
      Send(std::make_shared<const std::string>(ToJson(v).dump()));
    }
    DoRead();
  }

  void DoRead() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->OnRead(ec); });
  }

  void OnRead(beast::error_code ec) {
    if (ec) {
      Drop();
      return;
    }
    std::string text = beast::buffers_to_string(in_.data());
    in_.consume(in_.size());
    if (ws_.got_text()) {
      Send(std::make_shared<const std::string>(HandleRequest(server_.buffer, text)));
    } else {
      Send(std::make_shared<const std::string>(
          Json{{"type", "error"}, {"reason", "binary frames are not supported"}}.dump()));
    }
    DoRead();
  }

  void DoWrite() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->OnWrite(ec);
    });
  }

  void OnWrite(beast::error_code ec) {
    if (ec) {
      Drop();
      return;
    }
    queue_.pop_front();
    writing_ = false;
    if (!queue_.empty() && !closed_) DoWrite();
  }

  websocket::stream<beast::tcp_stream> ws_;
  DashboardServer::Impl& server_;
  beast::flat_buffer in_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool writing_ = false;
  bool closed_ = false;
};

}  // namespace

void DashboardServer::Impl::Accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<Session>(std::move(socket), *this)->Start();
    Accept();
  });
}

DashboardServer::DashboardServer(EpochBuffer& buffer, const std::string& bind, std::uint16_t port,
                                 std::size_t max_queued_frames)
    : impl_(std::make_unique<Impl>(buffer, max_queued_frames)) {
  beast::error_code ec;
  const auto address = net::ip::make_address(bind, ec);
  if (ec) throw Error(ErrorCode::kInvalidArgument, "bad bind address " + bind + ": " + ec.message());
  const tcp::endpoint endpoint(address, port);
  impl_->acceptor.open(endpoint.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(endpoint, ec);
  if (!ec) impl_->acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    throw Error(ErrorCode::kNetwork, "dashboard cannot listen on " + bind + ":" + std::to_string(port) + ": " +
                                         ec.message());
  }
  impl_->port = impl_->acceptor.local_endpoint().port();
  impl_->Accept();
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

DashboardServer::~DashboardServer() { Stop(); }

std::uint16_t DashboardServer::port() const { return impl_->port; }

std::size_t DashboardServer::client_count() const { return impl_->clients.load(); }

void DashboardServer::Publish(const InvariantViolation& v) {
  net::post(impl_->ioc, [impl = impl_.get(), v] {
    impl->buffer.AddViolation(v);
    auto frame = std::make_shared<const std::string>(ToJson(v).dump());
    // Copy: Send may drop a session and mutate the set.
    auto sessions = impl->sessions;
    for (const auto& s : sessions) s->Send(frame);
  });
}

void DashboardServer::Stop() {
  if (!impl_ || impl_->stopped) return;
  impl_->stopped = true;
  net::post(impl_->ioc, [impl = impl_.get()] {
    beast::error_code ignored;
    impl->acceptor.close(ignored);
    auto sessions = impl->sessions;
    for (const auto& s : sessions) s->Drop();
  });
  // Let queued frames and the close run, then stop the loop.
  net::post(impl_->ioc, [impl = impl_.get()] { impl->ioc.stop(); });
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace snailtrail
