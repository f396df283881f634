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

#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "commands.h"
#include "error.h"
#include "pipeline.h"
#include "simulator.h"
#include "test_util.h"

namespace snailtrail {
namespace {

using Json = nlohmann::json;
namespace net = boost::asio;
namespace websocket = boost::beast::websocket;

EpochBundle SkewBundle(std::uint64_t epoch_index) {
  const SimConfig c = DataSkewConfig(60);
  const auto epochs = testing::SplitEpochs(c, Simulate(c));
  const auto& t = epochs.at(epoch_index);
  EpochResult r;
  r.epoch = t.epoch;
  r.source_workers = t.workers;
  r.records = t.records;
  r.pag = BuildPag(t.records);
  InvariantConfig cfg;
  cfg.message_max_ns = 20'000;
  return AnalyzeEpoch(r, cfg, 10);
}

void Fill(EpochBuffer& buf, const EpochBundle& b) {
  buf.IngestPag(b.epoch, b.pag);
  buf.IngestMetrics(b.epoch, b.metrics);
  buf.IngestKHops(b.epoch, b.khops, b.khop_summary);
  buf.IngestViolations(b.epoch, b.violations);
  buf.MarkClosed(b.epoch);
}

InvariantViolation Alert(std::uint64_t epoch, std::uint64_t duration) {
  InvariantViolation v;
  v.rule = InvariantRule::kMessageMax;
  v.epoch = epoch;
  v.duration_ns = duration;
  v.source_worker = 2;
  v.target_worker = 0;
  v.edge_id = {2, {epoch, 17}};
  v.activity_type = EdgeType::kDataMessage;
  return v;
}

TEST(ProtocolTest, EpochDataRoundTrip) {
  const EpochBundle b = SkewBundle(2);
  ASSERT_FALSE(b.pag.empty());
  ASSERT_FALSE(b.khops.empty());
  ASSERT_FALSE(b.violations.empty());
  const Json j = EpochDataJson(b);
  EXPECT_EQ(j["type"], "epoch_data");
  EXPECT_EQ(j["available"], true);
  EXPECT_EQ(j["pag"].size(), b.pag.size());
  EXPECT_EQ(EpochBundleFromJson(Json::parse(j.dump())), b);
  const InvariantViolation v = Alert(3, 99);
  EXPECT_EQ(ViolationFromJson(ToJson(v)), v);
  InvariantViolation absent;
  absent.rule = InvariantRule::kProgressAbsent;
  EXPECT_EQ(ViolationFromJson(ToJson(absent)), absent);
  EXPECT_THROW(ViolationFromJson(Json{{"type", "epoch_data"}}), Error);
  EXPECT_THROW(EpochBundleFromJson(Json{{"type", "epoch_data"}, {"available", true}}), Error);
}

TEST(ProtocolTest, FixturesParse) {
  for (const char* name : {"epoch_data.json", "invariant_violation.json"}) {
    std::ifstream in(std::string(ST_FIXTURE_DIR) + "/protocol/" + name);
    ASSERT_TRUE(in) << name;
    const Json j = Json::parse(in);
    if (j["type"] == "epoch_data") {
      const EpochBundle b = EpochBundleFromJson(j);
      EXPECT_EQ(EpochDataJson(b), j);
    } else {
      EXPECT_EQ(ToJson(ViolationFromJson(j)), j);
    }
  }
}

TEST(ProtocolTest, HandleRequest) {
  EpochBuffer buf(10);
  Fill(buf, SkewBundle(1));
  auto reply = [&](std::string_view m) { return Json::parse(HandleRequest(buf, m)); };
  const Json ok = reply(R"({"type":"get_epoch","epoch":1})");
  EXPECT_EQ(ok["available"], true);
  EXPECT_EQ(ok["epoch"], 1);
  EXPECT_TRUE(ok.contains("pag") && ok.contains("metrics") && ok.contains("khops"));

  const Json missing = reply(R"({"type":"get_epoch","epoch":7})");
  EXPECT_EQ(missing["available"], false);
  EXPECT_EQ(missing["latest"], 1);

  for (const char* bad : {"not json", "[1]", R"({"epoch":1})", R"({"type":"subscribe"})",
                          R"({"type":"get_epoch","epoch":-1})", R"({"type":"get_epoch"})"}) {
    const Json e = reply(bad);
    EXPECT_EQ(e["type"], "error") << bad;
    EXPECT_TRUE(e["reason"].is_string());
  }
  EpochBuffer empty;
  EXPECT_TRUE(Json::parse(HandleRequest(empty, R"({"type":"get_epoch","epoch":0})"))["latest"].is_null());
}

TEST(EpochBufferTest, CompletenessAndWarnings) {
  EpochBuffer buf;
  buf.IngestPag(4, {});
  buf.IngestMetrics(4, {});
  buf.IngestKHops(4, {}, {});
  buf.MarkClosed(4);
  EXPECT_FALSE(buf.Get(4));  // invariants missing
  buf.IngestViolations(4, {});
  EXPECT_TRUE(buf.Get(4));
  EXPECT_EQ(buf.latest(), 4u);
  EXPECT_TRUE(buf.warnings().empty());
  buf.IngestPag(4, {});
  ASSERT_EQ(buf.warnings().size(), 1u);
  EXPECT_NE(buf.warnings()[0].find("epoch 4"), std::string::npos);
  EXPECT_THROW(EpochBuffer(0), Error);
}

TEST(EpochBufferTest, Retention) {
  EpochBuffer buf(100);
  for (std::uint64_t e = 0; e <= 150; ++e) {
    EpochBundle b;
    b.epoch = e;
    Fill(buf, b);
    buf.AddViolation(Alert(e, 1));
  }
  const auto kept = buf.epochs();
  EXPECT_LE(kept.size(), 100u);
  EXPECT_FALSE(buf.Get(50));
  EXPECT_TRUE(buf.Get(51));
  EXPECT_TRUE(buf.Get(150));
  for (const auto& v : buf.violations()) EXPECT_GT(v.epoch, 50u);
}

class Client {
 public:
  explicit Client(std::uint16_t port) : ws_(ioc_) {
    net::ip::tcp::resolver resolver(ioc_);
    net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }
  Json Read() {
    boost::beast::flat_buffer b;
    ws_.read(b);
    return Json::parse(boost::beast::buffers_to_string(b.data()));
  }
  void Write(const std::string& s) {
    ws_.text(true);
    ws_.write(net::buffer(s));
  }

 private:
  net::io_context ioc_;
  websocket::stream<net::ip::tcp::socket> ws_;
};

void WaitForClients(const DashboardServer& s, std::size_t n) {
  for (int i = 0; i < 200 && s.client_count() < n; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  ASSERT_EQ(s.client_count(), n);
}

TEST(DashboardServerTest, PushesAndReplays) {
  EpochBuffer buf;
  Fill(buf, SkewBundle(0));
  DashboardServer server(buf, "127.0.0.1", 0);
  ASSERT_NE(server.port(), 0);
  Client a(server.port()), b(server.port());
  WaitForClients(server, 2);
  server.Publish(Alert(0, 5));
  server.Publish(Alert(0, 6));
  std::vector<Json> got_a = {a.Read(), a.Read()};
  std::vector<Json> got_b = {b.Read(), b.Read()};
  EXPECT_EQ(got_a, got_b);
  EXPECT_EQ(got_a[0]["duration_ns"], 5);
  EXPECT_EQ(got_a[1]["duration_ns"], 6);
  EXPECT_EQ(got_a[0]["type"], "invariant_violation");

  Client late(server.port());
  EXPECT_EQ(late.Read(), got_a[0]);
  EXPECT_EQ(late.Read(), got_a[1]);

  late.Write(R"({"type":"get_epoch","epoch":0})");
  const Json data = late.Read();
  EXPECT_EQ(data["type"], "epoch_data");
  EXPECT_EQ(data["available"], true);
  EXPECT_EQ(EpochBundleFromJson(data), *buf.Get(0));
  late.Write("garbage");
  EXPECT_EQ(late.Read()["type"], "error");
  server.Stop();
}

TEST(DashboardServerTest, BadBindAddress) {
  EpochBuffer buf;
  EXPECT_THROW(DashboardServer(buf, "not-an-ip", 0), Error);
}

}  // namespace
}  // namespace snailtrail
