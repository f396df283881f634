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

#include "snailtrail/snailtrail.h"

#include <chrono>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "adapter.h"
#include "commands.h"
#include "dashboard.h"
#include "error.h"
#include "frame_io.h"
#include "pipeline.h"
#include "simulator.h"

struct st_sim_config {
  snailtrail::SimConfig config;
};

struct st_profiler {
  std::optional<std::string> dir;
  std::unique_ptr<snailtrail::FrameListener> listener;
  snailtrail::ProfilerOptions options;
  bool used = false;
  std::vector<std::string> diagnostics;
};

namespace {

thread_local std::string last_error;

st_status Fail(st_status status, const std::string& what) {
  last_error = what;
  return status;
}

template <typename Fn>
st_status Guard(Fn fn) {
  try {
    fn();
    last_error.clear();
    return ST_OK;
  } catch (const snailtrail::Error& e) {
    return Fail(static_cast<st_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return Fail(ST_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(ST_INTERNAL, e.what());
  }
}

snailtrail::InvariantConfig ToConfig(const st_invariant_config* c) {
  snailtrail::InvariantConfig out;
  if (c == nullptr) return out;
  auto set = [](double ms, std::optional<std::uint64_t>& slot) {
    if (ms > 0) slot = snailtrail::InvariantConfig::MillisToNanos(ms);
  };
  set(c->epoch_max_ms, out.epoch_max_ns);
  set(c->message_max_ms, out.message_max_ns);
  set(c->operator_max_ms, out.operator_max_ns);
  set(c->progress_max_ms, out.progress_max_ns);
  return out;
}

snailtrail::ProfilerOptions ToOptions(const st_profiler_options* o) {
  snailtrail::ProfilerOptions out;
  out.source_peers = 0;  // infer
  if (o != nullptr) {
    out.source_peers = o->source_peers;
    out.workers = o->workers == 0 ? 1 : o->workers;
    out.max_epochs_in_flight = o->max_epochs_in_flight == 0 ? 1 : o->max_epochs_in_flight;
  }
  return out;
}

// Builds the pipeline for one run, accepting connections in online mode.
std::unique_ptr<snailtrail::Profiler> StartRun(st_profiler* p) {
  using snailtrail::Error;
  using snailtrail::ErrorCode;
  if (p->used) throw Error(ErrorCode::kInvalidArgument, "profiler handle was already run");
  p->used = true;
  if (p->dir) {
    snailtrail::ProfilerOptions opts = p->options;
    if (opts.source_peers == 0) {
      opts.source_peers = static_cast<std::uint32_t>(snailtrail::ListTraceFiles(*p->dir).size());
    }
    return snailtrail::Profiler::OpenDirectory(*p->dir, opts);
  }
  auto readers = p->listener->Accept(p->options.source_peers);
  return std::make_unique<snailtrail::Profiler>(std::move(readers), p->options);
}

void Finish(st_profiler* p, const snailtrail::Profiler& run) { p->diagnostics = run.diagnostics(); }

snailtrail::LineFn Lines(st_line_fn fn, void* user) {
  return [fn, user](const std::string& s) {
    if (fn != nullptr) fn(s.c_str(), user);
  };
}

}  // namespace

extern "C" {

const char* st_last_error(void) { return last_error.c_str(); }

const char* st_status_name(st_status status) {
  if (status == ST_OK) return "ok";
  if (status < ST_INVALID_ARGUMENT || status > ST_INTERNAL) return "unknown";
  return snailtrail::ErrorCodeName(static_cast<snailtrail::ErrorCode>(status));
}

st_status st_sim_config_load(const char* path, st_sim_config** out) {
  if (path == nullptr || out == nullptr) return Fail(ST_INVALID_ARGUMENT, "null argument");
  return Guard([&] { *out = new st_sim_config{snailtrail::LoadSimConfig(path)}; });
}

st_status st_sim_config_from_json(const char* json, st_sim_config** out) {
  if (json == nullptr || out == nullptr) return Fail(ST_INVALID_ARGUMENT, "null argument");
  return Guard([&] { *out = new st_sim_config{snailtrail::SimConfigFromJson(json)}; });
}

void st_sim_config_free(st_sim_config* config) { delete config; }

st_status st_simulate_to_dir(const st_sim_config* config, uint32_t lbf, const char* dir) {
  if (config == nullptr || dir == nullptr) return Fail(ST_INVALID_ARGUMENT, "null argument");
  return Guard([&] { snailtrail::WriteOffline(snailtrail::Simulate(config->config), lbf, dir); });
}

st_status st_simulate_to_socket(const st_sim_config* config, uint32_t lbf, const char* address) {
  if (config == nullptr) return Fail(ST_INVALID_ARGUMENT, "null argument");
  return Guard([&] {
    std::optional<std::string> explicit_address;
    if (address != nullptr) explicit_address = address;
    const auto [host, port] = snailtrail::ResolveSourceAddress(explicit_address);
    snailtrail::WriteOnline(snailtrail::Simulate(config->config), lbf, host, port);
  });
}

st_status st_profiler_open_dir(const char* dir, const st_profiler_options* options, st_profiler** out) {
  if (dir == nullptr || out == nullptr) return Fail(ST_INVALID_ARGUMENT, "null argument");
  return Guard([&] {
    auto p = std::make_unique<st_profiler>();
    p->dir = dir;
    p->options = ToOptions(options);
    // Fail early on unreadable directories.
    snailtrail::ListTraceFiles(dir);
    *out = p.release();
  });
}

st_status st_profiler_listen(const char* interface_address, uint16_t port, const st_profiler_options* options,
                             st_profiler** out) {
  if (interface_address == nullptr || out == nullptr) return Fail(ST_INVALID_ARGUMENT, "null argument");
  return Guard([&] {
    auto p = std::make_unique<st_profiler>();
    p->options = ToOptions(options);
    if (p->options.source_peers == 0) {
      throw snailtrail::Error(snailtrail::ErrorCode::kInvalidArgument, "online mode needs --source-peers >= 1");
    }
    p->listener = std::make_unique<snailtrail::FrameListener>(interface_address, port);
    *out = p.release();
  });
}

uint16_t st_profiler_port(const st_profiler* profiler) {
  return profiler != nullptr && profiler->listener ? profiler->listener->port() : 0;
}

st_status st_profiler_run_metrics(st_profiler* profiler, const char* out_path) {
  if (profiler == nullptr || out_path == nullptr) return Fail(ST_INVALID_ARGUMENT, "null argument");
  return Guard([&] {
    std::ofstream csv(out_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw snailtrail::Error(snailtrail::ErrorCode::kIo, std::string("cannot write ") + out_path);
    auto run = StartRun(profiler);
    snailtrail::RunMetrics(*run, csv);
    Finish(profiler, *run);
    csv.close();
    if (!csv) throw snailtrail::Error(snailtrail::ErrorCode::kIo, std::string("write failed on ") + out_path);
  });
}

st_status st_profiler_run_invariants(st_profiler* profiler, const st_invariant_config* config, st_line_fn on_line,
                                     void* user) {
  if (profiler == nullptr) return Fail(ST_INVALID_ARGUMENT, "null argument");
  return Guard([&] {
    const snailtrail::InvariantConfig cfg = ToConfig(config);
    auto run = StartRun(profiler);
    snailtrail::RunInvariants(*run, cfg, Lines(on_line, user));
    Finish(profiler, *run);
  });
}

st_status st_profiler_run_algo(st_profiler* profiler, uint32_t k, st_line_fn on_line, void* user) {
  if (profiler == nullptr) return Fail(ST_INVALID_ARGUMENT, "null argument");
  return Guard([&] {
    auto run = StartRun(profiler);
    snailtrail::RunAlgo(*run, k, Lines(on_line, user));
    Finish(profiler, *run);
  });
}

st_status st_profiler_run_inspect(st_profiler* profiler, st_line_fn on_line, void* user) {
  if (profiler == nullptr) return Fail(ST_INVALID_ARGUMENT, "null argument");
  return Guard([&] {
    auto run = StartRun(profiler);
    snailtrail::RunInspect(*run, Lines(on_line, user));
    Finish(profiler, *run);
  });
}

st_status st_profiler_run_dashboard(st_profiler* profiler, const st_invariant_config* config, const char* bind,
                                    uint16_t port, uint32_t retention, st_port_fn on_ready, st_line_fn on_line,
                                    const volatile int* stop_flag, void* user) {
  if (profiler == nullptr || bind == nullptr) return Fail(ST_INVALID_ARGUMENT, "null argument");
  return Guard([&] {
    const snailtrail::InvariantConfig cfg = ToConfig(config);
    snailtrail::EpochBuffer buffer(retention == 0 ? snailtrail::kDefaultRetention : retention);
    snailtrail::DashboardServer server(buffer, bind, port);
    if (on_ready != nullptr) on_ready(server.port(), user);
    auto run = StartRun(profiler);
    snailtrail::RunDashboard(*run, cfg, buffer, server, snailtrail::kDefaultHops, Lines(on_line, user));
    Finish(profiler, *run);
    while (stop_flag != nullptr && *stop_flag == 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    server.Stop();
  });
}

uint32_t st_profiler_diagnostic_count(const st_profiler* profiler) {
  return profiler == nullptr ? 0 : static_cast<uint32_t>(profiler->diagnostics.size());
}

const char* st_profiler_diagnostic(const st_profiler* profiler, uint32_t index) {
  if (profiler == nullptr || index >= profiler->diagnostics.size()) return nullptr;
  return profiler->diagnostics[index].c_str();
}

void st_profiler_free(st_profiler* profiler) { delete profiler; }

}  // extern "C"
