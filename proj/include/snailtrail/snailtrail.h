/* Copyright 2026 The SnailTrail Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface of the SnailTrail profiler.
 *
 * Every fallible function returns an st_status. On failure a description is
 * available from st_last_error() on the same thread until the next call.
 * Handles are opaque and owned by the caller; free them with the matching
 * *_free function. Passing NULL to a *_free function is a no-op.
 */

#ifndef SNAILTRAIL_SNAILTRAIL_H_
#define SNAILTRAIL_SNAILTRAIL_H_

#include <stdint.h>

#if defined(_WIN32)
#define ST_API __declspec(dllexport)
#else
#define ST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum st_status {
  ST_OK = 0,
  ST_INVALID_ARGUMENT = 1,
  ST_INVALID_CONFIG = 2,
  ST_IO = 3,
  ST_MALFORMED_FRAME = 4,
  ST_MALFORMED_TRACE = 5,
  ST_SETUP_CONFLICT = 6,
  ST_UNKNOWN_OPERATOR = 7,
  ST_AMBIGUOUS_MATCH = 8,
  ST_NETWORK = 9,
  ST_INTERNAL = 10
} st_status;

typedef struct st_sim_config st_sim_config;
typedef struct st_profiler st_profiler;

typedef struct st_profiler_options {
  uint32_t source_peers;          /* 0: infer from the trace directory */
  uint32_t workers;               /* profiler threads, 0 means 1 */
  uint32_t max_epochs_in_flight;  /* 0 means 1 */
} st_profiler_options;

/* Thresholds in milliseconds; a value <= 0 disables the rule. */
typedef struct st_invariant_config {
  double epoch_max_ms;
  double message_max_ms;
  double operator_max_ms;
  double progress_max_ms;
} st_invariant_config;

typedef void (*st_line_fn)(const char* line, void* user);
typedef void (*st_port_fn)(uint16_t port, void* user);

ST_API const char* st_last_error(void);
ST_API const char* st_status_name(st_status status);

/* Simulator configuration (JSON). */
ST_API st_status st_sim_config_load(const char* path, st_sim_config** out);
ST_API st_status st_sim_config_from_json(const char* json, st_sim_config** out);
ST_API void st_sim_config_free(st_sim_config* config);

/* Runs the simulator and writes workers x lbf trace files into dir. */
ST_API st_status st_simulate_to_dir(const st_sim_config* config, uint32_t lbf, const char* dir);

/* Runs the simulator and streams to a listening profiler. address is
 * "host:port"; NULL falls back to the SNAILTRAIL_ADDR environment variable. */
ST_API st_status st_simulate_to_socket(const st_sim_config* config, uint32_t lbf, const char* address);

/* Profiler over the trace files of a directory. */
ST_API st_status st_profiler_open_dir(const char* dir, const st_profiler_options* options,
                                      st_profiler** out);

/* Profiler over TCP. Binds now (port 0 picks a free port); connections are
 * accepted when a run starts. */
ST_API st_status st_profiler_listen(const char* interface_address, uint16_t port,
                                    const st_profiler_options* options, st_profiler** out);
ST_API uint16_t st_profiler_port(const st_profiler* profiler);

/* Each profiler handle supports exactly one run. */
ST_API st_status st_profiler_run_metrics(st_profiler* profiler, const char* out_path);
ST_API st_status st_profiler_run_invariants(st_profiler* profiler, const st_invariant_config* config,
                                            st_line_fn on_line, void* user);
ST_API st_status st_profiler_run_algo(st_profiler* profiler, uint32_t k, st_line_fn on_line, void* user);
ST_API st_status st_profiler_run_inspect(st_profiler* profiler, st_line_fn on_line, void* user);

/* Serves the dashboard on bind:port while the trace is analyzed, then keeps
 * serving until *stop_flag becomes nonzero (NULL: return when the trace
 * ends). on_ready receives the bound port. Violation lines go to on_line. */
ST_API st_status st_profiler_run_dashboard(st_profiler* profiler, const st_invariant_config* config,
                                           const char* bind, uint16_t port, uint32_t retention,
                                           st_port_fn on_ready, st_line_fn on_line,
                                           const volatile int* stop_flag, void* user);

/* Diagnostics (premature stream ends and similar) of the last run. */
ST_API uint32_t st_profiler_diagnostic_count(const st_profiler* profiler);
ST_API const char* st_profiler_diagnostic(const st_profiler* profiler, uint32_t index);

ST_API void st_profiler_free(st_profiler* profiler);

#ifdef __cplusplus
}
#endif

#endif /* SNAILTRAIL_SNAILTRAIL_H_ */
