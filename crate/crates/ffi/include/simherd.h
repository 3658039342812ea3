#ifndef SIMHERD_H
#define SIMHERD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SimherdStatus {
  SIMHERD_STATUS_OK = 0,
  SIMHERD_STATUS_NULL_ARGUMENT = 1,
  SIMHERD_STATUS_INVALID_UTF8 = 2,
  SIMHERD_STATUS_INVALID_ARGUMENT = 3,
  /**
   * The command or reporter did not parse.
   */
  SIMHERD_STATUS_SYNTAX = 4,
  /**
   * The model rejected the operation.
   */
  SIMHERD_STATUS_RUNTIME = 5,
  SIMHERD_STATUS_NOT_FOUND = 6,
  SIMHERD_STATUS_BUSY = 7,
  SIMHERD_STATUS_CAPACITY = 8,
  SIMHERD_STATUS_CONNECT = 9,
  SIMHERD_STATUS_DISCONNECTED = 10,
  SIMHERD_STATUS_PROTOCOL = 11,
  SIMHERD_STATUS_IO = 12,
  SIMHERD_STATUS_PANIC = 13,
} SimherdStatus;

/**
 * An in-process server listening on a TCP port.
 */
typedef struct SimherdServer SimherdServer;

/**
 * A client connection to a server.
 */
typedef struct SimherdSession SimherdSession;

/**
 * A workspace driven directly in this process, without a server.
 */
typedef struct SimherdWorkspace SimherdWorkspace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *simherd_last_error(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void simherd_string_free(char *s);

/**
 * Starts a server on `host:port` (port 0 picks one) with `workers`
 * threads; 0 workers means one per core.
 *
 * # Safety
 * `host` must be a NUL-terminated string or NULL for 127.0.0.1.
 */
enum SimherdStatus simherd_server_start(const char *host,
                                        uint16_t port,
                                        size_t workers,
                                        struct SimherdServer **out_server);

/**
 * Returns the bound address as `host:port`; free with [`simherd_string_free`].
 *
 * # Safety
 * `server` must be a live handle.
 */
char *simherd_server_addr(const struct SimherdServer *server);

/**
 * Stops the server, aborting active runs, and frees the handle.
 *
 * # Safety
 * `server` must be a live handle or NULL; it is invalid afterwards.
 */
void simherd_server_free(struct SimherdServer *server);

/**
 * Connects to `addr:host:port` or launches the binary at the given path.
 *
 * # Safety
 * `locator` must be a NUL-terminated string.
 */
enum SimherdStatus simherd_session_start(const char *locator, struct SimherdSession **out_session);

/**
 * Disconnects (shutting down a server this session launched) and frees
 * the handle.
 *
 * # Safety
 * `session` must be a live handle or NULL; it is invalid afterwards.
 */
void simherd_session_free(struct SimherdSession *session);

/**
 * # Safety
 * `session` must be a live handle.
 */
enum SimherdStatus simherd_session_new_workspace(const struct SimherdSession *session,
                                                 uint64_t *out_id);

/**
 * # Safety
 * `session` must be a live handle.
 */
enum SimherdStatus simherd_session_delete_workspace(const struct SimherdSession *session,
                                                    uint64_t id);

/**
 * # Safety
 * `session` must be a live handle and `path` a NUL-terminated string.
 */
enum SimherdStatus simherd_session_open_model(const struct SimherdSession *session,
                                              uint64_t id,
                                              const char *path);

/**
 * Queues a command program on the workspace.
 *
 * # Safety
 * `session` must be a live handle and `command` a NUL-terminated string.
 */
enum SimherdStatus simherd_session_command(const struct SimherdSession *session,
                                           uint64_t id,
                                           const char *command);

/**
 * # Safety
 * `session` must be a live handle and `reporter` a NUL-terminated string.
 * `out_value` receives a string to free with [`simherd_string_free`].
 */
enum SimherdStatus simherd_session_report(const struct SimherdSession *session,
                                          uint64_t id,
                                          const char *reporter,
                                          char **out_value);

/**
 * Starts a scheduled run. `reporters_json` is a JSON array of strings;
 * a negative `stop_at_tick` runs until the model stops.
 *
 * # Safety
 * `session` must be a live handle; string arguments NUL-terminated.
 */
enum SimherdStatus simherd_session_schedule(const struct SimherdSession *session,
                                            uint64_t id,
                                            const char *reporters_json,
                                            int64_t start_at_tick,
                                            int64_t interval_ticks,
                                            int64_t stop_at_tick,
                                            const char *go_command);

/**
 * Writes the scheduled-run rows as a JSON array of string arrays. The
 * array is empty while the run is in progress and after the first drain.
 *
 * # Safety
 * `session` must be a live handle.
 */
enum SimherdStatus simherd_session_results(const struct SimherdSession *session,
                                           uint64_t id,
                                           char **out_json);

/**
 * Creates an in-process workspace whose random stream starts at `seed`.
 *
 * # Safety
 * `out_workspace` must be writable.
 */
enum SimherdStatus simherd_workspace_new(int64_t seed, struct SimherdWorkspace **out_workspace);

/**
 * # Safety
 * `ws` must be a live handle or NULL; it is invalid afterwards.
 */
void simherd_workspace_free(struct SimherdWorkspace *ws);

/**
 * # Safety
 * `ws` must be a live handle and `path` a NUL-terminated string.
 */
enum SimherdStatus simherd_workspace_open_model(struct SimherdWorkspace *ws, const char *path);

/**
 * Runs a command program to completion.
 *
 * # Safety
 * `ws` must be a live handle and `command` a NUL-terminated string.
 */
enum SimherdStatus simherd_workspace_command(struct SimherdWorkspace *ws, const char *command);

/**
 * # Safety
 * `ws` must be a live handle and `reporter` a NUL-terminated string.
 * `out_value` receives a string to free with [`simherd_string_free`].
 */
enum SimherdStatus simherd_workspace_report(const struct SimherdWorkspace *ws,
                                            const char *reporter,
                                            char **out_value);

/**
 * Mean two-species stability over `len` paired samples.
 *
 * # Safety
 * `sheep` and `wolves` must each point to `len` doubles.
 */
enum SimherdStatus simherd_stability_score(const double *sheep,
                                           const double *wolves,
                                           size_t len,
                                           double *out_score);

/**
 * Saltelli sample for `problem_json` (`num_vars`, `names`, `bounds`) with
 * `n` base points, as a JSON array of rows. `skip` < 0 uses the default
 * leading-point skip.
 *
 * # Safety
 * `problem_json` must be a NUL-terminated string.
 */
enum SimherdStatus simherd_saltelli_sample(const char *problem_json,
                                           size_t n,
                                           int64_t skip,
                                           char **out_json);

/**
 * First and total order indices from model outputs laid out as the
 * sample above. Writes `{"s1":..,"st":..,"s1_with_interactions":..,"st_relative":..}`.
 *
 * # Safety
 * `problem_json` must be NUL-terminated and `y` point to `len` doubles.
 */
enum SimherdStatus simherd_sobol_analyze(const char *problem_json,
                                         const double *y,
                                         size_t len,
                                         char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIMHERD_H */
