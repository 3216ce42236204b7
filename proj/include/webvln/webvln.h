#ifndef WEBVLN_WEBVLN_H
#define WEBVLN_WEBVLN_H

/*
 * C interface of the WebVLN benchmark kit.
 *
 * Every call returns a wvln_status; on failure wvln_last_error() holds
 * "<Kind>: <message>" for the calling thread. Strings returned through
 * char** out-parameters are owned by the caller and released with
 * wvln_string_free(). Structured options and results are JSON text.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(WVLN_BUILDING_LIBRARY)
#define WVLN_API __attribute__((visibility("default")))
#else
#define WVLN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wvln_status {
  WVLN_OK = 0,
  WVLN_ERR_INVALID_ARGUMENT = 1,
  WVLN_ERR_IO = 2,
  WVLN_ERR_PARSE = 3,
  WVLN_ERR_NOT_FOUND = 4,
  WVLN_ERR_STATE = 5,
  WVLN_ERR_CLIENT = 6,
  WVLN_ERR_NUMERIC = 7,
  WVLN_ERR_INTERNAL = 8
} wvln_status;

typedef struct wvln_graph wvln_graph;
typedef struct wvln_episode wvln_episode;
typedef struct wvln_service wvln_service;

WVLN_API const char* wvln_version(void);
WVLN_API const char* wvln_last_error(void);
/* Error kind only ("InvalidActionIndex", "UnknownPageId", ...). */
WVLN_API const char* wvln_last_error_kind(void);
WVLN_API void wvln_string_free(char* s);

/* ---- site graphs ---- */

/* Ingests the HTML files under <site_dir>/pages; report: {pages, edges, dropped_buttons, warnings}. */
WVLN_API wvln_status wvln_graph_ingest(const char* site_dir, wvln_graph** out, char** report_json);
WVLN_API wvln_status wvln_graph_load(const char* graph_json_path, wvln_graph** out);
WVLN_API wvln_status wvln_graph_save(const wvln_graph* graph, const char* path);
/* {site_id, homepage_id, pages, edges} */
WVLN_API wvln_status wvln_graph_info(const wvln_graph* graph, char** info_json);
/* JSON array of page ids, or null when unreachable. */
WVLN_API wvln_status wvln_graph_shortest_path(const wvln_graph* graph, const char* from, const char* to,
                                              char** path_json);
WVLN_API void wvln_graph_free(wvln_graph* graph);

/* ---- dataset generation ---- */

/* [{path: [...], target_page_id}] */
WVLN_API wvln_status wvln_pathgen(const wvln_graph* graph, size_t n, uint64_t seed, char** paths_json);
/*
 * options: {n_paths, seed, out (records JSONL path),
 *           llm: {endpoint, model, api_key, mock_dir, max_in_flight, timeout_seconds},
 *           captions (sidecar JSON for screenshot captions, optional)}
 * report: {records, prompts_sent, skipped: [...], splits: {train, val, test}}
 */
WVLN_API wvln_status wvln_qagen(const wvln_graph* graph, const char* options_json, char** report_json);
WVLN_API wvln_status wvln_quality_sample(const char* records_path, size_t k, uint64_t seed, char** records_json);
/* Writes the synthetic 30-page fixture site; info: {site_dir, mock_dir, pages}. */
WVLN_API wvln_status wvln_fixture(const char* dir, char** info_json);

/* ---- training and evaluation (config_json uses the harness config keys) ---- */

/* summary: {iterations, records, vocab_size, parameters, first_loss, last_loss} */
WVLN_API wvln_status wvln_train(const char* config_json, const char* checkpoint_out, const char* log_path,
                                char** summary_json);
/* agent: random | greedy | oracle | llm | learned; split: train | val | test | all. */
WVLN_API wvln_status wvln_eval(const char* config_json, const char* agent, const char* split, const char* run_id,
                               char** report_json);
/* Recomputes a report from a trajectory log. */
WVLN_API wvln_status wvln_report_from_log(const char* config_json, const char* log_path, char** report_json);
/* options: {eps, min_coords, per_tensor, seed, record_id} */
WVLN_API wvln_status wvln_gradcheck(const char* config_json, const char* options_json, char** result_json);

/* ---- simulator episodes (the graph must outlive the episode) ---- */

WVLN_API wvln_status wvln_episode_reset(const wvln_graph* graph, const char* record_json, size_t max_steps,
                                        wvln_episode** out);
/* {page_id, screenshot_ref, candidates: [{index, kind, description, image_ref, target_page_id}]} */
WVLN_API wvln_status wvln_episode_observe(const wvln_episode* episode, char** observation_json);
WVLN_API wvln_status wvln_episode_step(wvln_episode* episode, size_t action_index, int* done);
WVLN_API wvln_status wvln_episode_finish(const wvln_episode* episode, const char* answer, char** trajectory_json);
WVLN_API void wvln_episode_free(wvln_episode* episode);

/* ---- HTTP session service ---- */

/* Serves in the background; port 0 in config picks a free port. */
WVLN_API wvln_status wvln_service_start(const char* config_json, wvln_service** out, int* bound_port);
/* Blocks until the process is interrupted. */
WVLN_API wvln_status wvln_service_run(const char* config_json);
WVLN_API void wvln_service_stop(wvln_service* service);

#ifdef __cplusplus
}
#endif

#endif /* WEBVLN_WEBVLN_H */
