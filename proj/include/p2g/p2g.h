#ifndef P2G_P2G_H
#define P2G_P2G_H

/*
 * C interface to the p2g layout-analysis library.
 *
 * Every fallible call returns a p2g_status. On failure a human-readable
 * message and an error kind are available from p2g_last_error() and
 * p2g_last_error_kind() on the calling thread until its next failing call.
 * Objects are opaque handles released with their matching *_free function;
 * *_free accepts NULL.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(P2G_BUILDING_LIBRARY)
#    define P2G_API __declspec(dllexport)
#  else
#    define P2G_API __declspec(dllimport)
#  endif
#else
#  define P2G_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum p2g_status {
  P2G_OK = 0,
  P2G_ERR_INTERNAL = 1,
  P2G_ERR_CONFIG = 2,
  P2G_ERR_DATA = 3,
  P2G_ERR_NUMERIC = 4,
  P2G_ERR_INVALID_HANDLE = 5,
  P2G_ERR_INVALID_ARGUMENT = 6
} p2g_status;

P2G_API const char* p2g_version(void);
P2G_API const char* p2g_status_name(p2g_status status);
P2G_API const char* p2g_last_error(void);
/* Kind of the last error, e.g. "ConfigMismatch"; empty when none. */
P2G_API const char* p2g_last_error_kind(void);

/* Progress lines from the command functions. NULL disables logging. */
typedef void (*p2g_log_fn)(const char* line, void* user);
P2G_API void p2g_set_log_callback(p2g_log_fn fn, void* user);

/* ---- Commands ---------------------------------------------------------- */

/* NULL strings and zero/negative numbers mean "not given". */
typedef struct p2g_options {
  const char* config_path;
  const char* out_dir;
  const char* checkpoint;
  const char* page_path;
  const char* strategy; /* directional | knn | beta */
  const char* level;    /* word | entity */
  const char* split;    /* train | eval (default eval) */
  int has_seed;
  uint64_t seed;
  int knn_k;
  double beta;
} p2g_options;

P2G_API void p2g_options_init(p2g_options* opts);

typedef struct p2g_synth_summary {
  size_t train_pages;
  size_t eval_pages;
  size_t boxes;
} p2g_synth_summary;

typedef struct p2g_sample_summary {
  size_t nodes;
  size_t edges;
  double group_connectivity; /* -1 when the page has no labels */
  double link_coverage;      /* -1 when the page has no links */
} p2g_sample_summary;

typedef struct p2g_train_summary {
  int epochs;
  double final_loss;
  double final_node_f1;
  double final_edge_f1;
  size_t trainable_parameters;
} p2g_train_summary;

typedef struct p2g_eval_summary {
  size_t pages;
  size_t nodes;
  size_t edges;
  double node_f1_micro;
  double node_f1_macro;
  double edge_precision;
  double edge_recall;
  double edge_f1;
  double map_50_95;
  double group_connectivity;
  double link_coverage; /* -1 when the data has no links */
} p2g_eval_summary;

typedef struct p2g_gradcheck_summary {
  double max_rel_error;
  double tolerance;
  size_t coords_checked;
  size_t nodes;
  size_t edges;
  int passed;
} p2g_gradcheck_summary;

/* Summary pointers may be NULL. */
P2G_API p2g_status p2g_synth(const p2g_options* opts, p2g_synth_summary* out);
P2G_API p2g_status p2g_sample(const p2g_options* opts, p2g_sample_summary* out);
P2G_API p2g_status p2g_train(const p2g_options* opts, p2g_train_summary* out);
/* Writes report_<split>.txt, metrics_<split>.json and detections_<split>.json. */
P2G_API p2g_status p2g_evaluate(const p2g_options* opts, p2g_eval_summary* out);
P2G_API p2g_status p2g_infer(const p2g_options* opts, size_t* n_instances);
P2G_API p2g_status p2g_gradcheck(const p2g_options* opts, p2g_gradcheck_summary* out);

/* ---- Pages and graphs -------------------------------------------------- */

typedef struct p2g_page p2g_page;
typedef struct p2g_graph p2g_graph;
typedef struct p2g_model p2g_model;
typedef struct p2g_prediction p2g_prediction;

P2G_API p2g_status p2g_page_load(const char* path, p2g_page** out);
P2G_API p2g_status p2g_page_from_json(const char* json_text, p2g_page** out);
P2G_API p2g_status p2g_page_box_count(const p2g_page* page, size_t* out);
P2G_API void p2g_page_free(p2g_page* page);

/* strategy: directional | knn | beta. k and beta apply to knn and beta. */
P2G_API p2g_status p2g_graph_sample(const p2g_page* page, const char* strategy, int k, double beta, p2g_graph** out);
P2G_API p2g_status p2g_graph_edge_count(const p2g_graph* graph, size_t* out);
/* Writes edges as (a, b) pairs, a < b; `capacity` counts pairs. */
P2G_API p2g_status p2g_graph_edges(const p2g_graph* graph, int32_t* pairs, size_t capacity);
P2G_API void p2g_graph_free(p2g_graph* graph);

/* ---- Models and predictions ------------------------------------------- */

P2G_API p2g_status p2g_model_load(const char* checkpoint_path, p2g_model** out);
P2G_API p2g_status p2g_model_num_classes(const p2g_model* model, int* out);
P2G_API p2g_status p2g_model_parameter_count(const p2g_model* model, size_t* out);
P2G_API void p2g_model_free(p2g_model* model);

typedef struct p2g_instance {
  double x, y, width, height; /* pixels */
  int category;
  double score;
  size_t member_count;
} p2g_instance;

/* Uses the default directional sampler and an edge threshold of 0.5. */
P2G_API p2g_status p2g_predict(const p2g_model* model, const p2g_page* page, p2g_prediction** out);
P2G_API p2g_status p2g_prediction_instance_count(const p2g_prediction* pred, size_t* out);
P2G_API p2g_status p2g_prediction_instance(const p2g_prediction* pred, size_t index, p2g_instance* out);
/* Member node ids of one instance; `capacity` counts ids. */
P2G_API p2g_status p2g_prediction_members(const p2g_prediction* pred, size_t index, int32_t* ids, size_t capacity);
/* Argmax class per node; `capacity` counts nodes. */
P2G_API p2g_status p2g_prediction_node_classes(const p2g_prediction* pred, int32_t* classes, size_t capacity);
P2G_API void p2g_prediction_free(p2g_prediction* pred);

#ifdef __cplusplus
}
#endif

#endif /* P2G_P2G_H */
