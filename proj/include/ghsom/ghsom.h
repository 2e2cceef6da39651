/* C interface to the GHSOM engine.
 *
 * Objects are opaque handles released with their *_free function. Every
 * fallible call returns a ghsom_status; on failure ghsom_last_error() holds a
 * message for the calling thread. Strings returned through char** out
 * parameters are owned by the caller and released with ghsom_string_free().
 * Structured results are JSON text.
 */
#ifndef GHSOM_GHSOM_H
#define GHSOM_GHSOM_H

#include <stddef.h>
#include <stdint.h>

#if defined(GHSOM_BUILDING_LIBRARY)
#define GHSOM_API __attribute__((visibility("default")))
#else
#define GHSOM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ghsom_status {
  GHSOM_OK = 0,
  GHSOM_E_INVALID_ARGUMENT = 1,
  GHSOM_E_DATA = 2,
  GHSOM_E_IO = 3,
  GHSOM_E_FORMAT = 4,
  GHSOM_E_VERSION = 5,
  GHSOM_E_INTEGRITY = 6,
  GHSOM_E_DEGENERATE = 7,
  GHSOM_E_STATE = 8,
  GHSOM_E_BUSY = 9,
  GHSOM_E_NOT_FOUND = 10,
  GHSOM_E_INTERNAL = 11
} ghsom_status;

typedef struct ghsom_dataset ghsom_dataset;
typedef struct ghsom_params ghsom_params;
typedef struct ghsom_model ghsom_model;
typedef struct ghsom_session ghsom_session;

GHSOM_API const char* ghsom_version(void);
GHSOM_API const char* ghsom_status_name(ghsom_status status);
/* Message of the last failed call on this thread; "" when none. */
GHSOM_API const char* ghsom_last_error(void);
GHSOM_API void ghsom_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

/* options_json (may be NULL): {"delimiter": ",", "header": true,
 * "label_column": "class" | 4, "normalization": "minmax" | "zscore"} */
GHSOM_API ghsom_status ghsom_dataset_load_csv(const char* path, const char* options_json,
                                              ghsom_dataset** out);
GHSOM_API ghsom_status ghsom_dataset_parse_csv(const char* text, const char* options_json,
                                               ghsom_dataset** out);
GHSOM_API void ghsom_dataset_free(ghsom_dataset* ds);
GHSOM_API size_t ghsom_dataset_size(const ghsom_dataset* ds);
GHSOM_API size_t ghsom_dataset_dim(const ghsom_dataset* ds);
/* {"name", "samples", "dim", "features", "label_name", "labels", "rejected_rows", "scales"} */
GHSOM_API ghsom_status ghsom_dataset_info(const ghsom_dataset* ds, char** json_out);

/* ---- parameters -------------------------------------------------------- */

GHSOM_API ghsom_status ghsom_params_create(ghsom_params** out);
GHSOM_API void ghsom_params_free(ghsom_params* p);
/* Keys: tau1 tau2 max_map_units max_depth growth_mode tau1_reference epochs
 * lr_start lr_end radius_start radius_end alpha beta interactive gamma_w
 * gamma_v gamma_a theta_g theta_e theta_c jobs. tau2 accepts "off". */
GHSOM_API ghsom_status ghsom_params_set(ghsom_params* p, const char* key, const char* value);
GHSOM_API ghsom_status ghsom_params_set_json(ghsom_params* p, const char* json);
/* n_samples > 0 additionally checks alpha * n_samples >= 1. */
GHSOM_API ghsom_status ghsom_params_validate(const ghsom_params* p, size_t n_samples);
GHSOM_API ghsom_status ghsom_params_to_json(const ghsom_params* p, char** json_out);

/* ---- models ------------------------------------------------------------ */

GHSOM_API ghsom_status ghsom_train(const ghsom_dataset* ds, const ghsom_params* p, uint64_t seed,
                                   ghsom_model** out);
GHSOM_API void ghsom_model_free(ghsom_model* m);
GHSOM_API ghsom_status ghsom_model_save(const ghsom_model* m, const char* path);
GHSOM_API ghsom_status ghsom_model_load(const char* path, ghsom_model** out);
GHSOM_API ghsom_status ghsom_model_serialize(const ghsom_model* m, char** text_out);
GHSOM_API ghsom_status ghsom_model_deserialize(const char* text, ghsom_model** out);
GHSOM_API ghsom_status ghsom_model_params(const ghsom_model* m, char** json_out);

/* {"depth", "maps", "units", "mean_qe", "total_qe", "criterion"} */
GHSOM_API ghsom_status ghsom_model_summary(const ghsom_model* m, const ghsom_dataset* ds,
                                           char** json_out);
/* Summary plus per-map QE and, for labeled data, purity at the leaves and at
 * layer 1. Errors with GHSOM_E_DATA on a dimension mismatch. */
GHSOM_API ghsom_status ghsom_model_evaluate(const ghsom_model* m, const ghsom_dataset* ds,
                                            char** json_out);
GHSOM_API ghsom_status ghsom_model_export_tree(const ghsom_model* m, char** json_out);
GHSOM_API ghsom_status ghsom_model_audit(const ghsom_model* m, char** json_out);
/* ds may be NULL (no majority-label column). */
GHSOM_API ghsom_status ghsom_model_unit_table_csv(const ghsom_model* m, const ghsom_dataset* ds,
                                                  char** csv_out);
GHSOM_API ghsom_status ghsom_model_qe_history_csv(const ghsom_model* m, char** csv_out);
GHSOM_API ghsom_status ghsom_model_qe_history_svg(const ghsom_model* m, char** svg_out);

/* ---- sessions ---------------------------------------------------------- */

/* ds, p and model may be NULL. The handles are copied. */
GHSOM_API ghsom_status ghsom_session_create(const ghsom_dataset* ds, const ghsom_params* p,
                                            const ghsom_model* model, uint64_t seed,
                                            ghsom_session** out);
GHSOM_API void ghsom_session_free(ghsom_session* s);
/* command_json: {"kind", "target"?: {"map", "row"?, "col"?}, "payload"?}.
 * response: {"ok", "revision", "events", "result"}. */
GHSOM_API ghsom_status ghsom_session_execute(ghsom_session* s, const char* command_json,
                                             char** response_out);
GHSOM_API uint64_t ghsom_session_revision(const ghsom_session* s);
GHSOM_API ghsom_status ghsom_session_tree(const ghsom_session* s, char** json_out);
/* Serialized model file text of the current snapshot. */
GHSOM_API ghsom_status ghsom_session_export(const ghsom_session* s, char** text_out);
GHSOM_API ghsom_status ghsom_session_events_since(const ghsom_session* s, uint64_t revision,
                                                  char** json_out);
/* Blocks up to timeout_ms for an event newer than `revision`. */
GHSOM_API ghsom_status ghsom_session_wait_events(const ghsom_session* s, uint64_t revision,
                                                 int timeout_ms, char** json_out);
GHSOM_API ghsom_status ghsom_session_command_log(const ghsom_session* s, char** json_out);
/* New session built from s's initial snapshot with its command log re-applied. */
GHSOM_API ghsom_status ghsom_session_replay(const ghsom_session* s, ghsom_session** out);

#ifdef __cplusplus
}
#endif

#endif /* GHSOM_GHSOM_H */
