/*
 * gist — group interaction analytics over multi-participant MR session
 * recordings (speech, gaze, pose).
 *
 * C API of the shared library. All functions return a gist_status; every
 * failure leaves a human-readable message retrievable per thread via
 * gist_last_error(). Out-parameters are written only on GIST_OK. Strings
 * returned through char** are heap-allocated; release them with
 * gist_string_free(). Handles are opaque; release with the matching
 * *_free() call. Handles are not thread-safe; treat each as confined to
 * one thread at a time.
 */
#ifndef GIST_H
#define GIST_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define GIST_API __declspec(dllexport)
#else
#define GIST_API __attribute__((visibility("default")))
#endif

typedef enum gist_status {
    GIST_OK = 0,
    GIST_ERR_IO = 1,        /* file missing or unreadable/unwritable */
    GIST_ERR_PARSE = 2,     /* malformed input (message carries the line) */
    GIST_ERR_INVALID = 3,   /* data violates a session invariant */
    GIST_ERR_CONFIG = 4,    /* bad configuration value */
    GIST_ERR_CONTRACT = 5,  /* API misuse (shape/length mismatch, null arg) */
    GIST_ERR_DIVERGED = 6,  /* training produced a non-finite loss */
    GIST_ERR_RUNTIME = 7    /* anything else */
} gist_status;

typedef struct gist_session gist_session;

GIST_API const char* gist_version(void);
GIST_API const char* gist_status_name(gist_status status);
/* Message of the most recent failure on this thread; never NULL. */
GIST_API const char* gist_last_error(void);
GIST_API void gist_string_free(char* s);

/* ---- session handles ------------------------------------------------ */

/* Parse + canonicalize + validate a JSON-lines session file. */
GIST_API gist_status gist_session_load(const char* path, gist_session** out);
/* Canonical serialization; load(save(s)) round-trips losslessly. */
GIST_API gist_status gist_session_save(const gist_session* s, const char* path);
GIST_API void gist_session_free(gist_session* s);

GIST_API gist_status gist_session_participant_count(const gist_session* s, int* out);
GIST_API gist_status gist_session_span_seconds(const gist_session* s, double* out);

/* Violation list as a JSON array (empty array = valid). Works on any
 * parseable session, including ones gist_session_load would reject. */
GIST_API gist_status gist_session_validate_file(const char* path, char** violations_json);

/* ---- synthetic sessions --------------------------------------------- */

/* Generate a session from a phase-script JSON document (see README for the
 * schema). Writes the session file and, when truth_csv_path is non-NULL,
 * the planted per-dyad per-window mode labels. */
GIST_API gist_status gist_synth(const char* script_json, const char* session_path, const char* truth_csv_path);

/* ---- pipeline jobs --------------------------------------------------- */

/* Each job takes the run configuration as a JSON document (same schema as
 * the CLI config file; see README), writes its exports under the
 * configured output directory, and returns a JSON summary. summary_json
 * may be NULL when the caller only wants the side effects. */
GIST_API gist_status gist_run(const char* config_json, char** summary_json);        /* full pipeline */
GIST_API gist_status gist_sociograms(const char* config_json, char** summary_json); /* per-window graphs + fusion */
GIST_API gist_status gist_metrics(const char* config_json, char** summary_json);    /* network metrics + tiers */
GIST_API gist_status gist_features(const char* config_json, char** summary_json);   /* dyadic features + pruning */
GIST_API gist_status gist_train(const char* config_json, char** summary_json);      /* autoencoder + k-means */
GIST_API gist_status gist_cluster(const char* config_json, char** summary_json);    /* label with a checkpoint */
GIST_API gist_status gist_rules(const char* config_json, char** summary_json);      /* decision-rule labels */
GIST_API gist_status gist_analyze(const char* config_json, char** summary_json);    /* entropies + associations */

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GIST_H */
