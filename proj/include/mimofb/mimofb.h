/* C interface to the limited-feedback beamforming library.
 *
 * All functions return a status code; on failure a description of the last
 * error on the calling thread is available from mimofb_last_error(). Handles
 * are opaque and must be released with the matching *_free function. A
 * model handle keeps inference scratch space, so use one handle per thread.
 *
 * Complex arrays are interleaved (re, im) doubles in row-major order. */
#ifndef MIMOFB_H
#define MIMOFB_H

#include <stddef.h>

#if defined(_WIN32)
#define MIMOFB_API __declspec(dllexport)
#else
#define MIMOFB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mimofb_status {
    MIMOFB_OK = 0,
    MIMOFB_SHAPE_MISMATCH = 1,
    MIMOFB_NOT_HERMITIAN = 2,
    MIMOFB_INDEFINITE = 3,
    MIMOFB_NO_CONVERGENCE = 4,
    MIMOFB_RANK_DEFICIENT_PILOTS = 5,
    MIMOFB_NUMERICAL_SINGULARITY = 6,
    MIMOFB_EMPTY_TRAINING_SET = 7,
    MIMOFB_DEGENERATE_OUTPUT = 8,
    MIMOFB_TABLE_TOO_LARGE = 9,
    MIMOFB_NON_FINITE_LOSS = 10,
    MIMOFB_CONFIG_ERROR = 11,
    MIMOFB_MISSING_ARTIFACT = 12,
    MIMOFB_CORRUPT_ARTIFACT = 13,
    MIMOFB_INVALID_ARGUMENT = 14,
    MIMOFB_BOUND_VIOLATION = 15,
    MIMOFB_INTERNAL_ERROR = 100
} mimofb_status;

typedef struct mimofb_model mimofb_model;
typedef struct mimofb_codebook mimofb_codebook;

/* Receives one progress line at a time, without the trailing newline. */
typedef void (*mimofb_log_fn)(const char* line, void* user);

MIMOFB_API const char* mimofb_version(void);
MIMOFB_API const char* mimofb_last_error(void);
MIMOFB_API const char* mimofb_status_name(mimofb_status status);

/* Process exit code for a status: 0 success, 2 configuration problem,
 * 3 missing or unreadable artifact, 4 numerical failure, 1 otherwise. */
MIMOFB_API int mimofb_exit_code(mimofb_status status);

/* Runs an experiment described by a config file (or text). Each override is
 * a "section.key=value" string applied on top of the file. CSV rows go to
 * the configured output path, or stdout when none is set. */
MIMOFB_API mimofb_status mimofb_run_config_file(const char* path, const char* const* overrides, size_t n_overrides,
                                                mimofb_log_fn log, void* user);
MIMOFB_API mimofb_status mimofb_run_config_text(const char* text, const char* const* overrides, size_t n_overrides,
                                                mimofb_log_fn log, void* user);

/* Human-readable summary of a model or codebook file. Release *summary
 * with mimofb_string_free. */
MIMOFB_API mimofb_status mimofb_describe(const char* path, char** summary);
MIMOFB_API void mimofb_string_free(char* s);

MIMOFB_API mimofb_status mimofb_model_load(const char* path, mimofb_model** out);
MIMOFB_API void mimofb_model_free(mimofb_model* model);
MIMOFB_API mimofb_status mimofb_model_shape(const mimofb_model* model, size_t* n_tx, size_t* n_rx,
                                            size_t* pilot_length, size_t* bits);
/* Feedback index for a pilot observation Y (N_r x L complex, 2 N_r L doubles). */
MIMOFB_API mimofb_status mimofb_model_feedback(mimofb_model* model, const double* y, size_t n_doubles,
                                               size_t* index);
/* Transmit beamformer for an index (N_t complex, 2 N_t doubles). */
MIMOFB_API mimofb_status mimofb_model_beamformer(const mimofb_model* model, size_t index, double* w,
                                                 size_t n_doubles);

MIMOFB_API mimofb_status mimofb_codebook_dft(size_t n_tx, size_t bits, mimofb_codebook** out);
MIMOFB_API mimofb_status mimofb_codebook_load(const char* path, mimofb_codebook** out);
MIMOFB_API void mimofb_codebook_free(mimofb_codebook* cb);
MIMOFB_API mimofb_status mimofb_codebook_shape(const mimofb_codebook* cb, size_t* n_tx, size_t* bits);
/* Index of the word maximising ||H w||^2 for H (n_rx x N_t complex). */
MIMOFB_API mimofb_status mimofb_codebook_select(const mimofb_codebook* cb, const double* h, size_t n_rx,
                                                size_t* index);
MIMOFB_API mimofb_status mimofb_codebook_word(const mimofb_codebook* cb, size_t index, double* w,
                                              size_t n_doubles);

#ifdef __cplusplus
}
#endif

#endif
