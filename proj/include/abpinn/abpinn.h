#ifndef ABPINN_ABPINN_H
#define ABPINN_ABPINN_H

#include <stddef.h>
#include <stdint.h>

#if defined(ABPINN_BUILDING_LIBRARY)
#define ABPINN_API __attribute__((visibility("default")))
#else
#define ABPINN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum abpinn_status {
  ABPINN_OK = 0,
  ABPINN_ERR_CONTRACT = 1,
  ABPINN_ERR_CAPABILITY = 2,
  ABPINN_ERR_GRAPH = 3,
  ABPINN_ERR_STATE = 4,
  ABPINN_ERR_DIAGNOSTIC = 5,
  ABPINN_ERR_CONFIG = 6,
  ABPINN_ERR_IO = 7,
  ABPINN_ERR_INVALID_ARGUMENT = 8,
  ABPINN_ERR_BUFFER_TOO_SMALL = 9,
  ABPINN_ERR_INTERNAL = 10
} abpinn_status;

typedef struct abpinn_config abpinn_config;
typedef struct abpinn_result abpinn_result;
typedef struct abpinn_model abpinn_model;

typedef struct abpinn_seed_summary {
  uint64_t seed;
  int ok;
  double final_residual;
  double l2_error;
  /* nonzero when the reference norm was zero and l2_error is absolute */
  int l2_absolute;
  size_t subdomain_count;
  int selected;
} abpinn_seed_summary;

/* Called after every recorded iteration. `event` is never NULL. */
typedef void (*abpinn_progress_fn)(void* user, uint64_t seed, long iter, double residual_loss, double l2_error,
                                   size_t subdomain_count, const char* event);

ABPINN_API const char* abpinn_version(void);
ABPINN_API const char* abpinn_status_string(abpinn_status status);
/* Message of the last failed call on this thread; "" if none. */
ABPINN_API const char* abpinn_last_error(void);

/* Text outputs use the size-query convention: the string plus its
   terminator is copied when `capacity` suffices, `*needed` always receives
   the required size, and ABPINN_ERR_BUFFER_TOO_SMALL is returned otherwise. */

ABPINN_API abpinn_status abpinn_config_load(const char* path, abpinn_config** out);
ABPINN_API abpinn_status abpinn_config_parse(const char* text, abpinn_config** out);
ABPINN_API void abpinn_config_free(abpinn_config* config);
ABPINN_API abpinn_status abpinn_config_serialize(const abpinn_config* config, char* buffer, size_t capacity,
                                                 size_t* needed);
ABPINN_API abpinn_status abpinn_config_output_dir(const abpinn_config* config, char* buffer, size_t capacity,
                                                  size_t* needed);
ABPINN_API abpinn_status abpinn_config_set_output_dir(abpinn_config* config, const char* dir);
ABPINN_API abpinn_status abpinn_config_seed_count(const abpinn_config* config, size_t* count);
ABPINN_API abpinn_status abpinn_config_seeds(const abpinn_config* config, uint64_t* seeds, size_t capacity);
ABPINN_API abpinn_status abpinn_config_set_seeds(abpinn_config* config, const uint64_t* seeds, size_t count);
/* Nonzero when the problem needs a spectral reference grid. */
ABPINN_API abpinn_status abpinn_config_needs_reference(const abpinn_config* config, int* needs);
ABPINN_API abpinn_status abpinn_config_reference_path(const abpinn_config* config, char* buffer, size_t capacity,
                                                      size_t* needed);
ABPINN_API abpinn_status abpinn_config_set_reference_path(abpinn_config* config, const char* path);

/* Trains every seed and writes the run directory. A seed that diverges is
   reported in the result; the call itself still returns ABPINN_OK. */
ABPINN_API abpinn_status abpinn_run(const abpinn_config* config, abpinn_progress_fn progress, void* user,
                                    abpinn_result** out);
ABPINN_API void abpinn_result_free(abpinn_result* result);
ABPINN_API abpinn_status abpinn_result_seed_count(const abpinn_result* result, size_t* count);
ABPINN_API abpinn_status abpinn_result_seed(const abpinn_result* result, size_t index, abpinn_seed_summary* out);
/* Failure message of one seed; "" for a successful seed. Owned by `result`. */
ABPINN_API const char* abpinn_result_seed_error(const abpinn_result* result, size_t index);
/* ABPINN_ERR_STATE when every seed failed. */
ABPINN_API abpinn_status abpinn_result_best(const abpinn_result* result, size_t* index);

/* `written` (may be NULL) is set to 1 when a grid was computed, 0 when an
   up-to-date one was kept. */
ABPINN_API abpinn_status abpinn_reference_generate(const abpinn_config* config, int force, int* written);

/* Untrained model of one seed, as the first iteration of `abpinn_run` sees it. */
ABPINN_API abpinn_status abpinn_model_create(const abpinn_config* config, uint64_t seed, abpinn_model** out);
ABPINN_API void abpinn_model_free(abpinn_model* model);
ABPINN_API abpinn_status abpinn_model_input_dim(const abpinn_model* model, size_t* dim);
ABPINN_API abpinn_status abpinn_model_subdomain_count(const abpinn_model* model, size_t* count);
ABPINN_API abpinn_status abpinn_model_parameter_count(const abpinn_model* model, size_t* count);
/* `points` holds n points of input_dim coordinates each, point after point. */
ABPINN_API abpinn_status abpinn_model_evaluate(const abpinn_model* model, const double* points, size_t n,
                                               double* values);
ABPINN_API abpinn_status abpinn_model_residual(const abpinn_model* model, const double* points, size_t n,
                                               double* residuals);

#ifdef __cplusplus
}
#endif

#endif
