/* C interface to the fastr library.
 *
 * All functions return a fastr_status. On failure a message is available from
 * fastr_last_error() (per thread, valid until the next failing call on that
 * thread). Strings returned through char** out-parameters are owned by the
 * caller and released with fastr_string_free. Handles are released with their
 * matching *_free function; passing NULL to any *_free is allowed.
 */
#ifndef FASTR_FASTR_H
#define FASTR_FASTR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(FASTR_BUILDING_LIBRARY)
#    define FASTR_API __declspec(dllexport)
#  else
#    define FASTR_API __declspec(dllimport)
#  endif
#else
#  define FASTR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values 0-3 match the command-line exit codes. */
typedef enum fastr_status {
    FASTR_OK = 0,
    FASTR_ERROR = 1,                  /* I/O and anything not covered below */
    FASTR_ERROR_VALIDATION = 2,       /* config, schema or data validation */
    FASTR_ERROR_NUMERIC = 3,          /* divergence, non positive definite systems */
    FASTR_ERROR_INVALID_ARGUMENT = 4  /* NULL handle or output pointer, too small buffer */
} fastr_status;

typedef struct fastr_config fastr_config;
typedef struct fastr_dataset fastr_dataset;
typedef struct fastr_model fastr_model;

FASTR_API const char* fastr_version(void);
FASTR_API const char* fastr_last_error(void);
FASTR_API void fastr_string_free(char* s);

/* Configuration ("fastr-config/1" JSON document). */
FASTR_API fastr_status fastr_config_parse(const char* json, fastr_config** out);
FASTR_API fastr_status fastr_config_load(const char* path, fastr_config** out);
FASTR_API fastr_status fastr_config_set_seed(fastr_config* cfg, uint64_t seed);
/* Effect grid size from the config's evaluate section (default 100). */
FASTR_API fastr_status fastr_config_grid_size(const fastr_config* cfg, size_t* grid_size);
FASTR_API void fastr_config_free(fastr_config* cfg);

/* Simulates the configured design; writes data and truth CSV files. */
FASTR_API fastr_status fastr_simulate(const fastr_config* cfg, const char* data_path, const char* truth_path,
                                      char** summary_json);

/* Reads a CSV using the config's data schema; the outcome column is required. */
FASTR_API fastr_status fastr_dataset_read_csv(const fastr_config* cfg, const char* path, fastr_dataset** out);
/* Reads a CSV with the columns a model needs; the outcome column is optional. */
FASTR_API fastr_status fastr_model_read_csv(const fastr_model* model, const char* path, fastr_dataset** out);
FASTR_API fastr_status fastr_dataset_rows(const fastr_dataset* data, size_t* rows);
FASTR_API void fastr_dataset_free(fastr_dataset* data);

/* Trains the configured model. report_json may be NULL. */
FASTR_API fastr_status fastr_fit(const fastr_config* cfg, const fastr_dataset* data, fastr_model** out,
                                 char** report_json);
FASTR_API fastr_status fastr_model_save(const fastr_model* model, const char* path);
FASTR_API fastr_status fastr_model_load(const char* path, fastr_model** out);
FASTR_API void fastr_model_free(fastr_model* model);

/* Predicted means. out must hold at least the dataset's row count. */
FASTR_API fastr_status fastr_predict(const fastr_model* model, const fastr_dataset* data, double* out,
                                     size_t capacity, size_t* unseen_rows);
/* Writes "row,yhat" CSV. */
FASTR_API fastr_status fastr_predict_to_csv(const fastr_model* model, const fastr_dataset* data,
                                            const char* path, size_t* unseen_rows);

/* Effect tables as CSV files in out_dir; paths_json lists the files written. */
FASTR_API fastr_status fastr_export_effects(const fastr_model* model, size_t grid_size, const char* out_dir,
                                            char** paths_json);
/* Per-term MISE against a truth CSV. out_dir may be NULL; otherwise effect
 * tables and mise.csv are written there. */
FASTR_API fastr_status fastr_evaluate(const fastr_model* model, const char* truth_path, const char* out_dir,
                                      size_t grid_size, char** table_json);

/* Runs the memory benchmark of the config's bench section and writes a CSV. */
FASTR_API fastr_status fastr_bench_memory(const fastr_config* cfg, const char* out_path, char** table_json);

#ifdef __cplusplus
}
#endif

#endif
