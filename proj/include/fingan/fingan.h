#ifndef FINGAN_FINGAN_H
#define FINGAN_FINGAN_H

/* C interface to libfingan. Every function returns a fingan_status; on
 * failure fingan_last_error() describes the problem for the calling thread.
 * Objects returned through out-parameters are owned by the caller and are
 * released with the matching *_free function. Strings returned through
 * char** out-parameters are released with fingan_string_free. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define FINGAN_API __attribute__((visibility("default")))
#else
#define FINGAN_API
#endif

typedef enum fingan_status {
  FINGAN_OK = 0,
  FINGAN_E_INVALID_ARGUMENT = 1,
  FINGAN_E_IO = 2,
  FINGAN_E_MISSING_COLUMN = 3,
  FINGAN_E_UNPARSEABLE_NUMERIC = 4,
  FINGAN_E_UNKNOWN_CATEGORY = 5,
  FINGAN_E_EMPTY_FILE = 6,
  FINGAN_E_SCHEMA_MISMATCH = 7,
  FINGAN_E_DEGENERATE_CLASS = 8,
  FINGAN_E_TOO_FEW_SAMPLES = 9,
  FINGAN_E_SHAPE_MISMATCH = 10,
  FINGAN_E_NON_FINITE_INPUT = 11,
  FINGAN_E_NON_FINITE_GRADIENT = 12,
  FINGAN_E_NON_FINITE_LOSS = 13,
  FINGAN_E_EMPTY_MINORITY = 14,
  FINGAN_E_INVALID_ONE_HOT = 15,
  FINGAN_E_NO_DISCRETE_COLUMNS = 16,
  FINGAN_E_SOLVER_STALL = 17,
  FINGAN_E_LENGTH_MISMATCH = 18,
  FINGAN_E_UNDEFINED_METRIC = 19,
  FINGAN_E_NOT_A_TREE = 20,
  FINGAN_E_SERIALIZATION = 21,
  FINGAN_E_OUT_OF_MEMORY = 98,
  FINGAN_E_INTERNAL = 99
} fingan_status;

typedef struct fingan_table fingan_table;
typedef struct fingan_generator fingan_generator;
typedef struct fingan_ocsvm fingan_ocsvm;
typedef struct fingan_classifier fingan_classifier;

FINGAN_API const char* fingan_version(void);
FINGAN_API const char* fingan_status_name(int status);
/* Message of the last failed call on this thread; "" if none. */
FINGAN_API const char* fingan_last_error(void);
FINGAN_API void fingan_string_free(char* s);

/* Tables */
FINGAN_API int fingan_table_load(const char* csv_path, const char* schema_path, fingan_table** out);
FINGAN_API int fingan_table_save(const fingan_table* table, const char* csv_path);
FINGAN_API int fingan_table_shape(const fingan_table* table, size_t* rows, size_t* cols);
FINGAN_API int fingan_table_count_label(const fingan_table* table, int label, size_t* out);
FINGAN_API void fingan_table_free(fingan_table* table);

/* Fits z-score parameters on `table`, returns the standardized table and
 * optionally writes the parameters as JSON. */
FINGAN_API int fingan_preprocess(const fingan_table* table, const char* params_path, fingan_table** out);

/* Generators. `config_json` holds the GAN or CTGAN settings plus "mode"
 * ("vanilla", "wgan" or "ctgan"); NULL means vanilla defaults. Only
 * positive rows of `train` are used. */
FINGAN_API int fingan_generator_train(const fingan_table* train, const char* config_json, fingan_generator** out);
FINGAN_API int fingan_generator_load(const char* path, fingan_generator** out);
FINGAN_API int fingan_generator_save(const fingan_generator* model, const char* path);
/* `condition_column`/`condition_category` may be NULL (CTGAN models only). */
FINGAN_API int fingan_generator_sample(const fingan_generator* model, size_t n, uint64_t seed,
                                       const char* condition_column, const char* condition_category,
                                       fingan_table** out);
FINGAN_API int fingan_generator_mode(const fingan_generator* model, const char** mode);
FINGAN_API void fingan_generator_free(fingan_generator* model);

/* One-class SVM undersampling. `kernel_json` such as
 * {"kind":"sigmoid","gamma":"auto","coef0":0}; NULL means the defaults.
 * Returns the majority rows that are support vectors; `model` may be NULL. */
FINGAN_API int fingan_undersample(const fingan_table* train, double nu, const char* kernel_json, uint64_t seed,
                                  fingan_table** support_rows, fingan_ocsvm** model);
FINGAN_API int fingan_ocsvm_save(const fingan_ocsvm* model, const char* path);
FINGAN_API int fingan_ocsvm_support_count(const fingan_ocsvm* model, size_t* out);
FINGAN_API void fingan_ocsvm_free(fingan_ocsvm* model);

/* Classifiers. `spec_json` such as {"kind":"forest","n_estimators":100}. */
FINGAN_API int fingan_classifier_fit(const fingan_table* train, const char* spec_json, uint64_t seed,
                                     fingan_classifier** out);
FINGAN_API int fingan_classifier_load(const char* path, fingan_classifier** out);
FINGAN_API int fingan_classifier_save(const fingan_classifier* model, const char* path);
/* Writes table rows probabilities into `out`, which must hold `capacity`
 * entries (at least the row count). */
FINGAN_API int fingan_classifier_predict_proba(const fingan_classifier* model, const fingan_table* rows, double* out,
                                               size_t capacity);
FINGAN_API void fingan_classifier_free(fingan_classifier* model);

/* Experiments. `output_dir` overrides the configured directory when not
 * NULL; `jobs` of 0 keeps the configured value. The report JSON is returned
 * through `report_json` when it is not NULL. */
FINGAN_API int fingan_run_experiment(const char* config_path, const char* output_dir, size_t jobs,
                                     char** report_json);
/* Renders a saved report.json as text; `what` is "table" or "rules". */
FINGAN_API int fingan_render_report(const char* report_path, const char* what, char** text);

/* Writes the toy datasets into `dir`; `files_json` lists the written paths. */
FINGAN_API int fingan_write_fixtures(const char* dir, char** files_json);

#ifdef __cplusplus
}
#endif

#endif
