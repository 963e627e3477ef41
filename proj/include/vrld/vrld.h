#ifndef VRLD_H
#define VRLD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define VRLD_API __attribute__((visibility("default")))
#else
#define VRLD_API
#endif

typedef enum vrld_status {
  VRLD_OK = 0,
  VRLD_E_INVALID_ARGUMENT = 1,
  VRLD_E_CONTRACT = 2,
  VRLD_E_NUMERICAL = 3,
  VRLD_E_CONFIG = 4,
  VRLD_E_HYPOTHESIS = 5,
  VRLD_E_DIVERGED = 6,
  VRLD_E_IO = 7,
  VRLD_E_INTERNAL = 8
} vrld_status;

typedef struct vrld_objective vrld_objective;
typedef struct vrld_experiment vrld_experiment;
typedef struct vrld_result vrld_result;

/* Message of the last failed call on this thread ("" if none). */
VRLD_API const char* vrld_last_error(void);
VRLD_API const char* vrld_status_name(vrld_status status);
VRLD_API const char* vrld_version(void);

/* Strings returned through char** are owned by the caller. */
VRLD_API void vrld_string_free(char* s);

/* Objectives. params uses the config line syntax, e.g. "n:int = 16\nd:int = 2". */
VRLD_API vrld_status vrld_objective_create(const char* name, const char* params, vrld_objective** out);
VRLD_API void vrld_objective_free(vrld_objective* obj);
VRLD_API vrld_status vrld_objective_dims(const vrld_objective* obj, size_t* n, size_t* d);
VRLD_API vrld_status vrld_objective_value(const vrld_objective* obj, const double* x, double* out);
VRLD_API vrld_status vrld_objective_gradient(const vrld_objective* obj, const double* x, double* out);
VRLD_API vrld_status vrld_objective_minibatch_gradient(const vrld_objective* obj, const double* x,
                                                       const size_t* idx, size_t count, double* out);
VRLD_API vrld_status vrld_objective_evaluations(const vrld_objective* obj, uint64_t* out);

/* Experiments. */
VRLD_API vrld_status vrld_experiment_load(const char* path, vrld_experiment** out);
VRLD_API vrld_status vrld_experiment_parse(const char* text, vrld_experiment** out);
VRLD_API void vrld_experiment_free(vrld_experiment* exp);
VRLD_API vrld_status vrld_experiment_set_seed(vrld_experiment* exp, uint64_t seed);
VRLD_API vrld_status vrld_experiment_set_workers(vrld_experiment* exp, size_t workers);
VRLD_API vrld_status vrld_experiment_output_dir(const vrld_experiment* exp, char** out);
/* Resolves parameters and checks hypotheses; out receives the resolved config
   followed by "# note: ..." lines. */
VRLD_API vrld_status vrld_experiment_validate(const vrld_experiment* exp, char** out);

VRLD_API vrld_status vrld_experiment_run(const vrld_experiment* exp, vrld_result** out);
VRLD_API void vrld_result_free(vrld_result* res);
VRLD_API vrld_status vrld_result_replicates(const vrld_result* res, size_t* out);
VRLD_API vrld_status vrld_result_trace_csv(const vrld_result* res, size_t replicate, char** out);
VRLD_API vrld_status vrld_result_summary_csv(const vrld_result* res, char** out);
VRLD_API vrld_status vrld_result_summary_text(const vrld_result* res, char** out);
/* Writes trace_rNNN.csv, summary.csv and summary.txt. */
VRLD_API vrld_status vrld_result_write(const vrld_result* res, const char* dir);

/* compare.csv */
VRLD_API vrld_status vrld_experiment_compare(const vrld_experiment* exp, char** csv);
/* sweep.csv (one row per value, replicate and checkpoint) and sweep_summary.csv */
VRLD_API vrld_status vrld_experiment_sweep(const vrld_experiment* exp, char** csv, char** summary_csv);

/* Theory calculator. args are "key=value" tokens; a bare token names the variant.
   out receives "key=value" lines. */
VRLD_API vrld_status vrld_theory_query(const char* name, const char* const* args, size_t nargs, char** out);
VRLD_API vrld_status vrld_theory_catalog(char** out);

#ifdef __cplusplus
}
#endif

#endif
