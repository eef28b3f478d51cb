/* C interface to the sparse grad-div flow solver.
 *
 * All functions return an sgd_status. On failure a message describing the
 * most recent error on the calling thread is available from
 * sgd_last_error(). Handles are opaque and owned by the caller; release
 * them with the matching *_free function (NULL is accepted).
 */
#ifndef SGDFLOW_H
#define SGDFLOW_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(SGDFLOW_BUILD)
#    define SGD_API __declspec(dllexport)
#  else
#    define SGD_API __declspec(dllimport)
#  endif
#else
#  define SGD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sgd_status {
  SGD_OK = 0,
  SGD_ERR_INVALID_ARGUMENT = 1,
  SGD_ERR_PARSE = 2,
  SGD_ERR_MESH = 3,
  SGD_ERR_SINGULAR = 4,
  SGD_ERR_NOT_CONVERGED = 5,
  SGD_ERR_BREAKDOWN = 6,
  SGD_ERR_BLOWUP = 7,
  SGD_ERR_IO = 8,
  SGD_ERR_INTERNAL = 9,
  SGD_ERR_JOB_FAILED = 10 /* experiment finished but some jobs failed */
} sgd_status;

typedef enum sgd_scheme {
  SGD_SCHEME_MODULAR = 0,
  SGD_SCHEME_SGD1 = 1,
  SGD_SCHEME_COUPLED = 2
} sgd_scheme;

typedef enum sgd_step2_solver { SGD_STEP2_DIRECT = 0, SGD_STEP2_CG = 1 } sgd_step2_solver;

typedef struct sgd_mesh sgd_mesh;
typedef struct sgd_simulation sgd_simulation;

typedef struct sgd_mesh_info {
  int dim;
  size_t num_vertices;
  size_t num_cells;
  size_t num_boundary_facets;
  double h;            /* max cell diameter */
  double min_diameter;
  double total_volume;
  size_t velocity_dofs; /* Taylor-Hood P2/P1 */
  size_t pressure_dofs;
} sgd_mesh_info;

typedef struct sgd_params {
  double nu;
  double k;
  double gamma;
  double alpha;
  double t_end;
  sgd_scheme scheme;
  const char* forcing; /* builtin name; NULL means "zero" */
  int convection;      /* nonzero keeps the skew convection term */
  sgd_step2_solver step2_solver;
  double cg_tol;
  int cg_maxit;
  double blowup_energy;
  int energy_ledger;   /* nonzero records E, D and the identity residual */
} sgd_params;

typedef struct sgd_step_record {
  long n;
  double t;
  double kinetic_energy;
  double div_norm;
  double E; /* NaN when no ledger applies */
  double D;
  double identity_residual;
  double load_pairing;
} sgd_step_record;

typedef struct sgd_cond_report {
  double h;
  double k;
  double gamma_plus_alpha;
  double lambda_max;
  double lambda_min;
  double cond2;
  double bound_shape;
  int converged;
  size_t size;
} sgd_cond_report;

typedef struct sgd_experiment_summary {
  size_t jobs;
  size_t blowups;
  size_t failures;
} sgd_experiment_summary;

SGD_API const char* sgd_version(void);
/* Message of the last failed call on this thread; "" when none. */
SGD_API const char* sgd_last_error(void);
SGD_API const char* sgd_status_name(sgd_status status);

/* kind is "unit_square" or "unit_cube". */
SGD_API sgd_status sgd_mesh_generate(const char* kind, int n, sgd_mesh** out);
/* "unit_square:N", "unit_cube:N", "gen:<either>" or an MSH 2.2 ASCII path. */
SGD_API sgd_status sgd_mesh_load(const char* spec, sgd_mesh** out);
SGD_API sgd_status sgd_mesh_import_msh(const char* text, size_t length, sgd_mesh** out);
SGD_API sgd_status sgd_mesh_export_msh(const sgd_mesh* mesh, const char* path);
SGD_API sgd_status sgd_mesh_get_info(const sgd_mesh* mesh, sgd_mesh_info* info);
SGD_API void sgd_mesh_free(sgd_mesh* mesh);

SGD_API void sgd_params_default(sgd_params* params);
/* The simulation keeps its own copy of the mesh. */
SGD_API sgd_status sgd_simulation_create(const sgd_mesh* mesh, const sgd_params* params, sgd_simulation** out);
/* Advances one step. Returns SGD_ERR_BLOWUP when the step blew up; record is
 * filled when the step produced finite values. SGD_ERR_INVALID_ARGUMENT after
 * the last step. */
SGD_API sgd_status sgd_simulation_step(sgd_simulation* sim, sgd_step_record* record);
SGD_API int sgd_simulation_finished(const sgd_simulation* sim);
SGD_API long sgd_simulation_steps_taken(const sgd_simulation* sim);
SGD_API long sgd_simulation_steps_planned(const sgd_simulation* sim);
SGD_API size_t sgd_simulation_velocity_size(const sgd_simulation* sim);
/* Copies the latest velocity; length must equal sgd_simulation_velocity_size. */
SGD_API sgd_status sgd_simulation_get_velocity(const sgd_simulation* sim, double* buffer, size_t length);
SGD_API void sgd_simulation_free(sgd_simulation* sim);

SGD_API double sgd_bound_shape(double h, double k_gamma_alpha);
SGD_API sgd_status sgd_estimate_cond2(const sgd_mesh* mesh, double k, double gamma_plus_alpha, sgd_cond_report* out);
/* ln(q2/q1) / ln(g2/g1) */
SGD_API sgd_status sgd_rate(double q1, double q2, double g1, double g2, double* out);

/* Config-driven runs. out_dir overrides the config's output_dir when not
 * NULL; max_steps < 0 keeps T; threads == 0 uses SGD_THREADS or 1. */
SGD_API sgd_status sgd_run_experiment(const char* config_path, const char* out_dir, long max_steps, unsigned threads,
                                      sgd_experiment_summary* summary);
SGD_API sgd_status sgd_run_cond_sweep(const char* config_path, const char* out_dir, unsigned threads,
                                      double* max_ratio);
/* Recomputes a summary CSV from its time-series files. mismatches receives
 * the number of disagreeing cells; details go to sgd_last_error(). */
SGD_API sgd_status sgd_verify_summary(const char* summary_csv, size_t* rows_checked, size_t* mismatches);

#ifdef __cplusplus
}
#endif

#endif /* SGDFLOW_H */
