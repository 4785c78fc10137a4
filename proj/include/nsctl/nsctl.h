/* C interface to the nsctl toolkit. All handles are opaque; every fallible
 * call returns an nsctl_status and leaves a JSON error description for the
 * calling thread in nsctl_last_error(). */
#ifndef NSCTL_NSCTL_H
#define NSCTL_NSCTL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NSCTL_API __declspec(dllexport)
#else
#define NSCTL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nsctl_status {
  NSCTL_OK = 0,
  NSCTL_ERR_VALIDATION = 1,   /* bad config, mode, geometry or argument */
  NSCTL_ERR_NUMERICAL = 2,    /* integrator or solver failure */
  NSCTL_INCONCLUSIVE = 3,     /* a step or restart cap stopped the run */
  NSCTL_ERR_NULL_ARGUMENT = 4,
  NSCTL_ERR_BUFFER_TOO_SMALL = 5
} nsctl_status;

typedef struct nsctl_table nsctl_table;
typedef struct nsctl_system nsctl_system;

NSCTL_API const char* nsctl_version(void);

/* JSON text describing the last failure on this thread, or "" after success. */
NSCTL_API const char* nsctl_last_error(void);
/* JSON summary of the last nsctl_run on this thread. */
NSCTL_API const char* nsctl_last_report(void);

/* Space-separated list of subcommand names. */
NSCTL_API const char* nsctl_commands(void);

/* Runs one subcommand on a config file. out_dir may be NULL (config value or
 * "."); seed may be NULL (config value or 0). Returns the process exit code:
 * 0 success, 1 validation error, 2 numerical failure, 3 inconclusive. */
NSCTL_API int nsctl_run(const char* command, const char* config_path, const char* out_dir, const uint64_t* seed);

/* Structure tables. */
NSCTL_API nsctl_status nsctl_table_torus(int box, nsctl_table** out);
NSCTL_API nsctl_status nsctl_table_rectangle(int box, double a, double b, nsctl_table** out);
NSCTL_API nsctl_status nsctl_table_sphere(int max_degree, nsctl_table** out);
NSCTL_API nsctl_status nsctl_table_from_json(const char* json, nsctl_table** out);
NSCTL_API void nsctl_table_free(nsctl_table* table);
NSCTL_API size_t nsctl_table_size(const nsctl_table* table);
/* Copies the NUL-terminated label into buf; *needed receives the full size. */
NSCTL_API nsctl_status nsctl_table_label(const nsctl_table* table, size_t index, char* buf, size_t len,
                                         size_t* needed);
NSCTL_API nsctl_status nsctl_table_eigenvalue(const nsctl_table* table, size_t index, double* out);
NSCTL_API nsctl_status nsctl_table_index(const nsctl_table* table, const char* label, size_t* out);
/* Coefficient of mode k in {phi^i, phi^j}. */
NSCTL_API nsctl_status nsctl_table_coefficient(const nsctl_table* table, size_t i, size_t j, size_t k,
                                               double* out);

/* Galerkin systems. Mode sets are given as labels; observed must be nonempty
 * and contain every controlled mode. The state order is sorted by label. */
NSCTL_API nsctl_status nsctl_system_create(const nsctl_table* table, const char* const* observed,
                                           size_t n_observed, const char* const* controlled, size_t n_controlled,
                                           double nu, nsctl_system** out);
NSCTL_API void nsctl_system_free(nsctl_system* sys);
NSCTL_API size_t nsctl_system_dimension(const nsctl_system* sys);
NSCTL_API nsctl_status nsctl_system_label(const nsctl_system* sys, size_t index, char* buf, size_t len,
                                          size_t* needed);
/* Unforced right-hand side. */
NSCTL_API nsctl_status nsctl_system_rhs(const nsctl_system* sys, const double* q, double* dq);
/* Unforced adaptive integration to t_end; q_end has the system dimension. */
NSCTL_API nsctl_status nsctl_system_integrate(const nsctl_system* sys, const double* q0, double t_end,
                                              double abs_tol, double rel_tol, double* q_end);
NSCTL_API nsctl_status nsctl_system_diagnostics(const nsctl_system* sys, const double* q, double* energy,
                                                double* enstrophy);

#ifdef __cplusplus
}
#endif

#endif
