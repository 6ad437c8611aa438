#ifndef QMEAS_QMEAS_H
#define QMEAS_QMEAS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QM_API __declspec(dllexport)
#else
#define QM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qm_status {
  QM_OK = 0,
  QM_ERR_DOMAIN = 1,
  QM_ERR_RESOURCE = 2,
  QM_ERR_CONVERGENCE = 3,
  QM_ERR_GRID_TOO_SMALL = 4,
  QM_ERR_ACCURACY = 5,
  QM_ERR_INTERNAL = 6,
  QM_ERR_IO = 7,
  QM_ERR_SCHEMA = 8,
  QM_ERR_INVALID_ARGUMENT = 9
} qm_status;

typedef enum qm_axis { QM_POSITION = 0, QM_MOMENTUM = 1 } qm_axis;

typedef struct qm_measure qm_measure;
typedef struct qm_state qm_state;
typedef struct qm_observable qm_observable;

/* Message and class name ("DomainError", ...) of the last failure on the
   calling thread. Empty strings after a success. */
QM_API const char* qm_last_error(void);
QM_API const char* qm_last_error_class(void);
QM_API const char* qm_status_name(qm_status status);

/* measures; atoms need not be sorted, weights are renormalised */
QM_API qm_status qm_measure_create(const double* atoms, const double* weights, size_t n, qm_measure** out);
QM_API qm_status qm_measure_load_csv(const char* path, qm_measure** out);
QM_API void qm_measure_free(qm_measure* m);
QM_API size_t qm_measure_size(const qm_measure* m);
/* copies up to cap atoms and weights, returns the count written in *n */
QM_API qm_status qm_measure_data(const qm_measure* m, double* atoms, double* weights, size_t cap, size_t* n);
QM_API qm_status qm_measure_alpha_deviation(const qm_measure* m, double alpha, double* out);
QM_API qm_status qm_measure_overall_width(const qm_measure* m, double eps, double* out);
/* alpha <= 0 or INFINITY selects the sup distance */
QM_API qm_status qm_wasserstein(const qm_measure* a, const qm_measure* b, double alpha, double* out);

/* states on the grid x_n = x0 + n dx, n = 0..size-1 */
QM_API qm_status qm_state_gaussian(double x0, double dx, size_t size, double hbar, double center, double p0,
                                   double sigma, qm_state** out);
QM_API qm_status qm_state_load_csv(const char* path, double hbar, qm_state** out);
QM_API void qm_state_free(qm_state* s);
QM_API qm_status qm_state_distribution(const qm_state* s, qm_axis axis, qm_measure** out);

QM_API qm_status qm_observable_sharp(qm_axis axis, qm_observable** out);
QM_API qm_status qm_observable_smeared(qm_axis axis, const qm_measure* noise, qm_observable** out);
QM_API qm_status qm_observable_covariant_marginal(const qm_state* tau, qm_axis axis, qm_observable** out);
QM_API void qm_observable_free(qm_observable* o);
QM_API qm_status qm_observable_distribution(const qm_observable* o, const qm_state* s, qm_measure** out);

/* g = lowest eigenvalue of |x|^alpha + |p|^beta, c the derived constant */
QM_API qm_status qm_ground_state_constant(double alpha, double beta, double* g, double* c);

/* Runs one JSON request (measure, wasserstein, state, groundstate, metric,
   verify, demo). *out receives a string owned by the caller; release it with
   qm_string_free. */
QM_API qm_status qm_run(const char* command, const char* request_json, char** out);
QM_API void qm_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
