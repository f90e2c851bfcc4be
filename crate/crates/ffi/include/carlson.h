#ifndef CARLSON_H
#define CARLSON_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call. `Ok` is zero.
typedef enum CarlsonStatus {
  CARLSON_STATUS_OK = 0,
  CARLSON_STATUS_NULL_POINTER = 1,
  CARLSON_STATUS_INVALID_UTF8 = 2,
  CARLSON_STATUS_INVALID = 3,
  CARLSON_STATUS_DIMENSION = 4,
  CARLSON_STATUS_OVERFLOW = 5,
  CARLSON_STATUS_DOMAIN = 6,
  CARLSON_STATUS_BUDGET = 7,
  CARLSON_STATUS_CONSTRUCTION = 8,
  CARLSON_STATUS_CAPACITY = 9,
  CARLSON_STATUS_REPRESENTATION = 10,
  CARLSON_STATUS_EMPTY_MEASURE = 11,
  CARLSON_STATUS_PLAN = 12,
  CARLSON_STATUS_IMAGINARY_RESIDUE = 13,
  CARLSON_STATUS_PARSE = 14,
  CARLSON_STATUS_IO = 15,
  CARLSON_STATUS_PANIC = 16,
} CarlsonStatus;

// A Dirichlet polynomial `Σ a_n n^{-s}`.
typedef struct CarlsonDirichlet CarlsonDirichlet;

// A finite atomic measure on the half line.
typedef struct CarlsonLineMeasure CarlsonLineMeasure;

// A finite point-mass probability measure on the torus.
typedef struct CarlsonPointMass CarlsonPointMass;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or an empty string.
// The pointer stays valid until the next `carlson_*` call on the same
// thread.
const char *carlson_last_error(void);

// Parses `{"basis_dim": d, "terms": [{"n": .., "re": .., "im": ..}]}`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum CarlsonStatus carlson_dirichlet_from_json(const char *json, struct CarlsonDirichlet **out);

// # Safety
// `poly` must be null or a handle from `carlson_dirichlet_from_json` that
// has not been freed.
void carlson_dirichlet_free(struct CarlsonDirichlet *poly);

// Evaluates `f(σ + it)`.
//
// # Safety
// `poly` must be a live handle; `re` and `im` valid pointers.
enum CarlsonStatus carlson_dirichlet_eval(const struct CarlsonDirichlet *poly,
                                          double sigma,
                                          double t,
                                          double *re,
                                          double *im);

// `Σ |a_n|² n^{-2σ}`.
//
// # Safety
// `poly` must be a live handle; `out` a valid pointer.
enum CarlsonStatus carlson_dirichlet_limit(const struct CarlsonDirichlet *poly,
                                           double sigma,
                                           double *out);

// `(1/T) ∫_0^T |f(σ + it)|² dt`, in closed form.
//
// # Safety
// `poly` must be a live handle; `out` a valid pointer.
enum CarlsonStatus carlson_lebesgue_mean(const struct CarlsonDirichlet *poly,
                                         double sigma,
                                         double t_max,
                                         double *out);

// Finds `t ≥ t_min` with `(-t log p_j) mod 2π` within `eps` of
// `targets[j]` for the first `n_targets` primes.
//
// On success `t_out` holds the refined time and `residuals_out` (length
// `n_targets`) its circle distances to the targets.
//
// # Safety
// `targets` must point to `n_targets` doubles; `t_out` must be valid;
// `residuals_out` must be null or point to `n_targets` writable doubles.
enum CarlsonStatus carlson_kronecker_solve(const double *targets,
                                           size_t n_targets,
                                           double eps,
                                           double t_min,
                                           uint64_t budget,
                                           double *t_out,
                                           double *residuals_out);

// Parses `{"dim": d, "atoms": [{"theta": [..], "c": ..}]}`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum CarlsonStatus carlson_point_mass_from_json(const char *json, struct CarlsonPointMass **out);

// # Safety
// `mu` must be null or a live handle.
void carlson_point_mass_free(struct CarlsonPointMass *mu);

// Builds the atomic line measure for `mu` with `levels` levels.
// `growth_const == 0` selects the default `2^k` schedule, any other value a
// constant factor. `budget == 0` keeps the default solver budget.
//
// # Safety
// `mu` must be a live handle; `out` a valid pointer.
enum CarlsonStatus carlson_measure_build(const struct CarlsonPointMass *mu,
                                         uint32_t levels,
                                         uint64_t growth_const,
                                         uint64_t budget,
                                         struct CarlsonLineMeasure **out);

// Reads an atom file written by `carlson_measure_save` or the CLI.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum CarlsonStatus carlson_measure_load(const char *path, struct CarlsonLineMeasure **out);

// Writes the atom file atomically: either the complete file appears at
// `path` or the previous contents are left alone.
//
// # Safety
// `lambda` must be a live handle and `path` a NUL-terminated string.
enum CarlsonStatus carlson_measure_save(const struct CarlsonLineMeasure *lambda, const char *path);

// Number of atoms.
//
// # Safety
// `lambda` must be a live handle; `out` a valid pointer.
enum CarlsonStatus carlson_measure_len(const struct CarlsonLineMeasure *lambda, size_t *out);

// Total mass `λ[0, ∞)`.
//
// # Safety
// `lambda` must be a live handle; `out` a valid pointer.
enum CarlsonStatus carlson_measure_total_mass(const struct CarlsonLineMeasure *lambda, double *out);

// # Safety
// `lambda` must be null or a live handle.
void carlson_measure_free(struct CarlsonLineMeasure *lambda);

// `(Σ_{t_i ≤ T} w_i |f(it_i)|²) / λ[0, T]`. Pass `INFINITY` for the whole
// measure.
//
// # Safety
// `poly` and `lambda` must be live handles; `out` a valid pointer.
enum CarlsonStatus carlson_time_mean(const struct CarlsonDirichlet *poly,
                                     const struct CarlsonLineMeasure *lambda,
                                     double t_max,
                                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CARLSON_H */
