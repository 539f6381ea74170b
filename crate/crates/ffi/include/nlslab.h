#ifndef NLSLAB_H
#define NLSLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NlsHalt {
  NLS_HALT_COMPLETED = 0,
  NLS_HALT_KINETIC_ESCAPE = 1,
  NLS_HALT_AMPLITUDE_CAP = 2,
  NLS_HALT_BOUNDARY_MASS = 3,
} NlsHalt;

/**
 * Result code of every fallible call.
 */
typedef enum NlsStatus {
  NLS_STATUS_OK = 0,
  NLS_STATUS_NULL_POINTER = 1,
  NLS_STATUS_INVALID_ARGUMENT = 2,
  NLS_STATUS_NON_FINITE = 3,
  /**
   * Bessel zero, quadrature or root finder failure.
   */
  NLS_STATUS_NUMERICAL = 4,
  NLS_STATUS_TRACE = 5,
  NLS_STATUS_CONFIG = 6,
  NLS_STATUS_IO = 7,
  NLS_STATUS_BUFFER_TOO_SMALL = 8,
  NLS_STATUS_INDEX_OUT_OF_RANGE = 9,
  NLS_STATUS_PANIC = 10,
} NlsStatus;

/**
 * Opaque radial field on a grid.
 */
typedef struct NlsField NlsField;

/**
 * Opaque Fourier-Bessel grid.
 */
typedef struct NlsGrid NlsGrid;

/**
 * Opaque simulation trace.
 */
typedef struct NlsTrace NlsTrace;

/**
 * Integral quantities of one field.
 */
typedef struct NlsFieldNorms {
  double mass;
  double kinetic;
  double critical_power;
  double energy;
  double critical_energy;
  double correction;
  double functional_k;
  double htilde;
} NlsFieldNorms;

/**
 * Evolution settings. Fill with [`nlslab_evolve_params_default`] first.
 */
typedef struct NlsEvolveParams {
  double gamma;
  double dt;
  double t_end;
  size_t stride;
  double amplitude_cap;
  double kinetic_cap;
  double boundary_limit;
  double k;
  bool linear;
} NlsEvolveParams;

typedef struct NlsScattering {
  bool scattered;
  /**
   * Number of Cauchy residuals computed.
   */
  size_t count;
  /**
   * Last Cauchy residual, NaN when `count == 0`.
   */
  double final_residual;
} NlsScattering;

typedef struct NlsVirial {
  double max_residual;
  double relative_residual;
  size_t rows;
} NlsVirial;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *nlslab_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *nlslab_last_error_message(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void nlslab_string_free(char *s);

/**
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum NlsStatus nlslab_grid_new(uint32_t dim, double r_max, size_t modes, struct NlsGrid **out);

/**
 * # Safety
 * `grid` must be null or a live grid handle.
 */
void nlslab_grid_free(struct NlsGrid *grid);

/**
 * Number of nodes, 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live grid handle.
 */
size_t nlslab_grid_len(const struct NlsGrid *grid);

/**
 * Copies the radial nodes into `out[0..len]`.
 *
 * # Safety
 * `out` must be valid for `len` writes.
 */
enum NlsStatus nlslab_grid_nodes(const struct NlsGrid *grid, double *out, size_t len);

/**
 * Builds a field from node samples. `im` may be null for a real field.
 *
 * # Safety
 * `re` (and `im` when non-null) must be valid for `len` reads.
 */
enum NlsStatus nlslab_field_new(const struct NlsGrid *grid,
                                const double *re,
                                const double *im,
                                size_t len,
                                struct NlsField **out);

/**
 * `amplitude * exp(-(r/width)^2)`.
 *
 * # Safety
 * `grid` must be a live handle and `out` valid for one pointer write.
 */
enum NlsStatus nlslab_field_gaussian(const struct NlsGrid *grid,
                                     double amplitude,
                                     double width,
                                     struct NlsField **out);

/**
 * Untapered rescaled ground state `e^{i phase} scale^{-(n-2)/2} W(r/scale)`.
 *
 * # Safety
 * `grid` must be a live handle and `out` valid for one pointer write.
 */
enum NlsStatus nlslab_field_ground_state(const struct NlsGrid *grid,
                                         double scale,
                                         double phase,
                                         struct NlsField **out);

/**
 * # Safety
 * `field` must be null or a live field handle.
 */
void nlslab_field_free(struct NlsField *field);

/**
 * # Safety
 * `field` must be null or a live field handle.
 */
size_t nlslab_field_len(const struct NlsField *field);

/**
 * Copies node samples out. Either buffer may be null to skip it.
 *
 * # Safety
 * Non-null buffers must be valid for `len` writes.
 */
enum NlsStatus nlslab_field_samples(const struct NlsField *field,
                                    double *re,
                                    double *im,
                                    size_t len);

/**
 * Mass, energies and norms of `field` for nonlinearity exponent `gamma`
 * and regularity `k`.
 *
 * # Safety
 * `field` must be a live handle and `out` valid for one write.
 */
enum NlsStatus nlslab_field_norms(const struct NlsField *field,
                                  double gamma,
                                  double k,
                                  struct NlsFieldNorms *out);

/**
 * Free Schroedinger evolution `e^{it Delta} field` as a new handle.
 *
 * # Safety
 * `field` must be a live handle and `out` valid for one pointer write.
 */
enum NlsStatus nlslab_field_propagate(const struct NlsField *field,
                                      double t,
                                      struct NlsField **out);

/**
 * Default settings for `grid` (`dt = 1e-3 (R/N)^2`).
 *
 * # Safety
 * `grid` must be a live handle and `out` valid for one write.
 */
enum NlsStatus nlslab_evolve_params_default(const struct NlsGrid *grid,
                                            double gamma,
                                            double t_end,
                                            struct NlsEvolveParams *out);

/**
 * Runs the split-step integrator from `initial`.
 *
 * # Safety
 * `initial` and `params` must be valid and `out` valid for one pointer write.
 */
enum NlsStatus nlslab_evolve(const struct NlsField *initial,
                             const struct NlsEvolveParams *params,
                             struct NlsTrace **out);

/**
 * # Safety
 * `trace` must be null or a live trace handle.
 */
void nlslab_trace_free(struct NlsTrace *trace);

/**
 * Number of snapshots, 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live trace handle.
 */
size_t nlslab_trace_len(const struct NlsTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle and `out` valid for one write.
 */
enum NlsStatus nlslab_trace_halt(const struct NlsTrace *trace, enum NlsHalt *out);

/**
 * # Safety
 * `trace` must be a live handle and `out` valid for one write.
 */
enum NlsStatus nlslab_trace_time(const struct NlsTrace *trace, size_t index, double *out);

/**
 * Copies snapshot `index` into a new field handle.
 *
 * # Safety
 * `trace` must be a live handle and `out` valid for one pointer write.
 */
enum NlsStatus nlslab_trace_snapshot(const struct NlsTrace *trace,
                                     size_t index,
                                     struct NlsField **out);

/**
 * Serializes the trace in the text format read by [`nlslab_trace_from_text`].
 * Release the string with [`nlslab_string_free`].
 *
 * # Safety
 * `trace` must be a live handle and `out` valid for one pointer write.
 */
enum NlsStatus nlslab_trace_to_text(const struct NlsTrace *trace, char **out);

/**
 * # Safety
 * `text` must be a NUL-terminated string and `out` valid for one pointer write.
 */
enum NlsStatus nlslab_trace_from_text(const char *text, struct NlsTrace **out);

/**
 * Cauchy test of the profile `e^{-it Delta} u(t)` in `H~^k`.
 *
 * # Safety
 * `trace` must be a live handle and `out` valid for one write.
 */
enum NlsStatus nlslab_trace_scattering(const struct NlsTrace *trace,
                                       double k,
                                       double tol,
                                       struct NlsScattering *out);

/**
 * Residual of the localized virial identity with weight radius `m`, using
 * default threshold constants at `delta`.
 *
 * # Safety
 * `trace` must be a live handle and `out` valid for one write.
 */
enum NlsStatus nlslab_trace_virial(const struct NlsTrace *trace,
                                   double m,
                                   double delta,
                                   struct NlsVirial *out);

/**
 * Runs the TOML config at `config_path` like `nlslab simulate` and writes
 * all reports into `out_dir` (null: the config's own output directory).
 *
 * # Safety
 * `config_path` must be a NUL-terminated string; `out_dir` null or one.
 */
enum NlsStatus nlslab_simulate_config(const char *config_path, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NLSLAB_H */
