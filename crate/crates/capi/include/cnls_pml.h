/* C interface of the cnls-pml solver. */

#ifndef CNLS_PML_H
#define CNLS_PML_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/* Opaque handles. Create them with the cnls_* constructors and release
 * them with the matching cnls_*_free call. */
typedef struct CnlsConfig CnlsConfig;
typedef struct CnlsRun CnlsRun;


/**
 * Success.
 */
#define CNLS_OK 0

/**
 * Null pointer, invalid UTF-8, bad buffer length or an internal panic.
 */
#define CNLS_ERR_ARGUMENT 1

/**
 * The configuration failed validation or an input could not be parsed.
 */
#define CNLS_ERR_INVALID 2

/**
 * A linear or nonlinear solve failed to converge.
 */
#define CNLS_ERR_NUMERICAL 3

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on the calling thread. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *cnls_last_error(void);

/**
 * Parses a TOML scenario configuration.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out` must be a valid
 * pointer.
 */
int32_t cnls_config_from_toml(const char *text, CnlsConfig **out);

/**
 * Loads one of the built-in scenario presets by name (for example
 * `"lin-beta0"` or `"nl-mixed"`).
 *
 * # Safety
 * `name` must be a valid NUL-terminated string; `out` must be a valid
 * pointer.
 */
int32_t cnls_config_from_scenario(const char *name, CnlsConfig **out);

/**
 * Coarsens the spatial resolution by `scale` in `(0, 1]` (1 keeps the
 * configured grid, 0.5 doubles both grid spacings).
 *
 * # Safety
 * `config` must be a live handle from a `cnls_config_*` constructor.
 */
int32_t cnls_config_set_scale(CnlsConfig *config, double scale);

/**
 * Serializes the configuration back to TOML. The returned string must be
 * released with `cnls_string_free`.
 *
 * # Safety
 * `config` must be a live handle; `out` must be a valid pointer.
 */
int32_t cnls_config_to_toml(const CnlsConfig *config, char **out);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from `cnls_config_to_toml` and not be freed twice.
 */
void cnls_string_free(char *s);

/**
 * Releases a configuration handle.
 *
 * # Safety
 * `config` must come from a `cnls_config_*` constructor and not be freed
 * twice.
 */
void cnls_config_free(CnlsConfig *config);

/**
 * Largest stable absorption magnitude `σ₁(β̃)` for the normalized mixed
 * coefficient `tilde_beta` with `|β̃| ≤ 1`. Writes `INFINITY` when every
 * magnitude is stable (`β̃ = 0`).
 *
 * # Safety
 * `out_sigma` must be a valid pointer.
 */
int32_t cnls_threshold_sigma1(double tilde_beta, double *out_sigma);

/**
 * Integrates the configured scenario to its final time and returns a run
 * handle for inspection. Release it with `cnls_run_free`.
 *
 * # Safety
 * `config` must be a live handle; `out` must be a valid pointer.
 */
int32_t cnls_run(const CnlsConfig *config, CnlsRun **out);

/**
 * Releases a run handle.
 *
 * # Safety
 * `run` must come from `cnls_run` and not be freed twice.
 */
void cnls_run_free(CnlsRun *run);

/**
 * Grid shape of the run: points per direction and number of components.
 *
 * # Safety
 * `run` must be a live handle; the out-pointers must be valid.
 */
int32_t cnls_run_shape(const CnlsRun *run,
                       uint64_t *out_nx,
                       uint64_t *out_ny,
                       uint64_t *out_components);

/**
 * Simulated time reached and the number of time steps taken.
 *
 * # Safety
 * `run` must be a live handle; the out-pointers must be valid.
 */
int32_t cnls_run_progress(const CnlsRun *run, double *out_final_time, uint64_t *out_steps);

/**
 * Largest field magnitude of the final state over all components.
 *
 * # Safety
 * `run` must be a live handle; `out_max_abs` must be a valid pointer.
 */
int32_t cnls_run_max_abs(const CnlsRun *run, double *out_max_abs);

/**
 * Copies one component of the final state into caller-owned real and
 * imaginary buffers of `len` = nx·ny entries each, row-major in y
 * (index `iy·nx + ix`).
 *
 * # Safety
 * `run` must be a live handle; `out_re` and `out_im` must point to `len`
 * writable doubles each.
 */
int32_t cnls_run_field(const CnlsRun *run,
                       uint64_t component,
                       double *out_re,
                       double *out_im,
                       uint64_t len);

/**
 * Stability warning emitted for this run, or null if the absorption
 * magnitudes were inside the stable range. The pointer stays valid for the
 * lifetime of the run handle.
 *
 * # Safety
 * `run` must be a live handle.
 */
const char *cnls_run_stability_warning(const CnlsRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CNLS_PML_H */
