#ifndef WALLGAP_H
#define WALLGAP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum {
  WG_OK = 0,
  WG_NULL_POINTER = 1,
  /**
   * Bad argument or malformed UTF-8.
   */
  WG_INVALID_ARGUMENT = 2,
  /**
   * Config file missing or unparsable.
   */
  WG_CONFIG = 3,
  /**
   * Input rejected by model or gap-condition validation.
   */
  WG_VALIDATION = 4,
  /**
   * Eigensolver, quadrature or band identification failure.
   */
  WG_NUMERICAL = 5,
  WG_IO = 6,
  WG_BUFFER_TOO_SMALL = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  WG_PANIC = 8,
} WgStatus;

/**
 * Opaque parsed and validated configuration.
 */
typedef struct WgConfig WgConfig;

/**
 * One strip-limit crossing.
 */
typedef struct {
  int64_t n;
  int64_t m;
  double tau0;
  double e0;
  /**
   * Nonzero when τ₀ lies on 0 or π/a1.
   */
  int32_t boundary;
} WgCrossing;

/**
 * Gap coefficients of one crossing.
 */
typedef struct {
  double beta_l;
  double beta_r;
  double lambda_l;
  double lambda_r;
  double tau1_l;
  double tau1_r;
  double t_l;
  double t_r;
} WgGapCoefficients;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL.
 * Valid until the next failing call on the same thread.
 */
const char *wg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *wg_version(void);

/**
 * Parses and validates a TOML config held in memory.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
WgStatus wg_config_from_toml(const char *toml, WgConfig **out);

/**
 * Loads a TOML config from a file path.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
WgStatus wg_config_from_file(const char *path, WgConfig **out);

/**
 * Releases a config. NULL is ignored.
 *
 * # Safety
 * `cfg` must come from `wg_config_from_*` and not be used afterwards.
 */
void wg_config_free(WgConfig *cfg);

/**
 * Number of ε values in the config schedule.
 *
 * # Safety
 * `cfg` must be a live config, `out` a valid pointer.
 */
WgStatus wg_config_epsilon_count(const WgConfig *cfg, uintptr_t *out);

/**
 * Copies the ε schedule.
 *
 * # Safety
 * `buf` must hold `cap` doubles; `len` must be valid.
 */
WgStatus wg_config_epsilons(const WgConfig *cfg, double *buf, uintptr_t cap, uintptr_t *len);

/**
 * Strip-limit crossings with |n|, |m| ≤ `n_max`; `n_max < 0` uses the config value.
 *
 * # Safety
 * `buf` must hold `cap` elements; `len` must be valid.
 */
WgStatus wg_crossings(const WgConfig *cfg,
                      int64_t n_max,
                      WgCrossing *buf,
                      uintptr_t cap,
                      uintptr_t *len);

/**
 * Gap coefficients for a crossing (only `n`, `m`, `tau0` are read).
 *
 * # Safety
 * `crossing` and `out` must be valid pointers.
 */
WgStatus wg_gap_coefficients(const WgConfig *cfg,
                             const WgCrossing *crossing,
                             WgGapCoefficients *out);

/**
 * Ascending eigenvalues of the 1D cross-section at (τ₂, ε); `q = 0` picks the default cutoff.
 *
 * # Safety
 * `buf` must hold `cap` doubles; `len` must be valid.
 */
WgStatus wg_bands1d(const WgConfig *cfg,
                    double tau2,
                    double eps,
                    uintptr_t q,
                    double *buf,
                    uintptr_t cap,
                    uintptr_t *len);

/**
 * 2D eigenvalues inside `[lo, hi]` at τ = (τ₁, τ₂).
 *
 * `n = 0` and `q = 0` select defaults. With `p_modes = 0` the dense solver is
 * used; otherwise the reduced solver keeps `p_modes` cross-section modes.
 *
 * # Safety
 * `buf` must hold `cap` doubles; `len` must be valid.
 */
WgStatus wg_bands2d(const WgConfig *cfg,
                    double tau1,
                    double tau2,
                    double eps,
                    uintptr_t n,
                    uintptr_t q,
                    uintptr_t p_modes,
                    double lo,
                    double hi,
                    double *buf,
                    uintptr_t cap,
                    uintptr_t *len);

/**
 * Default number of cross-section modes for the reduced 2D solver.
 */
uintptr_t wg_default_modal_p(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WALLGAP_H */
