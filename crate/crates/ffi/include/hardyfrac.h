#ifndef HARDYFRAC_H
#define HARDYFRAC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HfCase {
  HF_CASE_I1 = 1,
  HF_CASE_I2 = 2,
  HF_CASE_II = 3,
} HfCase;

typedef enum HfStatus {
  HF_STATUS_OK = 0,
  HF_STATUS_NULL_POINTER = 1,
  HF_STATUS_INVALID_PARAMETER = 2,
  HF_STATUS_SHAPE_MISMATCH = 3,
  HF_STATUS_DOMAIN = 4,
  HF_STATUS_REGIME = 5,
  HF_STATUS_NO_CONVERGENCE = 6,
  HF_STATUS_SOLVER_FAILURE = 7,
  HF_STATUS_PRECONDITION = 8,
  HF_STATUS_CONFIG = 9,
  HF_STATUS_IO = 10,
  HF_STATUS_INVALID_UTF8 = 11,
  HF_STATUS_BUFFER_TOO_SMALL = 12,
  HF_STATUS_PANIC = 13,
} HfStatus;

// Opaque radial run.
typedef struct HfPdeRun HfPdeRun;

// Opaque scalar trajectory.
typedef struct HfTrajectory HfTrajectory;

typedef struct HfBlowupEstimate {
  double t_m;
  enum HfCase case_tag;
  double delta;
  double w0;
} HfBlowupEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread, NUL-terminated, into `buf`
// and returns the full message length without the terminator. Passing a
// null `buf` or `len == 0` only queries the length.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t hf_last_error_message(char *buf, size_t len);

// NUL-terminated version string with static lifetime.
const char *hf_version(void);

// `((n - p) / p)^p`.
//
// # Safety
// `out` must be valid for writes.
enum HfStatus hf_hardy_constant(double n, double p, double *out);

// Closed-form blow-up time of `D^alpha u = u^q`, `u(0) = u0`.
//
// # Safety
// `out` must be valid for writes.
enum HfStatus hf_fode_blowup_time(double alpha, double q, double u0, struct HfBlowupEstimate *out);

// Integrates `D^alpha u = u^q` on `steps` graded steps over `[0, horizon]`
// (`grading = 1` is uniform), stopping once `u` exceeds `threshold`.
//
// # Safety
// `out` must be valid for writes. The handle written there is owned by the
// caller and released with [`hf_trajectory_free`].
enum HfStatus hf_fode_solve(double alpha,
                            double q,
                            double u0,
                            double horizon,
                            size_t steps,
                            double grading,
                            double threshold,
                            struct HfTrajectory **out);

// Number of accepted nodes, including `t = 0`. Zero for a null handle.
//
// # Safety
// `traj` must be null or a live handle.
size_t hf_trajectory_len(const struct HfTrajectory *traj);

// Copies the accepted times and values into `times` and `values` (either may
// be null). Both buffers need [`hf_trajectory_len`] entries.
//
// # Safety
// `traj` must be a live handle; non-null buffers must be valid for `len` writes.
enum HfStatus hf_trajectory_copy(const struct HfTrajectory *traj,
                                 double *times,
                                 double *values,
                                 size_t len);

// Writes 1 to `blew_up` and the divergence time to `time` if the solver
// crossed its threshold, else 0 and NaN.
//
// # Safety
// `traj` must be a live handle; the out-pointers must be valid for writes.
enum HfStatus hf_trajectory_blowup(const struct HfTrajectory *traj, int32_t *blew_up, double *time);

// # Safety
// `traj` must be null or a handle not yet freed.
void hf_trajectory_free(struct HfTrajectory *traj);

// First eigenvalue of `-Delta_p v = lambda W_N |v|^{p-2} v` on the ball of
// radius `radius` in dimension `n`, with `m` radial cells. `level` may be
// `INFINITY` for the untruncated weight.
//
// # Safety
// `out` must be valid for writes.
enum HfStatus hf_eigen_first(double n,
                             double p,
                             double radius,
                             double level,
                             size_t m,
                             double *out);

// Solves the truncated radial problem described by a TOML experiment config
// (the same format as the command-line tool; missing keys take defaults).
// A run that diverges still succeeds; query it with [`hf_pde_run_diverged`].
//
// # Safety
// `config_toml` must be a NUL-terminated string; `out` must be valid for
// writes. Release the handle with [`hf_pde_run_free`].
enum HfStatus hf_pde_solve_toml(const char *config_toml, struct HfPdeRun **out);

// Number of recorded steps, including `t = 0`. Zero for a null handle.
//
// # Safety
// `run` must be null or a live handle.
size_t hf_pde_run_len(const struct HfPdeRun *run);

// Last reached time. NaN for a null handle.
//
// # Safety
// `run` must be null or a live handle.
double hf_pde_run_final_time(const struct HfPdeRun *run);

// 1 if the step solver diverged, 0 if the run reached the horizon, -1 for a
// null handle.
//
// # Safety
// `run` must be null or a live handle.
int32_t hf_pde_run_diverged(const struct HfPdeRun *run);

// Copies per-step times and L2 norms; either buffer may be null.
//
// # Safety
// `run` must be a live handle; non-null buffers must be valid for `len` writes.
enum HfStatus hf_pde_run_norms(const struct HfPdeRun *run,
                               double *times,
                               double *l2_norms,
                               size_t len);

// # Safety
// `run` must be null or a handle not yet freed.
void hf_pde_run_free(struct HfPdeRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HARDYFRAC_H */
