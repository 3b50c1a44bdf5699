#ifndef SMOT_H
#define SMOT_H

#include <stddef.h>
#include <stdint.h>

#define SMOT_OK 0

#define SMOT_ERR_NULL_POINTER 1

#define SMOT_ERR_INVALID_INPUT 2

#define SMOT_ERR_NUMERICAL 3

#define SMOT_ERR_IO 4

#define SMOT_ERR_PANIC 5

#define SMOT_FAMILY_UNIFORM 0

#define SMOT_FAMILY_BACHELIER 1

#define SMOT_FAMILY_GBM 2

#define SMOT_CURVE_SPECIALISED 0

#define SMOT_CURVE_GENERIC 1

// A one-period decreasing supermartingale coupling.
typedef struct SmotCoupling SmotCoupling;

// Continuous-time transition curves and jump characteristics of a family.
typedef struct SmotCurve SmotCurve;

// Continuous-time dual superhedging strategy.
typedef struct SmotDual SmotDual;

// A family of marginals `(mu_t)`.
typedef struct SmotFamily SmotFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of the calling thread into `buf` (NUL
// terminated, truncated to `len - 1` bytes). Returns the full message length.
uintptr_t smot_last_error_message(char *buf, uintptr_t len);

// Creates a built-in family. `delta` is the start time of the Bachelier
// and GBM families and is ignored for the uniform family.
int32_t smot_family_new(int32_t kind, double delta, struct SmotFamily **out);

// Reads a tabulated family from a CSV file with header `t,x,f`.
int32_t smot_family_from_table(const char *path, struct SmotFamily **out);

void smot_family_free(struct SmotFamily *family);

// Start time of the family's time range.
int32_t smot_family_t_min(const struct SmotFamily *family, double *out);

int32_t smot_family_cdf(const struct SmotFamily *family, double t, double x, double *out);

int32_t smot_family_quantile(const struct SmotFamily *family, double t, double u, double *out);

int32_t smot_family_mean(const struct SmotFamily *family, double t, double *out);

// Builds the decreasing coupling of `mu_t` and `mu_{t + eps}`.
int32_t smot_coupling_new(const struct SmotFamily *family,
                          double t,
                          double eps,
                          struct SmotCoupling **out);

void smot_coupling_free(struct SmotCoupling *coupling);

// Phase-transition point `x1`, left end `y1` of its image and the upper
// density crossing `m_upper`.
int32_t smot_coupling_phase(const struct SmotCoupling *coupling,
                            double *x1,
                            double *y1,
                            double *m_upper);

// Destinations `T_d(x)`, `T_u(x)` and the upward probability `q(x)`.
int32_t smot_coupling_branches(const struct SmotCoupling *coupling,
                               double x,
                               double *t_d,
                               double *t_u,
                               double *q);

// `T_u(x)` if `u < q(x)`, else `T_d(x)`.
int32_t smot_coupling_sample(const struct SmotCoupling *coupling, double x, double u, double *out);

// Tabulates the transition curves of `family`.
int32_t smot_curve_new(const struct SmotFamily *family, int32_t mode, struct SmotCurve **out);

void smot_curve_free(struct SmotCurve *curve);

// `x1(t)` and `m_t`.
int32_t smot_curve_at(const struct SmotCurve *curve, double t, double *x1, double *m);

// Downward drift `jd`, upward jump size `ju`, jump intensity and target `T_u`.
int32_t smot_curve_characteristics(const struct SmotCurve *curve,
                                   double t,
                                   double x,
                                   double *jd,
                                   double *ju,
                                   double *intensity,
                                   double *tu);

// Simulates the continuous-time process with step `dt` and writes the path
// values at `times` into `out`, row-major with one row per path
// (`n_paths * n_times` values).
int32_t smot_simulate_sde(const struct SmotCurve *curve,
                          double dt,
                          uintptr_t n_paths,
                          uint64_t seed,
                          const double *times,
                          uintptr_t n_times,
                          double *out);

// Simulates the `n`-period chain of decreasing couplings on an equal
// partition of the family's time range; output layout as in
// [`smot_simulate_sde`].
int32_t smot_simulate_chain(const struct SmotFamily *family,
                            uintptr_t n,
                            uintptr_t n_paths,
                            uint64_t seed,
                            const double *times,
                            uintptr_t n_times,
                            double *out);

// Optimal value of the transport problem for the named cost
// (`"default"` or `"zero"`) and its quadrature error estimate.
int32_t smot_optimal_value(const struct SmotCurve *curve,
                           const char *cost_name,
                           double *value,
                           double *error_estimate);

// Builds the dual strategy for the named cost.
int32_t smot_dual_new(const struct SmotCurve *curve, const char *cost_name, struct SmotDual **out);

void smot_dual_free(struct SmotDual *dual);

// Hedge ratio `h*(t, x)` and value function `psi*(t, x)`.
int32_t smot_dual_eval(const struct SmotDual *dual, double t, double x, double *h, double *psi);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SMOT_H */
