/* pamlab — C interface to the lattice Anderson-model laboratory.
 *
 * Conventions:
 *   - every function returns a pam_status; results go to out-parameters
 *   - returned strings are heap-allocated; release them with pam_string_free
 *   - handles are opaque; release them with the matching *_free
 *   - on failure, pam_last_error() returns a thread-local message
 *   - structured inputs and outputs use the same JSON shapes as the CLI:
 *     kernels/correlators are {"dim": d, "entries": [[[z...], value], ...]}
 */
#ifndef PAMLAB_H
#define PAMLAB_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pam_status {
    PAM_OK = 0,
    PAM_ERR_NUMERIC = 1,  /* numeric or runtime failure */
    PAM_ERR_CONFIG = 2,   /* invalid argument or configuration */
    PAM_ERR_NULL = 3,     /* required pointer argument was NULL */
    PAM_DIVERGENT = 4     /* requested integral diverges (sentinel) */
} pam_status;

typedef struct pam_kernel pam_kernel;         /* jump distribution a(z) */
typedef struct pam_correlator pam_correlator; /* correlator B / potential V */

const char* pam_version(void);
const char* pam_last_error(void);
void pam_string_free(char* s);

/* --- kernels and correlators --------------------------------------------- */
pam_status pam_kernel_create_json(const char* json, pam_kernel** out);
pam_status pam_kernel_create_nn(int dim, pam_kernel** out);
pam_status pam_kernel_to_json(const pam_kernel* k, char** out);
void pam_kernel_free(pam_kernel* k);

pam_status pam_correlator_from_b_json(const char* b_json, pam_correlator** out);
pam_status pam_correlator_create_json(const char* v_json, pam_correlator** out);
pam_status pam_correlator_to_json(const pam_correlator* c, char** out);
void pam_correlator_free(pam_correlator* c);

/* --- symbols, heat kernel, Green function -------------------------------- */
pam_status pam_symbol_a(const pam_kernel* k, const double* kvec, int dim, double* out);
pam_status pam_symbol_min(const pam_kernel* k, int grid_n, double* out);
pam_status pam_spectral_density(const pam_correlator* c, const double* kvec, int dim, double* out);
pam_status pam_heat_kernel(const pam_kernel* k, double kappa, double rate_multiplier, double t,
                           const int64_t* x, int grid_n, double* out);
/* lambda > 0; for lambda = 0 use pam_green_zero, which reports divergence */
pam_status pam_green_diagonal(const pam_kernel* k, double lambda, int grid_n, double* out);
pam_status pam_green_zero(const pam_kernel* k, const int64_t* x, int grid_n, double* out);

/* --- pair partition ------------------------------------------------------- */
/* {"p": p, "groups": [[[i,j], ...], ...]} */
pam_status pam_partition_build_json(int p, char** out);
pam_status pam_partition_display(int p, char** out);
pam_status pam_partition_verify_json(const char* schedule_json, char** report_json);

/* --- moments -------------------------------------------------------------- */
/* m2(t, origin) for each grid time; t_grid increasing */
pam_status pam_solve_m2_origin(const pam_kernel* k, const pam_correlator* b_corr, double kappa,
                               const double* t_grid, int n_t, int64_t box_radius, double* out);
pam_status pam_gamma2(const pam_kernel* k, const pam_correlator* b_corr, double kappa,
                      int64_t box_radius, double* out);
/* {"crude_upper":..., "crude_lower_rate":..., ...} */
pam_status pam_gamma_p_bounds_json(const pam_kernel* k, const pam_correlator* b_corr, int p,
                                   double kappa, int64_t box_radius, char** out);

/* --- Feynman-Kac Monte Carlo ---------------------------------------------- */
pam_status pam_fk_moment(const pam_kernel* k, const pam_correlator* b_corr, int p, double kappa,
                         double t, int64_t n_paths, uint64_t seed, int threads, double* log_estimate,
                         double* log_stderr);
pam_status pam_fk_lyapunov(const pam_kernel* k, const pam_correlator* b_corr, int p, double kappa,
                           const double* t_grid, int n_t, int64_t n_paths, uint64_t seed,
                           int threads, double* slope, double* slope_stderr);

/* --- spectral analysis ----------------------------------------------------- */
/* report JSON: {"lambda_top":..., "residual":..., "box_trace":[[L,lam],...],
 *               "positive_eigenvalue_found":..., "stabilized":...} */
pam_status pam_top_eigenvalue_json(const pam_kernel* k, const pam_correlator* v,
                                   double diffusion_scale, double sigma, int64_t box_radius,
                                   char** report_json);
pam_status pam_count_positive_eigenvalues(const pam_kernel* k, const pam_correlator* v,
                                          double diffusion_scale, double sigma, int64_t box_radius,
                                          int64_t* count, int* stable);
pam_status pam_sigma_cr_json(const pam_kernel* k, const pam_correlator* v, double sigma_max,
                             double tol, int grid_n, char** result_json);
pam_status pam_bargmann(const pam_kernel* k, const pam_correlator* v, double sigma, double alpha,
                        int grid_n, double* s_raw, double* s_simplified);
/* *is_infinite = 1 when the potential carries no first-moment mass */
pam_status pam_sigma0(const pam_kernel* k, const pam_correlator* v, int grid_n, double* sigma0,
                      int* is_infinite);
/* label_out must hold at least 16 bytes ("recurrent"/"transient") */
pam_status pam_classify(int dim, double alpha, char* label_out);
pam_status pam_zero_mean_1d_json(const pam_correlator* v, double sigma, char** report_json);

/* --- batch experiments ------------------------------------------------------ */
pam_status pam_run_experiment(const char* config_json, const char* output_dir, char** summary);
pam_status pam_run_sweep(const char* config_json, const char* parameter, const char* values_json,
                         const char* output_dir, char** summary);

#ifdef __cplusplus
}
#endif

#endif /* PAMLAB_H */
