#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pam/lattice.hpp"

namespace pam {

// H = diffusion_scale * L + sigma * V on a killed box. The killed restriction
// is the submatrix of the infinite operator, so its top eigenvalue increases
// monotonically with the box radius.
struct SchrodingerOp {
    JumpKernel kernel;
    double diffusion_scale;
    double sigma;
    Correlator V;
    BoxDomain domain;

    SchrodingerOp(JumpKernel k, double dscale, double sig, Correlator v, BoxDomain dom);
};

struct SpectralReport {
    double lambda_top = 0.0;
    LatticeField eigenvector;
    double residual = 0.0;
    std::vector<std::pair<std::int64_t, double>> box_trace;  // (L, lambda_top(L))
    bool positive_eigenvalue_found = false;
    bool stabilized = false;   // |lambda(2L) - lambda(L)| < stab_tol reached
    bool converged = true;     // eigensolver residual target met
    std::string to_json() const;
    std::string eigenvector_csv() const;  // columns: x..., psi
};

struct TopEigenvalueOptions {
    double stab_tol = 1e-6;
    int max_doublings = 2;
    std::int64_t max_sites = 8000000;
    double residual_tol = 1e-9;
    int max_matvecs = 20000;
};

// Largest eigenvalue of the killed-box restriction (restarted Lanczos, dense
// fallback on small boxes), re-run on doubled boxes until the value
// stabilizes. positive_eigenvalue_found = stabilized and lambda > 10*residual.
SpectralReport top_eigenvalue(const SchrodingerOp& op, const TopEigenvalueOptions& opts = {});

// dense symmetric matrix of the killed-box operator (row-major, n x n)
std::vector<double> dense_matrix(const SchrodingerOp& op);
// full spectrum of the killed-box operator, ascending
std::vector<double> dense_spectrum(const SchrodingerOp& op);

struct CountResult {
    std::int64_t count = 0;
    bool stable = false;
    double threshold = 0.0;
    std::vector<std::pair<std::int64_t, std::int64_t>> trace;  // (L, count)
};

// Number of eigenvalues above max(1e-8, 10*machine slack), at the configured
// box and its double. Dense solve up to ~4000 sites; exact Sturm/LDL^T
// inertia for one-dimensional nearest-neighbor operators of any size.
CountResult count_positive_eigenvalues(const SchrodingerOp& op);

struct SigmaCrWitness {
    double sigma = 0.0;
    bool found = false;
    double lambda_top = 0.0;
    double residual = 0.0;
};

struct SigmaCrResult {
    bool refused = false;       // recurrent kernel: threshold is 0
    std::string message;
    bool none_below_max = false;
    double sigma_cr = 0.0;
    double bs_top = 0.0;        // largest Birman-Schwinger eigenvalue at lambda -> 0+
    SigmaCrWitness below, above;
};

// Critical coupling of L + sigma V (transient kernels, V positive somewhere):
// bisection on sigma of the lattice Birman-Schwinger bound-state predicate
// built from zero-energy Green kernels; killed-box eigenvalue detection
// provides the bracketing witnesses at sigma_cr*(1 -+ witness_offset).
SigmaCrResult sigma_cr(const JumpKernel& kernel, const Correlator& V, double sigma_max, double tol,
                       int grid_n, double witness_offset = 0.1, std::int64_t witness_box = 24);

struct BargmannResult {
    double s_raw = 0.0;         // sum_x sigma|V(x)| int_{1/(sigma|V(x)|)}^inf p(t,x,x) dt
    double s_simplified = 0.0;  // sigma^{d/alpha} sum_x |V(x)|^{d/alpha}
    double tail_exponent = 0.0;
    double richardson_delta = 0.0;
};

BargmannResult bargmann_quantities(const JumpKernel& kernel, const Correlator& V, double sigma,
                                   double alpha, int grid_n);

struct Sigma0Result {
    bool infinite = false;       // sum |x||V(x)| = 0
    double sigma0 = 0.0;
    double symbol_integral = 0.0;  // (2pi)^-d int |k| |L_hat(k)|^-1 dk
    double moment_sum = 0.0;       // sum_x |x| |V(x)|
    std::vector<std::pair<int, double>> trace;
};

// Coupling below which the positive eigenvalue is unique,
// sigma0 = (2 * symbol_integral * moment_sum)^-1; throws when the symbol
// integral diverges (the finite |k|/|L_hat| moment condition fails).
Sigma0Result sigma0_uniqueness_bound(const JumpKernel& kernel, const Correlator& V, int grid_n);

enum class Recurrence { recurrent, transient };

// Model symbol family 1 - a_hat ~ beta(k/|k|) |k|^alpha near 0; beta is a
// positive constant, optionally with even cosine harmonics in d = 2.
struct SymbolFamily {
    int dim;
    double alpha;
    std::vector<double> beta;  // beta[0] + sum_m beta[m] cos(2 m theta)

    SymbolFamily(int d, double a, std::vector<double> b = {1.0});
    double eval(const double* k_unit) const;
};

struct ClassifyResult {
    Recurrence label = Recurrence::transient;
    bool diagnostic_divergent = false;  // dyadic-grid test of the return-time integral
    std::vector<std::pair<int, double>> trace;
};

ClassifyResult classify_recurrence(const SymbolFamily& family, int grid_n = 64);
// concrete kernel with finite support: alpha = 2 rule plus the numeric
// divergence diagnostic of (2pi)^-d int dk/(1 - a_hat)
ClassifyResult classify_recurrence(const JumpKernel& kernel, int grid_n = 64);

const char* to_string(Recurrence r);

struct ZeroMeanReport {
    double sigma = 0.0;
    std::int64_t m = 0;          // half-width floor(sigma^-3), capped
    double Q = 0.0;              // sum_x [-(phi(x+1)-phi(x))^2 + sigma V phi^2]
    double eps_delta = 0.0;      // (H phi)(0): delta coefficient; equals Q exactly
    double eps_slope = 0.0;      // [phi(1)-phi(0)] - [phi(0)-phi(-1)]
    double eps1 = 0.0, eps2 = 0.0;
    double b_plus = 0.0, b_minus = 0.0;
    double c2_plus = 0.0, c2_minus = 0.0;
    double predicted = 0.0;      // sigma*sum V + sigma^2*(c2_plus + c2_minus)
    bool positive_found = false;
    std::vector<double> phi;     // phi(-m..m), for diagnostics
};

// One-dimensional zero-mean-compatible potential construction: exact lattice
// solutions of psi(x+1)+psi(x-1)-2psi(x)+sigma V psi = 0 glued into a compact
// trial function whose quadratic form certifies a positive eigenvalue.
ZeroMeanReport zero_mean_1d_construct(const Correlator& V, double sigma,
                                      std::int64_t site_cap = 1000000);

}  // namespace pam
