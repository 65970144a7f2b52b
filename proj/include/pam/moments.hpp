#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pam/lattice.hpp"
#include "pam/spectral.hpp"
#include "pam/walk.hpp"

namespace pam {

// Grouping of all pairs {i<j} of {1..p}: p groups of floor(p/2) pairs for odd
// p (group k avoids index k), p-1 perfect matchings for even p. Pairs are
// kept in construction order; (a,b) renders as "B(x_b - x_a)".
struct PartitionSchedule {
    int p = 0;
    std::vector<std::vector<std::pair<int, int>>> groups;

    std::string display() const;  // one "Gk = B(..) + B(..)" line per group
    std::string to_json() const;
};

// round-robin circle construction
PartitionSchedule build_partition(int p);

struct PartitionReport {
    bool valid = false;
    std::string message;  // first violated property, with a witness
    std::int64_t pair_count = 0;
};

PartitionReport verify_partition(const PartitionSchedule& s);

// dm/dt = 2 kappa L m + B m on a periodic box, m(0) = 1; classical RK4 with
// substeps keeping dt * spectral radius <= 0.1. Returns m at each grid time.
std::vector<LatticeField> solve_m2(const JumpKernel& kernel, double kappa, const Correlator& B,
                                   const std::vector<double>& t_grid, const BoxDomain& domain);

struct Gamma2Result {
    double value = 0.0;  // max(0, lambda_top)
    bool converged = true;
    SpectralReport report;
};

// top of Sp(2 kappa L + B) on killed boxes, extrapolated over a box doubling
Gamma2Result gamma2(const JumpKernel& kernel, double kappa, const Correlator& B, std::int64_t L);

struct GammaPBounds {
    int p = 0;
    // bounds on gamma_p / p
    double crude_upper = 0.0;          // (p-1) B0 / 2
    double crude_lower = 0.0;          // (p-1) B0 / 2 - kappa
    double crude_lower_dkappa = 0.0;   // variant with constant kappa*d
    double refined_upper = 0.0;        // floor(p/2) gamma2(kappa/p)
    // bounds on gamma_p / (p-1)
    double refined_lower = 0.0;          // gamma2(kappa/(p-1)) + B0 (p-2)/2 - 2 kappa
    double refined_lower_2dkappa = 0.0;  // variant with constant 2*kappa*d
    double gamma2_kp = 0.0;              // gamma2(kappa/p)
    double gamma2_kp1 = 0.0;             // gamma2(kappa/(p-1))
};

// The walk sampler holds each site for Exp(kappa), so the plain variants use
// the matching no-jump exponent and are the ones automated checks assert;
// the dimension-scaled kappa*d / 2*kappa*d constants are reported alongside.
GammaPBounds gamma_p_bounds(int p, double kappa, double b0, int dim,
                            const std::function<double(double)>& gamma2_at);

struct ScalingCheckResult {
    double lhs = 0.0;       // ln m2(t,0)/t with potential alpha*B, diffusivity kappa
    double rhs = 0.0;       // alpha * ln m2(alpha t,0)/(alpha t) at diffusivity kappa/alpha
    double residual = 0.0;  // |lhs - rhs|, -> 0 as t grows
};

ScalingCheckResult scaling_check(const JumpKernel& kernel, double kappa, double alpha,
                                 const Correlator& B, double t, const BoxDomain& domain);

struct P0Options {
    std::int64_t box_L = 200;     // killed box for gamma2 evaluations
    int p_max = 1024;
    // mc method
    std::int64_t n_paths = 20000;
    std::vector<double> t_grid = {0.5, 1.0, 1.5, 2.0};
    std::uint64_t seed = 1;
    int threads = 0;
};

struct P0Result {
    std::optional<int> p0;
    std::string method;
    std::string message;  // "inconclusive" details for the mc method
};

// smallest p certified intermittent: best rate-consistent lower bound > 0
// (method "bounds") or FK slope > 3 stderr (method "mc")
P0Result p0_estimate(const JumpKernel& kernel, double kappa, const Correlator& B,
                     const std::string& method, const P0Options& opts = {});

struct LyapunovRow {
    int p = 0;
    double kappa = 0.0;
    double b0 = 0.0;
    GammaPBounds bounds;
    std::optional<double> mc_slope;
    std::optional<double> mc_stderr;
};

struct LyapunovTable {
    std::vector<LyapunovRow> rows;
    std::string to_csv() const;
    std::string to_json() const;
};

}  // namespace pam
