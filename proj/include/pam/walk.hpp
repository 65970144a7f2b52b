#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pam/lattice.hpp"
#include "pam/rng.hpp"

namespace pam {

// Continuous-time random walk path on [0,t]: piecewise constant, starting at
// the origin, holding times Exp(kappa), displacements with law a(.).
struct WalkPath {
    std::vector<double> jump_times;  // strictly increasing, in (0,t]
    std::vector<Site> positions;     // positions.size() == jump_times.size() + 1
};

WalkPath sample_path(const JumpKernel& kernel, double kappa, double t, RngStream& rng);

struct FkEstimate {
    double log_estimate = 0.0;  // log of the sample mean of exp(int V ds)
    double log_stderr = 0.0;    // stderr of the log (relative error of the mean)
    double estimate = 0.0;      // exp(log_estimate); may overflow to inf
    double stderr_ = 0.0;
    double ess_fraction = 1.0;  // effective sample size / n_paths
    bool dominated = false;     // ess below 0.1%: estimate untrustworthy
    std::int64_t n_paths = 0;
};

// Monte Carlo estimate of m_p(t,0,...,0) = E exp(int_0^t V_p(x_1..x_p) ds),
// V_p = sum_{i<j} B(x_i - x_j), with the time integral computed exactly over
// the jump skeleton. Log-domain throughout.
FkEstimate fk_moment_estimate(const JumpKernel& kernel, int p, double kappa, const Correlator& B,
                              double t, std::int64_t n_paths, std::uint64_t seed, int threads = 0);

struct FkSlope {
    bool ok = false;
    std::string message;
    double slope = 0.0;
    double slope_stderr = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    // per grid point diagnostics
    std::vector<double> t_grid;
    std::vector<double> log_estimate;
    std::vector<double> log_stderr;
    std::vector<double> ess_fraction;
};

// Least-squares slope of log m_p(t) over the largest contiguous window with
// relative error < 0.5; slope error by jackknife over path batches.
FkSlope fk_lyapunov_estimate(const JumpKernel& kernel, int p, double kappa, const Correlator& B,
                             const std::vector<double>& t_grid, std::int64_t n_paths,
                             std::uint64_t seed, int threads = 0);

// CSV rows: p,kappa,t,estimate_log,stderr_log,n_paths
std::string fk_csv_header();
std::string fk_csv_row(int p, double kappa, double t, const FkEstimate& est);

}  // namespace pam
