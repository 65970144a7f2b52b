#pragma once

// Test-side oracles, kept independent of the implementation paths they check.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "pam/lattice.hpp"

namespace oracle {

// modified Bessel I0 by its power series
inline double bessel_i0(double x) {
    double term = 1.0, sum = 1.0;
    const double q = x * x / 4.0;
    for (int n = 1; n < 200; ++n) {
        term *= q / (static_cast<double>(n) * n);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

// p(t,0,0) for the rate-kappa nearest-neighbor walk in one dimension
inline double nn1d_return(double kappa, double t) {
    return std::exp(-kappa * t) * bessel_i0(kappa * t);
}

// brute-force correlator: B(x) = sum_z b(x+z) b(z)
inline std::map<pam::Site, double> conv_bruteforce(const pam::CorrelationKernel& b) {
    std::map<pam::Site, double> out;
    for (const auto& [z1, v1] : b.entries())
        for (const auto& [z2, v2] : b.entries()) {
            pam::Site x{};
            for (int i = 0; i < pam::kMaxDim; ++i)
                x[static_cast<std::size_t>(i)] =
                    z1[static_cast<std::size_t>(i)] - z2[static_cast<std::size_t>(i)];
            out[x] += v1 * v2;
        }
    return out;
}

// R_lambda(0) on a large one-dimensional box by a tridiagonal solve of
// (lambda - L) g = delta_0 with L f = (f(x+1)+f(x-1))/2 - f(x)
inline double green_1d_dense(double lambda, std::int64_t L) {
    const std::int64_t n = 2 * L + 1;
    std::vector<double> diag(static_cast<std::size_t>(n), lambda + 1.0);
    std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
    rhs[static_cast<std::size_t>(L)] = 1.0;
    const double off = -0.5;
    // Thomas algorithm
    std::vector<double> c(static_cast<std::size_t>(n), 0.0);
    c[0] = off / diag[0];
    rhs[0] /= diag[0];
    for (std::int64_t i = 1; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double m = diag[k] - off * c[k - 1];
        c[k] = off / m;
        rhs[k] = (rhs[k] - off * rhs[k - 1]) / m;
    }
    for (std::int64_t i = n - 2; i >= 0; --i) {
        const auto k = static_cast<std::size_t>(i);
        rhs[k] -= c[k] * rhs[k + 1];
    }
    return rhs[static_cast<std::size_t>(L)];
}

// (2pi)^-d int e^{L_hat(k) T} / (1 - a_hat(k)) dk with dyadic-grid geometric
// extrapolation: closed k-space form of the heat-kernel tail integral
inline double heat_tail_kspace(const pam::JumpKernel& kernel, double T, int grid_n) {
    std::vector<double> vals;
    int n = grid_n;
    for (int level = 0; level < 3; ++level, n *= 2) {
        double s = 0.0;
        std::size_t cnt = 0;
        pam::for_each_torus_node(kernel.dim(), n, [&](const double* k) {
            const double sym = kernel.symbol(k);
            s += std::exp(sym * T) / (-sym);
            ++cnt;
        });
        vals.push_back(s / static_cast<double>(cnt));
    }
    const double d1 = vals[1] - vals[0];
    const double d2 = vals[2] - vals[1];
    if (std::abs(d1) < 1e-15) return vals[2];
    const double r = d2 / d1;
    if (r > 0.9) throw std::runtime_error("oracle tail integral diverges");
    return vals[2] + d2 * r / (1.0 - r);
}

// exact closed-form Watson value for the d=3 nearest-neighbor walk:
// (sqrt(6)/(32 pi^3)) Gamma(1/24) Gamma(5/24) Gamma(7/24) Gamma(11/24)
inline constexpr double kWatson3d = 1.5163860591519780;

// two-sample Kolmogorov-Smirnov distance
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        // step across whole tie groups so atoms do not inflate the distance
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        const double fa = static_cast<double>(i) / a.size();
        const double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

}  // namespace oracle
