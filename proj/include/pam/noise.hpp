#pragma once

#include <cstdint>

#include "pam/lattice.hpp"
#include "pam/rng.hpp"

namespace pam {

// Increment source for the correlated Wiener field W(t,x) = sum_z b(x-z) w(t,z)
// on a periodic box. One generator per worker; (seed, stream_id) pairs are the
// parallelism mechanism, and equal pairs replay bit-for-bit.
class NoiseGenerator {
public:
    NoiseGenerator(const CorrelationKernel& b, const BoxDomain& domain, std::uint64_t seed,
                   std::uint64_t stream_id);

    // Gaussian increment with mean 0 and Cov(dW(x), dW(y)) = dt * B(x-y),
    // periodic difference on the torus.
    LatticeField sample_increment(double dt);

    const BoxDomain& domain() const { return domain_; }
    const CorrelationKernel& kernel() const { return b_; }

private:
    CorrelationKernel b_;
    BoxDomain domain_;
    RngStream rng_;
    // precomputed wrapped index shifts: site i convolves white noise at
    // shift_[e][i] with weight b.entries()[e]
    std::vector<std::vector<std::int32_t>> shift_;
    std::vector<double> white_;
};

}  // namespace pam
