#include "pam/noise.hpp"

#include <cmath>

namespace pam {

NoiseGenerator::NoiseGenerator(const CorrelationKernel& b, const BoxDomain& domain,
                               std::uint64_t seed, std::uint64_t stream_id)
    : b_(b), domain_(domain), rng_(seed, stream_id, RngStream::kNoise) {
    if (b.dim() != domain.dim()) throw std::invalid_argument("kernel/domain dimension mismatch");
    if (domain.boundary() != Boundary::periodic)
        throw std::invalid_argument("noise generation requires a periodic box");
    const auto n = domain_.n_sites();
    shift_.resize(b_.entries().size());
    for (std::size_t e = 0; e < b_.entries().size(); ++e) {
        Site z = b_.entries()[e].first;
        // W(x) = sum_z b(z) w(x - z)
        Site mz{};
        for (int i = 0; i < kMaxDim; ++i) mz[static_cast<std::size_t>(i)] = -z[static_cast<std::size_t>(i)];
        shift_[e].resize(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i)
            shift_[e][static_cast<std::size_t>(i)] = static_cast<std::int32_t>(*domain_.shifted(i, mz));
    }
    white_.resize(static_cast<std::size_t>(n));
}

LatticeField NoiseGenerator::sample_increment(double dt) {
    if (dt <= 0.0) throw std::invalid_argument("dt must be > 0");
    const auto n = domain_.n_sites();
    const double sd = std::sqrt(dt);
    for (std::int64_t i = 0; i < n; ++i) white_[static_cast<std::size_t>(i)] = sd * rng_.next_gaussian();
    LatticeField out(domain_);
    for (std::size_t e = 0; e < shift_.size(); ++e) {
        const double w = b_.entries()[e].second;
        const auto& sh = shift_[e];
        for (std::int64_t i = 0; i < n; ++i)
            out[i] += w * white_[static_cast<std::size_t>(sh[static_cast<std::size_t>(i)])];
    }
    return out;
}

}  // namespace pam
