#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace pam {

// Philox4x64-10 counter-based generator. A stream is identified by
// (seed, stream_id, domain); draws are a pure function of the counter, so
// equal streams replay bit-for-bit and distinct streams never overlap.
struct Philox4x64 {
    using Block = std::array<std::uint64_t, 4>;

    std::uint64_t key0 = 0;
    std::uint64_t key1 = 0;

    static Block round10(Block ctr, std::uint64_t k0, std::uint64_t k1) {
        constexpr std::uint64_t W0 = 0x9E3779B97F4A7C15ull;
        constexpr std::uint64_t W1 = 0xBB67AE8584CAA73Bull;
        constexpr std::uint64_t M0 = 0xD2E7470EE14C6C93ull;
        constexpr std::uint64_t M1 = 0xCA5A826395121157ull;
        for (int r = 0; r < 10; ++r) {
            const unsigned __int128 p0 = static_cast<unsigned __int128>(M0) * ctr[0];
            const unsigned __int128 p1 = static_cast<unsigned __int128>(M1) * ctr[2];
            const std::uint64_t hi0 = static_cast<std::uint64_t>(p0 >> 64);
            const std::uint64_t lo0 = static_cast<std::uint64_t>(p0);
            const std::uint64_t hi1 = static_cast<std::uint64_t>(p1 >> 64);
            const std::uint64_t lo1 = static_cast<std::uint64_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
            k0 += W0;
            k1 += W1;
        }
        return ctr;
    }

    Block block(std::uint64_t n0, std::uint64_t n1 = 0) const {
        return round10({n0, n1, 0, 0}, key0, key1);
    }
};

// Buffered uniform/Gaussian stream on top of Philox. `domain` separates
// independent uses of the same user seed (noise field, walkers, ...).
class RngStream {
public:
    enum Domain : std::uint32_t {
        kNoise = 1,
        kWalk = 2,
        kEnsembleInit = 3,
        kGeneric = 4,
    };

    RngStream(std::uint64_t seed, std::uint64_t stream_id, Domain domain)
        : engine_{seed, (static_cast<std::uint64_t>(domain) << 56) ^ stream_id} {}

    std::uint64_t next_u64() {
        if (pos_ == 4) {
            buf_ = engine_.block(++counter_);
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    // uniform on (0,1]; never 0 so log() is safe
    double next_uniform() {
        const std::uint64_t bits = next_u64() >> 11;
        return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
    }

    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double next_exponential(double rate) { return -std::log(next_uniform()) / rate; }

private:
    Philox4x64 engine_;
    std::uint64_t counter_ = 0;
    Philox4x64::Block buf_{};
    int pos_ = 4;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace pam
