#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <map>

#include "pam/lattice.hpp"
#include "pam/rng.hpp"
#include "test_oracles.hpp"

using namespace pam;

namespace {

JumpKernel random_kernel(int dim, RngStream& rng) {
    std::map<Site, double> acc;
    // guaranteed unit vectors plus a few random sites, symmetrized
    for (int i = 0; i < dim; ++i) {
        Site e{};
        e[static_cast<std::size_t>(i)] = 1;
        acc[e] += 0.05 + rng.next_uniform();
    }
    for (int extra = 0; extra < 3; ++extra) {
        Site z{};
        bool zero = true;
        for (int i = 0; i < dim; ++i) {
            z[static_cast<std::size_t>(i)] =
                static_cast<std::int64_t>(rng.next_u64() % 5) - 2;
            zero = zero && z[static_cast<std::size_t>(i)] == 0;
        }
        if (zero) continue;
        acc[z] += rng.next_uniform();
    }
    // mirror and normalize
    std::map<Site, double> sym;
    double total = 0.0;
    for (const auto& [z, w] : acc) {
        Site mz{};
        for (int i = 0; i < kMaxDim; ++i)
            mz[static_cast<std::size_t>(i)] = -z[static_cast<std::size_t>(i)];
        sym[z] += w;
        sym[mz] += w;
    }
    for (const auto& [z, w] : sym) total += w;
    std::vector<std::pair<Site, double>> entries;
    for (const auto& [z, w] : sym) entries.emplace_back(z, w / total);
    return JumpKernel(dim, entries);
}

}  // namespace

TEST_CASE("jump kernel invariants") {
    const auto nn = JumpKernel::nearest_neighbor(2);
    CHECK(nn.dim() == 2);
    CHECK(nn.entries().size() == 4);

    // symmetry is canonicalized: giving one side of the support suffices
    const JumpKernel half(1, {{make_site({1}), 0.5}});
    CHECK(half.entries().size() == 2);
    CHECK(half.symbol_a(std::vector<double>{0.0}.data()) == doctest::Approx(1.0));

    CHECK_THROWS_WITH_AS(JumpKernel(1, {{make_site({1}), 0.3}, {make_site({-1}), 0.3}}),
                         doctest::Contains("normalization"), std::invalid_argument);
    CHECK_THROWS_AS(JumpKernel(1, {{make_site({0}), 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(JumpKernel(2, {{make_site({1, 0}), 0.5}, {make_site({-1, 0}), 0.5}}),
                    std::invalid_argument);  // no weight on e2
    CHECK_THROWS_AS(JumpKernel(1, {{make_site({1}), 0.6}, {make_site({-1}), 0.4}}),
                    std::invalid_argument);  // asymmetric
}

TEST_CASE("symbol values and range") {
    const auto nn1 = JumpKernel::nearest_neighbor(1);
    double k0 = 0.0, kpi = M_PI;
    CHECK(nn1.symbol_a(&k0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(nn1.symbol_a(&kpi) == doctest::Approx(-1.0).epsilon(1e-14));

    const auto nn2 = JumpKernel::nearest_neighbor(2);
    double kpp[2] = {M_PI, M_PI};
    CHECK(nn2.symbol_a(kpp) == doctest::Approx(-1.0).epsilon(1e-14));

    // a_hat in [-1,1] and L_hat(0) = 0 on random kernels and grid points
    RngStream rng(7, 0, RngStream::kGeneric);
    for (int trial = 0; trial < 20; ++trial) {
        const int dim = 1 + static_cast<int>(rng.next_u64() % 3);
        const auto kern = random_kernel(dim, rng);
        double zero[kMaxDim] = {0, 0, 0, 0};
        CHECK(kern.symbol(zero) == doctest::Approx(0.0).epsilon(1e-13));
        for (int trial_k = 0; trial_k < 50; ++trial_k) {
            double k[kMaxDim];
            for (int i = 0; i < dim; ++i) k[i] = (2.0 * rng.next_uniform() - 1.0) * M_PI;
            const double a = kern.symbol_a(k);
            CHECK(a <= 1.0 + 1e-12);
            CHECK(a >= -1.0 - 1e-12);
        }
    }
}

TEST_CASE("symbol_min") {
    CHECK(symbol_min(JumpKernel::nearest_neighbor(1), 256) == doctest::Approx(-2.0).epsilon(1e-3));
    CHECK(symbol_min(JumpKernel::nearest_neighbor(2), 128) == doctest::Approx(-2.0).epsilon(1e-3));
    RngStream rng(11, 0, RngStream::kGeneric);
    for (int trial = 0; trial < 10; ++trial) {
        const auto kern = random_kernel(1 + static_cast<int>(rng.next_u64() % 2), rng);
        CHECK(symbol_min(kern, 64) <= 0.0);
    }
}

TEST_CASE("correlator from b") {
    const auto delta = Correlator::from_b(CorrelationKernel::delta0(1));
    CHECK(delta.at_origin() == doctest::Approx(1.0));
    CHECK(delta.entries().size() == 1);

    const CorrelationKernel b(1, {{make_site({0}), 1.0}, {make_site({1}), 1.0}});
    const auto B = Correlator::from_b(b);
    CHECK(B.at_origin() == doctest::Approx(2.0));
    CHECK(B.value(make_site({1})) == doctest::Approx(1.0));
    CHECK(B.value(make_site({-1})) == doctest::Approx(1.0));
    CHECK(B.value(make_site({2})) == 0.0);
    double k0 = 0.0;
    CHECK(B.spectral_density(&k0) == doctest::Approx(4.0));

    // random kernels against the brute-force convolution oracle
    RngStream rng(13, 0, RngStream::kGeneric);
    for (int trial = 0; trial < 25; ++trial) {
        const int dim = 1 + static_cast<int>(rng.next_u64() % 3);
        std::vector<std::pair<Site, double>> entries;
        double sum_sq = 0.0;
        for (int e = 0; e < 4; ++e) {
            Site z{};
            for (int i = 0; i < dim; ++i)
                z[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(rng.next_u64() % 5) - 2;
            const double v = 2.0 * rng.next_uniform() - 1.0;
            bool dup = false;
            for (auto& [zz, vv] : entries) dup = dup || zz == z;
            if (dup) continue;
            entries.emplace_back(z, v);
        }
        const CorrelationKernel bk(dim, entries);
        for (const auto& [z, v] : bk.entries()) sum_sq += v * v;
        const auto Br = Correlator::from_b(bk);
        CHECK(Br.at_origin() == doctest::Approx(sum_sq).epsilon(1e-12));
        CHECK(Br.is_symmetric());
        CHECK(Br.max_abs() == doctest::Approx(Br.at_origin()).epsilon(1e-12));
        const auto brute = oracle::conv_bruteforce(bk);
        for (const auto& [x, v] : Br.entries())
            CHECK(v == doctest::Approx(brute.at(x)).epsilon(1e-12));
        // nonnegative spectral density on a grid
        for (int trial_k = 0; trial_k < 100; ++trial_k) {
            double k[kMaxDim];
            for (int i = 0; i < dim; ++i) k[i] = (2.0 * rng.next_uniform() - 1.0) * M_PI;
            CHECK(Br.spectral_density(k) >= -1e-10);
        }
        // B_hat(0) = sum_x B(x) >= 0
        double zero[kMaxDim] = {0, 0, 0, 0};
        CHECK(Br.spectral_density(zero) == doctest::Approx(Br.sum()).epsilon(1e-12));
        CHECK(Br.sum() >= -1e-12);
    }
}

TEST_CASE("heat kernel") {
    const auto nn = JumpKernel::nearest_neighbor(1);
    CHECK(heat_kernel(nn, 1.0, 1.0, 0.0, make_site({0}), 64) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(heat_kernel(nn, 1.0, 1.0, 0.0, make_site({3}), 64) == doctest::Approx(0.0).epsilon(1e-13));

    // independent series oracle for the rate-1 return probability
    const double series = oracle::nn1d_return(1.0, 1.0);
    CHECK(series == doctest::Approx(0.4657596075936404).epsilon(1e-12));
    CHECK(heat_kernel(nn, 1.0, 1.0, 1.0, make_site({0}), 256) ==
          doctest::Approx(series).epsilon(1e-10));

    // rate multiplier doubles the clock
    CHECK(heat_kernel(nn, 1.0, 2.0, 1.0, make_site({0}), 256) ==
          doctest::Approx(oracle::nn1d_return(1.0, 2.0)).epsilon(1e-10));

    // marginals approach 1 monotonically from below
    for (double t : {1.0, 5.0}) {
        double prev = 0.0;
        for (std::int64_t Y = 2; Y <= 40; Y += 2) {
            double s = 0.0;
            for (std::int64_t y = -Y; y <= Y; ++y) s += heat_kernel(nn, 1.0, 1.0, t, make_site({y}), 256);
            CHECK(s >= prev - 1e-13);
            CHECK(s <= 1.0 + 1e-10);
            prev = s;
        }
        CHECK(prev == doctest::Approx(1.0).epsilon(1e-8));
    }

    // p(t,0,0) t^{d/2} stays bounded (alpha = 2 decay)
    for (double t = 1.0; t <= 100.0; t *= 2.0)
        CHECK(heat_kernel(nn, 1.0, 1.0, t, make_site({0}), 512) * std::sqrt(t) < 0.5);
    const auto nn2 = JumpKernel::nearest_neighbor(2);
    for (double t = 1.0; t <= 100.0; t *= 2.0)
        CHECK(heat_kernel(nn2, 1.0, 1.0, t, make_site({0, 0}), 128) * t < 1.0);
}

TEST_CASE("green function") {
    const auto nn = JumpKernel::nearest_neighbor(1);
    // closed form 1/sqrt(lambda(lambda+2)), re-derived against a dense solve
    const double g1 = green_diagonal(nn, 1.0, 4096);
    CHECK(g1 == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-8));
    CHECK(g1 == doctest::Approx(oracle::green_1d_dense(1.0, 4000)).epsilon(1e-8));
    const double g05 = green_diagonal(nn, 0.5, 4096);
    CHECK(g05 == doctest::Approx(1.0 / std::sqrt(0.5 * 2.5)).epsilon(1e-7));
    CHECK(g05 == doctest::Approx(oracle::green_1d_dense(0.5, 4000)).epsilon(1e-7));

    // strict decrease in lambda
    CHECK(green_diagonal(nn, 0.5, 512) > green_diagonal(nn, 1.0, 512));
    CHECK(green_diagonal(nn, 1.0, 512) > green_diagonal(nn, 2.0, 512));

    CHECK_THROWS_AS(green_diagonal(nn, 0.0, 64), std::invalid_argument);

    // recurrent: divergence sentinel at lambda = 0
    const auto gz1 = green_zero(nn, make_site({0}), 128);
    CHECK(gz1.divergent);
    const auto gz2 = green_zero(JumpKernel::nearest_neighbor(2), make_site({0, 0}), 64);
    CHECK(gz2.divergent);

    // transient: Watson value, convergence demonstrated along the trace
    const auto nn3 = JumpKernel::nearest_neighbor(3);
    const auto gz3 = green_zero(nn3, make_site({0, 0, 0}), 64);
    CHECK_FALSE(gz3.divergent);
    CHECK(gz3.trace.size() == 3);
    CHECK(std::abs(gz3.trace[2].second - gz3.trace[1].second) <
          std::abs(gz3.trace[1].second - gz3.trace[0].second));
    CHECK(gz3.value == doctest::Approx(oracle::kWatson3d).epsilon(2e-4));
}

TEST_CASE("heat tail integral vs k-space oracle") {
    const auto nn3 = JumpKernel::nearest_neighbor(3);
    const SymbolGrid grid(nn3, 48);
    for (double T : {1.0, 5.0}) {
        const auto r = heat_tail_integral(grid, T);
        CHECK(r.tail_exponent == doctest::Approx(1.5).epsilon(0.05));
        CHECK(r.richardson_delta < 2e-3 * r.value);
        const double ref = oracle::heat_tail_kspace(nn3, T, 48);
        CHECK(r.value == doctest::Approx(ref).epsilon(2e-3));
    }
}

TEST_CASE("json round trips") {
    const JumpKernel k(2, {{make_site({1, 0}), 0.25},
                           {make_site({-1, 0}), 0.25},
                           {make_site({0, 1}), 0.1 + 0.2 / 3.0},
                           {make_site({0, -1}), 0.1 + 0.2 / 3.0},
                           {make_site({1, 1}), 0.25 - (0.1 + 0.2 / 3.0)},
                           {make_site({-1, -1}), 0.25 - (0.1 + 0.2 / 3.0)}});
    const auto k2 = JumpKernel::from_json(k.to_json());
    REQUIRE(k2.half_support().size() == k.half_support().size());
    for (std::size_t i = 0; i < k.half_support().size(); ++i) {
        CHECK(k2.half_support()[i].z == k.half_support()[i].z);
        CHECK(k2.half_support()[i].weight == k.half_support()[i].weight);  // bit-exact
    }

    const Correlator V = Correlator::potential(
        1, {{make_site({0}), 2.0}, {make_site({1}), -1.0 / 3.0}, {make_site({-1}), -1.0 / 3.0}});
    const auto V2 = Correlator::from_json(V.to_json());
    REQUIRE(V2.entries().size() == V.entries().size());
    for (std::size_t i = 0; i < V.entries().size(); ++i)
        CHECK(V2.entries()[i].second == V.entries()[i].second);  // bit-exact
}

TEST_CASE("box domain") {
    const BoxDomain box(2, 3, Boundary::periodic);
    CHECK(box.n_sites() == 49);
    // periodic wrap is a bijection consistent with its inverse
    for (std::int64_t i = 0; i < box.n_sites(); ++i) {
        const auto j = *box.shifted(i, make_site({1, -1}));
        const auto back = *box.shifted(j, make_site({-1, 1}));
        CHECK(back == i);
    }
    const BoxDomain killed(1, 2, Boundary::killed);
    CHECK_FALSE(killed.shifted(killed.index_of(make_site({2})), make_site({1})).has_value());
    CHECK(killed.shifted(killed.index_of(make_site({1})), make_site({1})).has_value());
    CHECK(killed.coord_of(killed.index_of(make_site({-2}))) == make_site({-2}));
}
