#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pam/spectral.hpp"
#include "test_oracles.hpp"

using namespace pam;

namespace {

const JumpKernel kNN1 = JumpKernel::nearest_neighbor(1);
const JumpKernel kNN2 = JumpKernel::nearest_neighbor(2);
const JumpKernel kNN3 = JumpKernel::nearest_neighbor(3);

// root of sigma * R_lambda(0) = 1 by bisection on the quadrature Green
// function: the independent threshold route for the rank-one potential
double rank_one_eigenvalue_from_green(const JumpKernel& kernel, double dscale, double sigma) {
    auto f = [&](double lambda) {
        return sigma * green_diagonal(kernel, lambda / dscale, 4096) / dscale - 1.0;
    };
    double lo = 1e-9, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("top eigenvalue: rank-one closed form in one dimension") {
    // H = L + sigma delta_0: lambda = sqrt(1 + sigma^2) - 1
    for (double sigma : {0.3, 1.0, 2.0}) {
        const SchrodingerOp op(kNN1, 1.0, sigma, Correlator::delta0(1),
                               BoxDomain(1, 200, Boundary::killed));
        const auto rep = top_eigenvalue(op);
        const double exact = std::sqrt(1.0 + sigma * sigma) - 1.0;
        CHECK(rep.lambda_top == doctest::Approx(exact).epsilon(1e-8));
        CHECK(rep.residual <= 1e-8);
        CHECK(rep.positive_eigenvalue_found);
        CHECK(rep.stabilized);
        // killed-box monotonicity along the trace
        for (std::size_t i = 1; i < rep.box_trace.size(); ++i)
            CHECK(rep.box_trace[i].second >= rep.box_trace[i - 1].second - 1e-12);
        // independent re-derivation through the Green function
        CHECK(rank_one_eigenvalue_from_green(kNN1, 1.0, sigma) ==
              doctest::Approx(exact).epsilon(1e-6));
    }
    // sigma = 1 special value
    const SchrodingerOp op(kNN1, 1.0, 1.0, Correlator::delta0(1),
                           BoxDomain(1, 400, Boundary::killed));
    CHECK(top_eigenvalue(op).lambda_top == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-9));
}

TEST_CASE("top eigenvalue: two-particle normalization") {
    // H2 = 2 kappa L + delta_0 at kappa = 1/2: same sqrt(2) - 1
    const SchrodingerOp op(kNN1, 1.0, 1.0, Correlator::delta0(1),
                           BoxDomain(1, 200, Boundary::killed));
    const auto rep = top_eigenvalue(op);
    CHECK(rep.lambda_top == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-8));
    // and through the scaled resolvent: R^{2 kappa}_lambda(0) = 1 at lambda*
    CHECK(rank_one_eigenvalue_from_green(kNN1, 2.0 * 0.5, 1.0) ==
          doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-6));
}

TEST_CASE("nonpositive potentials bind nothing") {
    const auto negV = Correlator::potential(1, {{make_site({0}), -2.0}});
    const SchrodingerOp op(kNN1, 1.0, 1.5, negV, BoxDomain(1, 64, Boundary::killed));
    const auto rep = top_eigenvalue(op);
    CHECK_FALSE(rep.positive_eigenvalue_found);
    CHECK(rep.lambda_top <= 1e-12);
    CHECK(count_positive_eigenvalues(op).count == 0);
}

TEST_CASE("scaling covariance of the operator") {
    // lambda_top(c L + c sigma V) = c lambda_top(L + sigma V), exactly
    const auto V = Correlator::potential(1, {{make_site({0}), 1.0}, {make_site({1}), 0.5},
                                             {make_site({-1}), 0.5}});
    for (double c : {0.5, 2.0, 3.0}) {
        const SchrodingerOp base(kNN1, 1.0, 0.8, V, BoxDomain(1, 60, Boundary::killed));
        const SchrodingerOp scaled(kNN1, c, c * 0.8, V, BoxDomain(1, 60, Boundary::killed));
        const auto sb = dense_spectrum(base);
        const auto ss = dense_spectrum(scaled);
        CHECK(ss.back() == doctest::Approx(c * sb.back()).epsilon(1e-12));
    }
}

TEST_CASE("positive eigenvalue counts: dense and Sturm agree") {
    const auto V = Correlator::potential(
        1, {{make_site({0}), 2.0}, {make_site({3}), 1.5}, {make_site({-3}), 1.5}});
    const SchrodingerOp op(kNN1, 1.0, 1.2, V, BoxDomain(1, 40, Boundary::killed));
    // dense count on the same box as the tridiagonal inertia count
    const auto spec = dense_spectrum(op);
    const auto dense_count = std::count_if(spec.begin(), spec.end(), [](double x) { return x > 1e-8; });
    const auto r = count_positive_eigenvalues(op);
    CHECK(r.trace[0].second == dense_count);
    CHECK(r.stable);

    // rank-one: exactly one bound state
    const SchrodingerOp rank1(kNN1, 1.0, 1.0, Correlator::delta0(1),
                              BoxDomain(1, 100, Boundary::killed));
    const auto c1 = count_positive_eigenvalues(rank1);
    CHECK(c1.count == 1);
    CHECK(c1.stable);

    // large one-dimensional boxes take the inertia path
    const SchrodingerOp big(kNN1, 1.0, 1.0, Correlator::delta0(1),
                            BoxDomain(1, 50000, Boundary::killed));
    CHECK(count_positive_eigenvalues(big).count == 1);

    // dense-only operators refuse oversized boxes
    const SchrodingerOp wide(kNN2, 1.0, 1.0, Correlator::delta0(2),
                             BoxDomain(2, 40, Boundary::killed));
    CHECK_THROWS_WITH_AS(count_positive_eigenvalues(wide), doctest::Contains("4000"),
                         std::runtime_error);
}

TEST_CASE("sigma_cr") {
    // recurrent kernels are refused: the threshold is zero
    const auto r1 = sigma_cr(kNN1, Correlator::delta0(1), 4.0, 1e-3, 128, 0.1, 0);
    CHECK(r1.refused);
    CHECK(r1.message.find("recurrent") != std::string::npos);
    const auto r2 = sigma_cr(kNN2, Correlator::delta0(2), 4.0, 1e-3, 64, 0.1, 0);
    CHECK(r2.refused);

    // nonpositive potential is an error
    CHECK_THROWS_AS(sigma_cr(kNN3, Correlator::potential(3, {{make_site({0, 0, 0}), -1.0}}), 4.0,
                             1e-3, 32, 0.1, 0),
                    std::invalid_argument);

    // transient rank-one threshold: 1/R_0(0), the Watson value
    const auto r3 = sigma_cr(kNN3, Correlator::delta0(3), 4.0, 1e-4, 64, 0.1, 0);
    CHECK_FALSE(r3.refused);
    CHECK(r3.sigma_cr == doctest::Approx(1.0 / oracle::kWatson3d).epsilon(1e-3));
    CHECK(r3.bs_top == doctest::Approx(oracle::kWatson3d).epsilon(1e-3));

    // far-too-small sigma_max reports no transition below the cap
    const auto r4 = sigma_cr(kNN3, Correlator::delta0(3), 0.1, 1e-3, 64, 0.1, 0);
    CHECK(r4.none_below_max);
}

TEST_CASE("bargmann quantities") {
    const auto V = Correlator::delta0(3);
    const auto a = bargmann_quantities(kNN3, V, 0.15, 2.0, 48);
    const auto b = bargmann_quantities(kNN3, V, 0.3, 2.0, 48);
    const auto c = bargmann_quantities(kNN3, V, 0.6, 2.0, 48);
    CHECK(a.s_raw < b.s_raw);  // monotone in sigma
    CHECK(b.s_raw < c.s_raw);
    CHECK(bargmann_quantities(kNN3, V, 0.0, 2.0, 48).s_raw == 0.0);

    CHECK(b.s_simplified == doctest::Approx(std::pow(0.3, 1.5)).epsilon(1e-12));

    // k-space closed form of the same tail integral
    const double T = 1.0 / 0.3;
    const double ref = 0.3 * oracle::heat_tail_kspace(kNN3, T, 48);
    CHECK(b.s_raw == doctest::Approx(ref).epsilon(2e-3));

    // frozen baseline: sigma * int_{1/sigma}^inf exp(-t) I0(t/3)^3 dt from an
    // independent Bessel quadrature
    CHECK(b.s_raw == doctest::Approx(0.12748453735110).epsilon(1e-4));

    // recurrent parameters have no integrable tail
    CHECK_THROWS_AS(bargmann_quantities(kNN1, Correlator::delta0(1), 0.3, 2.0, 64),
                    std::invalid_argument);
}

TEST_CASE("sigma0 uniqueness bound") {
    // potential supported at the origin has no first-moment mass
    const auto inf = sigma0_uniqueness_bound(kNN2, Correlator::delta0(2), 64);
    CHECK(inf.infinite);

    // one-dimensional nearest-neighbor symbol fails the |k| moment condition
    CHECK_THROWS_WITH_AS(sigma0_uniqueness_bound(kNN1, Correlator::delta0(1), 64),
                         doctest::Contains("diverges"), std::runtime_error);

    // two-dimensional case: finite, and at sigma0/2 at most one positive state
    const auto V = Correlator::potential(2, {{make_site({1, 0}), 1.0}, {make_site({-1, 0}), 1.0}});
    const auto r = sigma0_uniqueness_bound(kNN2, V, 64);
    CHECK_FALSE(r.infinite);
    CHECK(r.moment_sum == doctest::Approx(2.0));
    CHECK(r.symbol_integral == doctest::Approx(2.9909).epsilon(2e-3));
    CHECK(r.sigma0 == doctest::Approx(1.0 / (4.0 * 2.9909)).epsilon(5e-3));

    const SchrodingerOp op(kNN2, 1.0, r.sigma0 / 2.0, V, BoxDomain(2, 15, Boundary::killed));
    CHECK(count_positive_eigenvalues(op).count <= 1);
}

TEST_CASE("recurrence classification") {
    // rule table across the named (d, alpha) cells
    const std::vector<std::tuple<int, double, Recurrence>> cells = {
        {1, 0.5, Recurrence::transient}, {1, 1.0, Recurrence::recurrent},
        {1, 1.5, Recurrence::recurrent}, {1, 2.0, Recurrence::recurrent},
        {2, 1.0, Recurrence::transient}, {2, 1.9, Recurrence::transient},
        {2, 2.0, Recurrence::recurrent}, {3, 2.0, Recurrence::transient},
        {4, 1.5, Recurrence::transient}};
    for (const auto& [d, alpha, expect] : cells) {
        const auto r = classify_recurrence(SymbolFamily(d, alpha), 32);
        CHECK_MESSAGE(r.label == expect, "d=", d, " alpha=", alpha);
        // the numeric return-time diagnostic agrees with the rule
        CHECK(r.diagnostic_divergent == (r.label == Recurrence::recurrent));
    }

    // concrete kernels: finite support means alpha = 2
    CHECK(classify_recurrence(kNN1, 64).label == Recurrence::recurrent);
    CHECK(classify_recurrence(kNN2, 64).label == Recurrence::recurrent);
    CHECK(classify_recurrence(kNN3, 32).label == Recurrence::transient);
    CHECK(classify_recurrence(kNN1, 64).diagnostic_divergent);
    CHECK_FALSE(classify_recurrence(kNN3, 32).diagnostic_divergent);

    // angular beta in two dimensions; positivity enforced
    const SymbolFamily anis(2, 1.5, {1.0, 0.3});
    CHECK(classify_recurrence(anis, 32).label == Recurrence::transient);
    CHECK_THROWS_AS(SymbolFamily(2, 1.5, {0.2, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(SymbolFamily(1, 2.5), std::invalid_argument);
    CHECK(std::string(to_string(Recurrence::recurrent)) == "recurrent");
}

TEST_CASE("zero-mean construction: degenerate and rank-one cases") {
    // V = 0 degenerates to the tent function: no certificate
    const auto tent = zero_mean_1d_construct(Correlator::zero(1), 0.1);
    CHECK(tent.Q < 0.0);
    CHECK_FALSE(tent.positive_found);
    CHECK(tent.Q == doctest::Approx(tent.eps_delta).epsilon(1e-12));

    // V = delta_0 (positive sum): certificate plus an actual eigenvalue
    const auto rank1 = zero_mean_1d_construct(Correlator::delta0(1), 0.05);
    CHECK(rank1.positive_found);
    CHECK(rank1.Q > 0.0);
    const SchrodingerOp op(kNN1, 2.0, 0.05, Correlator::delta0(1),
                           BoxDomain(1, 2 * rank1.m, Boundary::killed));
    CHECK(count_positive_eigenvalues(op).count >= 1);
    // Delta-normalized rank-one closed form: lambda = sqrt(4 + sigma^2) - 2
    const auto rep = top_eigenvalue(
        SchrodingerOp(kNN1, 2.0, 0.05, Correlator::delta0(1), BoxDomain(1, 512, Boundary::killed)));
    CHECK(rep.lambda_top == doctest::Approx(std::sqrt(4.0 + 0.05 * 0.05) - 2.0).epsilon(1e-6));
}

TEST_CASE("zero-mean construction: the balanced three-point potential") {
    const auto V = Correlator::potential(
        1, {{make_site({0}), 2.0}, {make_site({1}), -1.0}, {make_site({-1}), -1.0}});

    for (double sigma : {0.1, 0.05, 0.02}) {
        const auto r = zero_mean_1d_construct(V, sigma);
        CHECK(r.positive_found);
        CHECK(r.Q > 0.0);

        // exact summation-by-parts identity: Q equals the delta coefficient
        CHECK(std::abs(r.Q - r.eps_delta) < 1e-10);

        // closed form for this potential:
        //   psi1(x >= 1) = 1/(1+sigma), psi2(x >= 1) = 1 + (1+sigma)(x-1)
        //   Q = 2 sigma^2/(1+sigma) - 2 eps1
        const double m = static_cast<double>(r.m);
        const double eps1_exact = (1.0 / (1.0 + sigma)) / (1.0 + (1.0 + sigma) * (m - 1.0));
        CHECK(r.eps1 == doctest::Approx(eps1_exact).epsilon(1e-10));
        CHECK(r.eps2 == doctest::Approx(eps1_exact).epsilon(1e-10));
        CHECK(r.Q ==
              doctest::Approx(2.0 * sigma * sigma / (1.0 + sigma) - 2.0 * eps1_exact).epsilon(1e-9));

        // discrete expansion coefficients
        CHECK(r.c2_plus == doctest::Approx(1.0));
        CHECK(r.c2_minus == doctest::Approx(1.0));
        CHECK(r.b_plus == doctest::Approx(-1.0));

        // the slope-only mismatch differs from the delta coefficient by
        // sigma V(0): the quadratic form identity holds for the latter
        CHECK(r.eps_delta - r.eps_slope == doctest::Approx(sigma * 2.0).epsilon(1e-12));
    }

    // half-width honors floor(sigma^-3) with the intended integer values
    CHECK(zero_mean_1d_construct(V, 0.1).m == 1000);
    CHECK(zero_mean_1d_construct(V, 0.02).m == 125000);

    // leading term: eps/sigma^2 -> c2_plus + c2_minus
    const auto small = zero_mean_1d_construct(V, 0.02);
    CHECK(small.eps_delta / (0.02 * 0.02) ==
          doctest::Approx(small.c2_plus + small.c2_minus).epsilon(0.1));

    // an eigenvalue is really there (inertia count at L = 2m)
    const auto r01 = zero_mean_1d_construct(V, 0.1);
    const SchrodingerOp op(kNN1, 2.0, 0.1, V, BoxDomain(1, 2 * r01.m, Boundary::killed));
    CHECK(count_positive_eigenvalues(op).count >= 1);

    // guards
    CHECK_THROWS_AS(zero_mean_1d_construct(V, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(zero_mean_1d_construct(V, 0.21), std::invalid_argument);
    CHECK_THROWS_WITH_AS(zero_mean_1d_construct(V, 0.009), doctest::Contains("cap"),
                         std::invalid_argument);
    const auto negsum = Correlator::potential(1, {{make_site({0}), -1.0}});
    CHECK_THROWS_AS(zero_mean_1d_construct(negsum, 0.1), std::invalid_argument);
}

TEST_CASE("spectral report serialization") {
    const SchrodingerOp op(kNN1, 1.0, 1.0, Correlator::delta0(1),
                           BoxDomain(1, 50, Boundary::killed));
    const auto rep = top_eigenvalue(op);
    const auto j = rep.to_json();
    CHECK(j.find("\"lambda_top\"") != std::string::npos);
    CHECK(j.find("\"box_trace\"") != std::string::npos);
    CHECK(j.find("\"positive_eigenvalue_found\":true") != std::string::npos);
    const auto csv = rep.eigenvector_csv();
    CHECK(csv.substr(0, 7) == "x1,psi\n");
}
