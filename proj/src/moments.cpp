#include "pam/moments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

namespace pam {

using json = nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string PartitionSchedule::display() const {
    std::string out;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        out += "G" + std::to_string(g + 1) + " =";
        for (std::size_t e = 0; e < groups[g].size(); ++e) {
            const auto& [a, b] = groups[g][e];
            out += e == 0 ? " " : " + ";
            out += "B(x" + std::to_string(b) + " - x" + std::to_string(a) + ")";
        }
        out += '\n';
    }
    return out;
}

std::string PartitionSchedule::to_json() const {
    json j;
    j["p"] = p;
    json gs = json::array();
    for (const auto& g : groups) {
        json pairs = json::array();
        for (const auto& [a, b] : g) pairs.push_back(json::array({a, b}));
        gs.push_back(pairs);
    }
    j["groups"] = gs;
    return j.dump();
}

PartitionSchedule build_partition(int p) {
    if (p < 2) throw std::invalid_argument("p must be >= 2");
    PartitionSchedule s;
    s.p = p;
    // circle construction on an odd number of labels
    auto odd_groups = [](int q) {
        const int l = (q - 1) / 2;
        std::vector<std::vector<std::pair<int, int>>> groups;
        auto wrap = [&](int v) { return (v - 1 + 2 * q) % q + 1; };
        for (int i = 1; i <= q; ++i) {
            std::vector<std::pair<int, int>> g;
            for (int j = 1; j <= l; ++j) g.emplace_back(wrap(i + j), wrap(i - j));
            groups.push_back(std::move(g));
        }
        return groups;
    };
    if (p % 2 == 1) {
        s.groups = odd_groups(p);
    } else if (p == 2) {
        s.groups = {{{1, 2}}};
    } else {
        // isolate label p, partition the remaining odd set, append (i, p)
        s.groups = odd_groups(p - 1);
        for (std::size_t i = 0; i < s.groups.size(); ++i)
            s.groups[i].emplace_back(static_cast<int>(i + 1), p);
    }
    return s;
}

PartitionReport verify_partition(const PartitionSchedule& s) {
    PartitionReport rep;
    const int p = s.p;
    if (p < 2) {
        rep.message = "p must be >= 2";
        return rep;
    }
    const std::size_t expect_groups = p % 2 == 1 ? static_cast<std::size_t>(p)
                                                 : static_cast<std::size_t>(p - 1);
    const std::size_t expect_size = static_cast<std::size_t>(p / 2);
    if (s.groups.size() != expect_groups) {
        rep.message = "expected " + std::to_string(expect_groups) + " groups, got " +
                      std::to_string(s.groups.size());
        return rep;
    }
    std::set<std::pair<int, int>> seen;
    for (std::size_t g = 0; g < s.groups.size(); ++g) {
        const auto& group = s.groups[g];
        if (group.size() != expect_size) {
            rep.message = "group " + std::to_string(g + 1) + " has " +
                          std::to_string(group.size()) + " pairs, expected " +
                          std::to_string(expect_size);
            return rep;
        }
        std::set<int> used;
        for (const auto& [a, b] : group) {
            if (a < 1 || a > p || b < 1 || b > p || a == b) {
                rep.message = "group " + std::to_string(g + 1) + " has an invalid pair (" +
                              std::to_string(a) + "," + std::to_string(b) + ")";
                return rep;
            }
            const auto canon = std::minmax(a, b);
            if (!seen.insert({canon.first, canon.second}).second) {
                rep.message = "pair (" + std::to_string(canon.first) + "," +
                              std::to_string(canon.second) + ") appears more than once";
                return rep;
            }
            for (int v : {a, b})
                if (!used.insert(v).second) {
                    rep.message = "index " + std::to_string(v) + " repeats inside group " +
                                  std::to_string(g + 1);
                    return rep;
                }
            if (p % 2 == 1 && (a == static_cast<int>(g + 1) || b == static_cast<int>(g + 1))) {
                rep.message = "group " + std::to_string(g + 1) +
                              " must not involve its own index (pair (" + std::to_string(a) + "," +
                              std::to_string(b) + "))";
                return rep;
            }
        }
    }
    const auto expect_pairs = static_cast<std::int64_t>(p) * (p - 1) / 2;
    rep.pair_count = static_cast<std::int64_t>(seen.size());
    if (rep.pair_count != expect_pairs) {
        rep.message = "covered " + std::to_string(rep.pair_count) + " pairs, expected " +
                      std::to_string(expect_pairs);
        return rep;
    }
    rep.valid = true;
    rep.message = "ok";
    return rep;
}

std::vector<LatticeField> solve_m2(const JumpKernel& kernel, double kappa, const Correlator& B,
                                   const std::vector<double>& t_grid, const BoxDomain& domain) {
    if (domain.boundary() != Boundary::periodic)
        throw std::invalid_argument("solve_m2 runs on a periodic box");
    if (kernel.dim() != domain.dim() || B.dim() != domain.dim())
        throw std::invalid_argument("dimension mismatch");
    if (kappa < 0.0) throw std::invalid_argument("kappa must be >= 0");
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        if (t_grid[i] < 0.0 || (i > 0 && t_grid[i] <= t_grid[i - 1]))
            throw std::invalid_argument("t_grid must be nonnegative and increasing");

    const auto n = domain.n_sites();
    const auto full = kernel.entries();
    std::vector<std::vector<std::int32_t>> shift(full.size());
    for (std::size_t e = 0; e < full.size(); ++e) {
        shift[e].resize(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i)
            shift[e][static_cast<std::size_t>(i)] =
                static_cast<std::int32_t>(*domain.shifted(i, full[e].first));
    }
    std::vector<double> vdiag(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        vdiag[static_cast<std::size_t>(i)] = B.value(domain.coord_of(i));

    auto rhs = [&](const std::vector<double>& m, std::vector<double>& out) {
        const auto nn = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i < nn; ++i) out[i] = (vdiag[i] - 2.0 * kappa) * m[i];
        for (std::size_t e = 0; e < full.size(); ++e) {
            const double w = 2.0 * kappa * full[e].second;
            const auto& sh = shift[e];
            for (std::size_t i = 0; i < nn; ++i) out[i] += w * m[static_cast<std::size_t>(sh[i])];
        }
    };

    const double rho = 4.0 * kappa + B.max_abs();
    const double dt_cap = rho > 0.0 ? 0.1 / rho : 0.1;

    std::vector<LatticeField> out;
    LatticeField m(domain, 1.0);
    std::vector<double> k1(static_cast<std::size_t>(n)), k2(k1), k3(k1), k4(k1), tmp(k1);
    double now = 0.0;
    for (double target : t_grid) {
        const double span = target - now;
        const auto steps = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(span / dt_cap)));
        const double h = span / static_cast<double>(steps);
        for (std::int64_t sstep = 0; sstep < steps && span > 0.0; ++sstep) {
            const auto nn = static_cast<std::size_t>(n);
            rhs(m.values, k1);
            for (std::size_t i = 0; i < nn; ++i) tmp[i] = m.values[i] + 0.5 * h * k1[i];
            rhs(tmp, k2);
            for (std::size_t i = 0; i < nn; ++i) tmp[i] = m.values[i] + 0.5 * h * k2[i];
            rhs(tmp, k3);
            for (std::size_t i = 0; i < nn; ++i) tmp[i] = m.values[i] + h * k3[i];
            rhs(tmp, k4);
            for (std::size_t i = 0; i < nn; ++i)
                m.values[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        now = target;
        if (!m.all_finite()) throw std::runtime_error("solve_m2 produced non-finite values");
        out.push_back(m);
    }
    return out;
}

Gamma2Result gamma2(const JumpKernel& kernel, double kappa, const Correlator& B, std::int64_t L) {
    Gamma2Result out;
    if (kappa == 0.0) {
        // pure multiplication operator: top of the spectrum is max V (and the
        // essential spectrum reaches 0 for decaying V)
        double vmax = 0.0;
        for (const auto& [x, v] : B.entries()) {
            (void)x;
            vmax = std::max(vmax, v);
        }
        out.value = vmax;
        out.report.lambda_top = vmax;
        out.report.stabilized = true;
        out.report.positive_eigenvalue_found = vmax > 0.0;
        return out;
    }
    SchrodingerOp op(kernel, 2.0 * kappa, 1.0, B, BoxDomain(kernel.dim(), L, Boundary::killed));
    out.report = top_eigenvalue(op);
    out.converged = out.report.converged && out.report.stabilized;
    out.value = std::max(0.0, out.report.lambda_top);
    return out;
}

GammaPBounds gamma_p_bounds(int p, double kappa, double b0, int dim,
                            const std::function<double(double)>& gamma2_at) {
    if (p < 2) throw std::invalid_argument("p must be >= 2");
    GammaPBounds b;
    b.p = p;
    b.crude_upper = 0.5 * (p - 1) * b0;
    b.crude_lower_dkappa = b.crude_upper - kappa * dim;
    b.crude_lower = b.crude_upper - kappa;
    b.gamma2_kp = gamma2_at(kappa / p);
    b.gamma2_kp1 = gamma2_at(kappa / (p - 1));
    b.refined_upper = static_cast<double>(p / 2) * b.gamma2_kp;
    const double base = b.gamma2_kp1 + 0.5 * b0 * (p - 2);
    b.refined_lower_2dkappa = base - 2.0 * kappa * dim;
    b.refined_lower = base - 2.0 * kappa;
    return b;
}

ScalingCheckResult scaling_check(const JumpKernel& kernel, double kappa, double alpha,
                                 const Correlator& B, double t, const BoxDomain& domain) {
    if (alpha <= 0.0) throw std::invalid_argument("alpha must be > 0");
    if (t <= 0.0) throw std::invalid_argument("t must be > 0");
    std::vector<std::pair<Site, double>> scaled;
    for (const auto& [x, v] : B.entries()) scaled.emplace_back(x, alpha * v);
    const Correlator aB = Correlator::potential(B.dim(), scaled);
    const Site origin{};
    const auto lhs_fields = solve_m2(kernel, kappa, aB, {t}, domain);
    const double lhs = std::log(lhs_fields.back()[domain.index_of(origin)]) / t;
    const auto rhs_fields = solve_m2(kernel, kappa / alpha, B, {alpha * t}, domain);
    const double rhs = alpha * std::log(rhs_fields.back()[domain.index_of(origin)]) / (alpha * t);
    return {lhs, rhs, std::abs(lhs - rhs)};
}

P0Result p0_estimate(const JumpKernel& kernel, double kappa, const Correlator& B,
                     const std::string& method, const P0Options& opts) {
    P0Result out;
    out.method = method;
    const double b0 = B.at_origin();
    if (method == "bounds") {
        auto g2 = [&](double kap) { return gamma2(kernel, kap, B, opts.box_L).value; };
        for (int p = 2; p <= opts.p_max; ++p) {
            const auto b = gamma_p_bounds(p, kappa, b0, kernel.dim(), g2);
            const double lower_gamma_p =
                std::max(b.crude_lower * p, b.refined_lower * (p - 1));
            if (lower_gamma_p > 0.0) {
                out.p0 = p;
                return out;
            }
        }
        out.message = "no p below p_max certified positive";
        return out;
    }
    if (method == "mc") {
        for (int p = 2; p <= opts.p_max; ++p) {
            const auto slope = fk_lyapunov_estimate(kernel, p, kappa, B, opts.t_grid, opts.n_paths,
                                                    opts.seed, opts.threads);
            if (!slope.ok) {
                out.message = "inconclusive: " + slope.message + " at p = " + std::to_string(p);
                return out;
            }
            if (slope.slope > 3.0 * slope.slope_stderr) {
                out.p0 = p;
                return out;
            }
        }
        out.message = "inconclusive: no p below p_max with slope above 3 stderr";
        return out;
    }
    throw std::invalid_argument("p0_estimate method must be 'bounds' or 'mc'");
}

std::string LyapunovTable::to_csv() const {
    std::string out =
        "p,kappa,b0,crude_lower,crude_lower_dkappa,crude_upper,refined_lower,"
        "refined_lower_2dkappa,refined_upper,gamma2_kp,gamma2_kp1,mc_slope,mc_stderr\n";
    for (const auto& r : rows) {
        out += std::to_string(r.p);
        out += ',';
        out += fmt(r.kappa);
        out += ',';
        out += fmt(r.b0);
        out += ',';
        out += fmt(r.bounds.crude_lower);
        out += ',';
        out += fmt(r.bounds.crude_lower_dkappa);
        out += ',';
        out += fmt(r.bounds.crude_upper);
        out += ',';
        out += fmt(r.bounds.refined_lower);
        out += ',';
        out += fmt(r.bounds.refined_lower_2dkappa);
        out += ',';
        out += fmt(r.bounds.refined_upper);
        out += ',';
        out += fmt(r.bounds.gamma2_kp);
        out += ',';
        out += fmt(r.bounds.gamma2_kp1);
        out += ',';
        out += r.mc_slope ? fmt(*r.mc_slope) : std::string();
        out += ',';
        out += r.mc_stderr ? fmt(*r.mc_stderr) : std::string();
        out += '\n';
    }
    return out;
}

std::string LyapunovTable::to_json() const {
    json rows_j = json::array();
    for (const auto& r : rows) {
        json j;
        j["p"] = r.p;
        j["kappa"] = r.kappa;
        j["b0"] = r.b0;
        j["crude_lower"] = r.bounds.crude_lower;
        j["crude_lower_dkappa"] = r.bounds.crude_lower_dkappa;
        j["crude_upper"] = r.bounds.crude_upper;
        j["refined_lower"] = r.bounds.refined_lower;
        j["refined_lower_2dkappa"] = r.bounds.refined_lower_2dkappa;
        j["refined_upper"] = r.bounds.refined_upper;
        j["gamma2_kp"] = r.bounds.gamma2_kp;
        j["gamma2_kp1"] = r.bounds.gamma2_kp1;
        if (r.mc_slope) j["mc_slope"] = *r.mc_slope;
        if (r.mc_stderr) j["mc_stderr"] = *r.mc_stderr;
        rows_j.push_back(j);
    }
    return json{{"rows", rows_j}}.dump();
}

}  // namespace pam
