#include "pam/spectral.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pam/rng.hpp"

namespace pam {

using json = nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// killed-box stencil: y = dscale*(sum_z a(z) x(.+z) - x) + sigma*V x
class KilledTable {
public:
    KilledTable(const SchrodingerOp& op, const BoxDomain& box) : box_(box) {
        const auto n = box.n_sites();
        const auto full = op.kernel.entries();
        weights_.reserve(full.size());
        nbr_.resize(full.size());
        for (std::size_t e = 0; e < full.size(); ++e) {
            weights_.push_back(full[e].second);
            nbr_[e].assign(static_cast<std::size_t>(n), -1);
            for (std::int64_t i = 0; i < n; ++i) {
                const auto j = box.shifted(i, full[e].first);
                if (j) nbr_[e][static_cast<std::size_t>(i)] = static_cast<std::int32_t>(*j);
            }
        }
        vdiag_.resize(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i)
            vdiag_[static_cast<std::size_t>(i)] =
                op.diffusion_scale * (-1.0) + op.sigma * op.V.value(box.coord_of(i));
        dscale_ = op.diffusion_scale;
    }

    std::int64_t size() const { return box_.n_sites(); }

    void apply(const double* x, double* y) const {
        const auto n = static_cast<std::size_t>(box_.n_sites());
        for (std::size_t i = 0; i < n; ++i) y[i] = vdiag_[i] * x[i];
        for (std::size_t e = 0; e < weights_.size(); ++e) {
            const double w = dscale_ * weights_[e];
            const auto& nb = nbr_[e];
            for (std::size_t i = 0; i < n; ++i) {
                const auto j = nb[i];
                if (j >= 0) y[i] += w * x[static_cast<std::size_t>(j)];
            }
        }
    }

private:
    BoxDomain box_;
    std::vector<double> weights_;
    std::vector<std::vector<std::int32_t>> nbr_;
    std::vector<double> vdiag_;
    double dscale_;
};

struct EigResult {
    double lambda = 0.0;
    std::vector<double> vec;
    double residual = 0.0;
    bool converged = false;
    int matvecs = 0;
};

double nrm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Restarted two-pass Lanczos for the largest eigenvalue; O(n) memory, the
// basis is replayed from the stored recurrence coefficients to assemble the
// Ritz vector and the true residual is measured before accepting.
EigResult lanczos_top(const KilledTable& A, double residual_tol, int max_matvecs) {
    const auto n = static_cast<std::size_t>(A.size());
    EigResult out;
    out.vec.assign(n, 0.0);
    {
        RngStream rng(0x5eed5eedULL, 0, RngStream::kGeneric);
        for (auto& x : out.vec) x = rng.next_gaussian();
        const double s = nrm2(out.vec);
        for (auto& x : out.vec) x /= s;
    }

    std::vector<double> q_prev(n), q(n), w(n);
    const int m_max = 140;
    std::vector<double> alpha, beta;

    while (out.matvecs < max_matvecs) {
        alpha.clear();
        beta.clear();
        std::fill(q_prev.begin(), q_prev.end(), 0.0);
        q = out.vec;
        int m = 0;
        for (int j = 0; j < m_max && out.matvecs < max_matvecs; ++j) {
            A.apply(q.data(), w.data());
            ++out.matvecs;
            double a = 0.0;
            for (std::size_t i = 0; i < n; ++i) a += q[i] * w[i];
            alpha.push_back(a);
            const double bprev = beta.empty() ? 0.0 : beta.back();
            for (std::size_t i = 0; i < n; ++i) w[i] -= a * q[i] + bprev * q_prev[i];
            const double b = nrm2(w);
            ++m;
            if (b < 1e-13) break;  // invariant subspace
            beta.push_back(b);
            q_prev.swap(q);
            for (std::size_t i = 0; i < n; ++i) q[i] = w[i] / b;
        }
        if (!beta.empty() && static_cast<int>(beta.size()) == m) beta.pop_back();

        // Ritz pair of the tridiagonal T
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = alpha[static_cast<std::size_t>(i)];
            if (i + 1 < m)
                T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const int top = m - 1;
        out.lambda = es.eigenvalues()(top);
        const Eigen::VectorXd s = es.eigenvectors().col(top);

        // pass 2: rebuild the Ritz vector from the stored recurrence
        std::vector<double> ritz(n, 0.0);
        std::fill(q_prev.begin(), q_prev.end(), 0.0);
        q = out.vec;
        for (int j = 0; j < m; ++j) {
            for (std::size_t i = 0; i < n; ++i) ritz[i] += s(j) * q[i];
            if (j + 1 == m) break;
            A.apply(q.data(), w.data());
            ++out.matvecs;
            const double a = alpha[static_cast<std::size_t>(j)];
            const double bprev = j == 0 ? 0.0 : beta[static_cast<std::size_t>(j - 1)];
            for (std::size_t i = 0; i < n; ++i) w[i] -= a * q[i] + bprev * q_prev[i];
            const double b = beta[static_cast<std::size_t>(j)];
            q_prev.swap(q);
            for (std::size_t i = 0; i < n; ++i) q[i] = w[i] / b;
        }
        const double rn = nrm2(ritz);
        for (auto& x : ritz) x /= rn;
        A.apply(ritz.data(), w.data());
        ++out.matvecs;
        double num = 0.0;
        for (std::size_t i = 0; i < n; ++i) num += ritz[i] * w[i];
        out.lambda = num;  // Rayleigh quotient of the assembled vector
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = w[i] - out.lambda * ritz[i];
            res += r * r;
        }
        out.residual = std::sqrt(res);
        out.vec = std::move(ritz);
        if (out.residual <= residual_tol) {
            out.converged = true;
            return out;
        }
    }
    return out;
}

EigResult dense_top(const SchrodingerOp& op, const BoxDomain& box) {
    SchrodingerOp scoped = op;
    scoped.domain = box;
    const auto H = dense_matrix(scoped);
    const auto n = box.n_sites();
    Eigen::Map<const Eigen::MatrixXd> M(H.data(), n, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    EigResult out;
    out.lambda = es.eigenvalues()(n - 1);
    const Eigen::VectorXd v = es.eigenvectors().col(n - 1);
    out.vec.assign(v.data(), v.data() + n);
    Eigen::VectorXd r = M * v - out.lambda * v;
    out.residual = r.norm();
    out.converged = true;
    return out;
}

}  // namespace

SchrodingerOp::SchrodingerOp(JumpKernel k, double dscale, double sig, Correlator v, BoxDomain dom)
    : kernel(std::move(k)), diffusion_scale(dscale), sigma(sig), V(std::move(v)), domain(dom) {
    if (kernel.dim() != V.dim() || kernel.dim() != domain.dim())
        throw std::invalid_argument("dimension mismatch in SchrodingerOp");
    if (domain.boundary() != Boundary::killed)
        throw std::invalid_argument("spectral analysis uses killed boxes");
    if (diffusion_scale <= 0.0) throw std::invalid_argument("diffusion_scale must be > 0");
    if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
    if (domain.radius() < 4) throw std::invalid_argument("box radius must be >= 4");
}

std::string SpectralReport::to_json() const {
    json j;
    j["lambda_top"] = lambda_top;
    j["residual"] = residual;
    json trace = json::array();
    for (const auto& [L, lam] : box_trace) trace.push_back(json::array({L, lam}));
    j["box_trace"] = trace;
    j["positive_eigenvalue_found"] = positive_eigenvalue_found;
    j["stabilized"] = stabilized;
    j["converged"] = converged;
    return j.dump();
}

std::string SpectralReport::eigenvector_csv() const {
    std::string out;
    const int d = eigenvector.domain.dim();
    for (int i = 0; i < d; ++i) out += "x" + std::to_string(i + 1) + ",";
    out += "psi\n";
    for (std::int64_t i = 0; i < eigenvector.domain.n_sites(); ++i) {
        const Site x = eigenvector.domain.coord_of(i);
        for (int c = 0; c < d; ++c) {
            out += std::to_string(x[static_cast<std::size_t>(c)]);
            out += ',';
        }
        out += fmt(eigenvector[i]);
        out += '\n';
    }
    return out;
}

SpectralReport top_eigenvalue(const SchrodingerOp& op, const TopEigenvalueOptions& opts) {
    SpectralReport rep;
    std::int64_t L = op.domain.radius();
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int level = 0; level <= opts.max_doublings; ++level) {
        BoxDomain box(op.domain.dim(), L, Boundary::killed);
        if (box.n_sites() > opts.max_sites) break;
        EigResult r;
        if (box.n_sites() <= 600) {
            r = dense_top(op, box);
        } else {
            KilledTable table(op, box);
            r = lanczos_top(table, opts.residual_tol, opts.max_matvecs);
        }
        rep.lambda_top = r.lambda;
        rep.residual = r.residual;
        rep.converged = r.converged;
        rep.eigenvector = LatticeField(box);
        rep.eigenvector.values = std::move(r.vec);
        rep.box_trace.emplace_back(L, r.lambda);
        if (!std::isnan(prev) && std::abs(r.lambda - prev) < opts.stab_tol) {
            rep.stabilized = true;
            break;
        }
        prev = r.lambda;
        L *= 2;
    }
    rep.positive_eigenvalue_found =
        rep.stabilized && rep.converged && rep.lambda_top > 10.0 * std::max(rep.residual, 1e-300);
    return rep;
}

std::vector<double> dense_matrix(const SchrodingerOp& op) {
    const auto& box = op.domain;
    const auto n = box.n_sites();
    std::vector<double> H(static_cast<std::size_t>(n * n), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        H[static_cast<std::size_t>(i * n + i)] =
            -op.diffusion_scale + op.sigma * op.V.value(box.coord_of(i));
        for (const auto& [z, w] : op.kernel.entries()) {
            const auto j = box.shifted(i, z);
            if (j) H[static_cast<std::size_t>(*j * n + i)] += op.diffusion_scale * w;
        }
    }
    return H;
}

std::vector<double> dense_spectrum(const SchrodingerOp& op) {
    const auto H = dense_matrix(op);
    const auto n = op.domain.n_sites();
    Eigen::Map<const Eigen::MatrixXd> M(H.data(), n, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    return out;
}

namespace {

// eigenvalue count above theta for a symmetric tridiagonal matrix, by the
// sign pattern of the LDL^T pivots (Sylvester inertia)
std::int64_t tridiag_count_above(const std::vector<double>& diag, double off, double theta) {
    const double pivmin = 1e-300;
    std::int64_t below = 0;
    double d = diag[0] - theta;
    if (std::abs(d) < pivmin) d = pivmin;
    if (d < 0.0) ++below;
    const double off2 = off * off;
    for (std::size_t i = 1; i < diag.size(); ++i) {
        d = (diag[i] - theta) - off2 / d;
        if (std::abs(d) < pivmin) d = pivmin;
        if (d < 0.0) ++below;
    }
    return static_cast<std::int64_t>(diag.size()) - below;
}

bool is_tridiagonal(const SchrodingerOp& op) {
    return op.domain.dim() == 1 && op.kernel.support_radius() == 1;
}

std::int64_t count_at_box(const SchrodingerOp& op, std::int64_t L, double theta) {
    BoxDomain box(op.domain.dim(), L, Boundary::killed);
    if (is_tridiagonal(op)) {
        const auto n = box.n_sites();
        std::vector<double> diag(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i)
            diag[static_cast<std::size_t>(i)] =
                -op.diffusion_scale + op.sigma * op.V.value(box.coord_of(i));
        return tridiag_count_above(diag, op.diffusion_scale * 0.5, theta);
    }
    if (box.n_sites() > 4000)
        throw std::runtime_error(
            "box too large for dense eigenvalue count (> 4000 sites); a Lanczos deflation path "
            "would be needed here");
    SchrodingerOp scoped = op;
    scoped.domain = box;
    const auto spec = dense_spectrum(scoped);
    return static_cast<std::int64_t>(
        std::count_if(spec.begin(), spec.end(), [&](double x) { return x > theta; }));
}

}  // namespace

CountResult count_positive_eigenvalues(const SchrodingerOp& op) {
    CountResult out;
    const double norm_bound = 2.0 * op.diffusion_scale + op.sigma * op.V.max_abs();
    const double slack =
        norm_bound * static_cast<double>(op.domain.n_sites()) * std::numeric_limits<double>::epsilon();
    out.threshold = std::max(1e-8, 10.0 * slack);
    const std::int64_t L = op.domain.radius();
    const std::int64_t c1 = count_at_box(op, L, out.threshold);
    const std::int64_t c2 = count_at_box(op, 2 * L, out.threshold);
    out.trace = {{L, c1}, {2 * L, c2}};
    out.count = c2;
    out.stable = (c1 == c2);
    return out;
}

SigmaCrResult sigma_cr(const JumpKernel& kernel, const Correlator& V, double sigma_max, double tol,
                       int grid_n, double witness_offset, std::int64_t witness_box) {
    if (!V.positive_somewhere())
        throw std::invalid_argument("sigma_cr requires a potential that is positive somewhere");
    if (sigma_max <= 0.0 || tol <= 0.0) throw std::invalid_argument("sigma_max and tol must be > 0");

    SigmaCrResult out;
    const auto cls = classify_recurrence(kernel, grid_n);
    if (cls.label == Recurrence::recurrent) {
        out.refused = true;
        out.message =
            "recurrent kernel: an arbitrarily small positive coupling already binds a state "
            "(threshold 0); no phase transition below sigma_max";
        return out;
    }

    // Birman-Schwinger operator at zero energy on the support of V:
    // sqrt|V| R_0 sqrt|V| with the sign of V folded in symmetrically.
    const auto& support = V.entries();
    const auto s = static_cast<std::int64_t>(support.size());
    std::map<Site, double> green_cache;
    auto green_at = [&](Site d) {
        // R_0 is even in its argument: canonicalize the global sign
        Site key = d;
        for (int c = 0; c < kMaxDim; ++c) {
            if (d[static_cast<std::size_t>(c)] != 0) {
                if (d[static_cast<std::size_t>(c)] < 0)
                    for (int cc = 0; cc < kMaxDim; ++cc)
                        key[static_cast<std::size_t>(cc)] = -d[static_cast<std::size_t>(cc)];
                break;
            }
        }
        const auto it = green_cache.find(key);
        if (it != green_cache.end()) return it->second;
        const auto g = green_zero(kernel, key, grid_n);
        if (g.divergent) throw std::runtime_error("zero-energy Green function diverges");
        green_cache.emplace(key, g.value);
        return g.value;
    };
    Eigen::MatrixXd A(s, s);
    for (std::int64_t i = 0; i < s; ++i)
        for (std::int64_t j = i; j < s; ++j) {
            Site d{};
            for (int c = 0; c < kMaxDim; ++c)
                d[static_cast<std::size_t>(c)] =
                    support[static_cast<std::size_t>(i)].first[static_cast<std::size_t>(c)] -
                    support[static_cast<std::size_t>(j)].first[static_cast<std::size_t>(c)];
            const double vi = std::sqrt(std::abs(support[static_cast<std::size_t>(i)].second));
            const double vj = std::sqrt(std::abs(support[static_cast<std::size_t>(j)].second));
            A(i, j) = A(j, i) = vi * green_at(d) * vj;
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esA(A);
    Eigen::MatrixXd Ahalf = esA.operatorSqrt();
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(s, s);
    for (std::int64_t i = 0; i < s; ++i)
        S(i, i) = support[static_cast<std::size_t>(i)].second >= 0.0 ? 1.0 : -1.0;
    Eigen::MatrixXd M = Ahalf * S * Ahalf;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esM(M);
    out.bs_top = esM.eigenvalues()(s - 1);

    if (out.bs_top <= 0.0 || 1.0 / out.bs_top > sigma_max) {
        out.none_below_max = true;
        out.message = "no positive eigenvalue appears below sigma_max";
        return out;
    }

    // bisection of the bound-state predicate sigma * bs_top >= 1
    double lo = 0.0, hi = sigma_max;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (mid * out.bs_top >= 1.0 ? hi : lo) = mid;
    }
    out.sigma_cr = 0.5 * (lo + hi);

    // killed-box witnesses on both sides of the transition
    if (witness_box > 0) {
        auto witness = [&](double sigma) {
            SigmaCrWitness w;
            w.sigma = sigma;
            SchrodingerOp op(kernel, 1.0, sigma, V,
                             BoxDomain(kernel.dim(), witness_box, Boundary::killed));
            TopEigenvalueOptions opts;
            opts.max_doublings = 2;
            opts.max_sites = 1200000;
            opts.max_matvecs = 6000;
            const auto rep = top_eigenvalue(op, opts);
            w.found = rep.positive_eigenvalue_found;
            w.lambda_top = rep.lambda_top;
            w.residual = rep.residual;
            return w;
        };
        out.below = witness(out.sigma_cr * (1.0 - witness_offset));
        out.above = witness(out.sigma_cr * (1.0 + witness_offset));
    }
    return out;
}

BargmannResult bargmann_quantities(const JumpKernel& kernel, const Correlator& V, double sigma,
                                   double alpha, int grid_n) {
    if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
    if (alpha <= 0.0 || alpha > 2.0) throw std::invalid_argument("alpha must be in (0,2]");
    const int d = kernel.dim();
    if (!(d > alpha))
        throw std::invalid_argument("Bargmann quantities require the transient regime d > alpha");

    BargmannResult out;
    const double dal = static_cast<double>(d) / alpha;
    for (const auto& [x, v] : V.entries()) {
        (void)x;
        out.s_simplified += std::pow(std::abs(v), dal);
    }
    out.s_simplified *= std::pow(sigma, dal);
    if (sigma == 0.0) return out;

    const SymbolGrid grid(kernel, grid_n);
    for (const auto& [x, v] : V.entries()) {
        (void)x;
        if (v == 0.0) continue;
        const double strength = sigma * std::abs(v);
        const auto tail = heat_tail_integral(grid, 1.0 / strength);
        out.s_raw += strength * tail.value;
        out.tail_exponent = tail.tail_exponent;
        out.richardson_delta = std::max(out.richardson_delta, tail.richardson_delta);
    }
    return out;
}

Sigma0Result sigma0_uniqueness_bound(const JumpKernel& kernel, const Correlator& V, int grid_n) {
    Sigma0Result out;
    // dyadic refinement of (2pi)^-d int |k| / |L_hat(k)| dk
    std::vector<double> vals;
    int n = grid_n;
    for (int level = 0; level < 4; ++level, n *= 2) {
        double s = 0.0;
        std::size_t cnt = 0;
        for_each_torus_node(kernel.dim(), n, [&](const double* k) {
            double k2 = 0.0;
            for (int i = 0; i < kernel.dim(); ++i) k2 += k[i] * k[i];
            s += std::sqrt(k2) / (-kernel.symbol(k));
            ++cnt;
        });
        vals.push_back(s / static_cast<double>(cnt));
        out.trace.emplace_back(n, vals.back());
    }
    const double d1 = vals[2] - vals[1];
    const double d2 = vals[3] - vals[2];
    const double r = std::abs(d1) < 1e-14 ? 0.0 : d2 / d1;
    if (r > 0.97 || !std::isfinite(vals[3]))
        throw std::runtime_error(
            "the torus integral of |k|/|symbol| diverges; the uniqueness bound needs this first "
            "symbol moment finite");
    out.symbol_integral = vals[3] + (r > 0.0 ? d2 * r / (1.0 - r) : 0.0);

    for (const auto& [x, v] : V.entries()) {
        double k2 = 0.0;
        for (int i = 0; i < kernel.dim(); ++i) {
            const auto c = static_cast<double>(x[static_cast<std::size_t>(i)]);
            k2 += c * c;
        }
        out.moment_sum += std::sqrt(k2) * std::abs(v);
    }
    if (out.moment_sum == 0.0) {
        out.infinite = true;
        return out;
    }
    out.sigma0 = 1.0 / (2.0 * out.symbol_integral * out.moment_sum);
    return out;
}

SymbolFamily::SymbolFamily(int d, double a, std::vector<double> b)
    : dim(d), alpha(a), beta(std::move(b)) {
    if (d < 1 || d > kMaxDim) throw std::invalid_argument("dim must be in [1,4]");
    if (!(alpha > 0.0 && alpha <= 2.0)) throw std::invalid_argument("alpha must be in (0,2]");
    if (beta.empty()) throw std::invalid_argument("beta must have a constant term");
    if (beta.size() > 1 && dim != 2)
        throw std::invalid_argument("angular beta harmonics are supported in d = 2 only");
    double worst = beta[0];
    for (std::size_t m = 1; m < beta.size(); ++m) worst -= std::abs(beta[m]);
    if (worst <= 0.0) throw std::invalid_argument("beta must be positive on the sphere");
}

double SymbolFamily::eval(const double* k_unit) const {
    double b = beta[0];
    if (beta.size() > 1) {
        const double theta = std::atan2(k_unit[1], k_unit[0]);
        for (std::size_t m = 1; m < beta.size(); ++m)
            b += beta[m] * std::cos(2.0 * static_cast<double>(m) * theta);
    }
    return b;
}

namespace {

ClassifyResult classify_core(int dim, double alpha,
                             const std::function<double(const double*)>& inv_symbol, int grid_n) {
    ClassifyResult out;
    out.label = (dim <= 2 && alpha >= static_cast<double>(dim)) ? Recurrence::recurrent
                                                                : Recurrence::transient;
    std::vector<double> vals;
    int n = grid_n;
    for (int level = 0; level < 3; ++level, n *= 2) {
        double s = 0.0;
        std::size_t cnt = 0;
        for_each_torus_node(dim, n, [&](const double* k) {
            s += inv_symbol(k);
            ++cnt;
        });
        vals.push_back(s / static_cast<double>(cnt));
        out.trace.emplace_back(n, vals.back());
    }
    const double d1 = vals[1] - vals[0];
    const double d2 = vals[2] - vals[1];
    // increments of a convergent dyadic refinement shrink geometrically;
    // at (log-)divergence the ratio approaches or exceeds one
    out.diagnostic_divergent = std::abs(d1) > 1e-14 && d2 / d1 > 0.97;
    return out;
}

}  // namespace

ClassifyResult classify_recurrence(const SymbolFamily& family, int grid_n) {
    return classify_core(
        family.dim, family.alpha,
        [&](const double* k) {
            double k2 = 0.0;
            for (int i = 0; i < family.dim; ++i) k2 += k[i] * k[i];
            const double kn = std::sqrt(k2);
            std::array<double, kMaxDim> u{};
            for (int i = 0; i < family.dim; ++i) u[static_cast<std::size_t>(i)] = k[i] / kn;
            return 1.0 / (family.eval(u.data()) * std::pow(kn, family.alpha));
        },
        grid_n);
}

ClassifyResult classify_recurrence(const JumpKernel& kernel, int grid_n) {
    // finite support means finite second moments: alpha = 2
    return classify_core(
        kernel.dim(), 2.0, [&](const double* k) { return 1.0 / (-kernel.symbol(k)); }, grid_n);
}

const char* to_string(Recurrence r) {
    return r == Recurrence::recurrent ? "recurrent" : "transient";
}

namespace {

struct HalfLine {
    std::vector<double> psi1;  // bounded solution, psi1(0) = 1
    std::vector<double> psi2;  // psi2(0) = 0, psi2(1) - psi2(0) = 1
    double alpha_d = 0.0;      // psi1(1) - psi1(0)
};

// Solves psi(x+1) + psi(x-1) - 2 psi(x) + sigma v(x) psi(x) = 0 for x >= 1 on
// x in [0, m]; v is the potential seen along this half-line.
HalfLine half_line_solve(const std::function<double(std::int64_t)>& v, double sigma,
                         std::int64_t m, std::int64_t support_max) {
    std::vector<double> a(static_cast<std::size_t>(m + 1)), b(static_cast<std::size_t>(m + 1));
    a[0] = 1.0;
    a[1] = 0.0;
    b[0] = 0.0;
    b[1] = 1.0;
    for (std::int64_t x = 1; x < m; ++x) {
        const double c = 2.0 - sigma * v(x);
        const auto xi = static_cast<std::size_t>(x);
        a[xi + 1] = c * a[xi] - a[xi - 1];
        b[xi + 1] = c * b[xi] - b[xi - 1];
        const double mag = std::max(std::abs(a[xi + 1]), std::abs(b[xi + 1]));
        if (mag > 1e280) {
            // joint rescale keeps every later combination well defined
            const double scale = 1e-280;
            for (std::int64_t y = 0; y <= x + 1; ++y) {
                a[static_cast<std::size_t>(y)] *= scale;
                b[static_cast<std::size_t>(y)] *= scale;
            }
        }
    }
    // bounded combination: zero slope just beyond the potential support
    const auto t0 = static_cast<std::size_t>(support_max + 1);
    const double sa = a[t0 + 1] - a[t0];
    const double sb = b[t0 + 1] - b[t0];
    if (std::abs(sb) < 1e-300) throw std::runtime_error("degenerate half-line solution");
    const double s = -sa / sb;
    HalfLine out;
    out.psi1.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.psi1[i] = a[i] + s * b[i];
    const double norm = out.psi1[0];
    if (std::abs(norm) < 1e-300) throw std::runtime_error("bounded solution vanishes at the origin");
    for (auto& x : out.psi1) x /= norm;
    out.psi2 = std::move(b);
    out.alpha_d = out.psi1[1] - out.psi1[0];
    return out;
}

}  // namespace

ZeroMeanReport zero_mean_1d_construct(const Correlator& V, double sigma, std::int64_t site_cap) {
    if (V.dim() != 1) throw std::invalid_argument("zero-mean construction is one-dimensional");
    if (!(sigma > 0.0 && sigma <= 0.2)) throw std::invalid_argument("sigma must be in (0, 0.2]");
    if (V.sum() < -1e-12) throw std::invalid_argument("V must have nonnegative sum");
    // an identically zero V is allowed and degenerates to the tent function
    // with Q = -sum (d phi)^2 < 0: no certificate, as expected

    const double m_real = std::pow(sigma, -3.0);
    if (m_real > static_cast<double>(site_cap))
        throw std::invalid_argument(
            "sigma too small: half-width floor(sigma^-3) exceeds the site cap; increase sigma");
    const auto m = static_cast<std::int64_t>(std::floor(m_real + 1e-9));
    const std::int64_t support = V.support_radius();
    if (m < support + 4)
        throw std::invalid_argument("potential support too wide for floor(sigma^-3) sites");

    auto v_at = [&](std::int64_t x) { return V.value(make_site({x})); };
    const HalfLine plus = half_line_solve([&](std::int64_t x) { return v_at(x); }, sigma, m, support);
    const HalfLine minus =
        half_line_solve([&](std::int64_t x) { return v_at(-x); }, sigma, m, support);

    ZeroMeanReport rep;
    rep.sigma = sigma;
    rep.m = m;
    rep.eps1 = plus.psi1[static_cast<std::size_t>(m)] / plus.psi2[static_cast<std::size_t>(m)];
    rep.eps2 = minus.psi1[static_cast<std::size_t>(m)] / minus.psi2[static_cast<std::size_t>(m)];

    // phi(x) on [-m, m]; phi(+-m) vanish by the choice of eps1/eps2
    rep.phi.assign(static_cast<std::size_t>(2 * m + 1), 0.0);
    for (std::int64_t x = 0; x <= m; ++x) {
        const auto xi = static_cast<std::size_t>(x);
        rep.phi[static_cast<std::size_t>(m + x)] = plus.psi1[xi] - rep.eps1 * plus.psi2[xi];
        rep.phi[static_cast<std::size_t>(m - x)] = minus.psi1[xi] - rep.eps2 * minus.psi2[xi];
    }
    rep.phi.front() = 0.0;
    rep.phi.back() = 0.0;

    // Q = sum [-(phi(x+1)-phi(x))^2 + sigma V phi^2], compensated
    double q = 0.0, comp = 0.0;
    auto add = [&](double term) {
        const double y = term - comp;
        const double t = q + y;
        comp = (t - q) - y;
        q = t;
    };
    for (std::int64_t x = -m; x < m; ++x) {
        const double d =
            rep.phi[static_cast<std::size_t>(m + x + 1)] - rep.phi[static_cast<std::size_t>(m + x)];
        add(-d * d);
    }
    for (const auto& [site, val] : V.entries()) {
        const std::int64_t x = site[0];
        const double p = rep.phi[static_cast<std::size_t>(m + x)];
        add(sigma * val * p * p);
    }
    rep.Q = q;

    const double phi1 = rep.phi[static_cast<std::size_t>(m + 1)];
    const double phim1 = rep.phi[static_cast<std::size_t>(m - 1)];
    rep.eps_slope = (phi1 - 1.0) - (1.0 - phim1);
    rep.eps_delta = phi1 + phim1 - 2.0 + sigma * v_at(0);
    rep.positive_found = rep.Q > 0.0;

    for (const auto& [site, val] : V.entries()) {
        const std::int64_t x = site[0];
        if (x >= 1) rep.b_plus += val;
        if (x <= -1) rep.b_minus += val;
    }
    for (std::int64_t eta = 0; eta <= support; ++eta) {
        double tp = 0.0, tm = 0.0;
        for (std::int64_t xi = eta + 1; xi <= support; ++xi) {
            tp += v_at(xi);
            tm += v_at(-xi);
        }
        rep.c2_plus += tp * tp;
        rep.c2_minus += tm * tm;
    }
    rep.predicted = sigma * V.sum() + sigma * sigma * (rep.c2_plus + rep.c2_minus);
    return rep;
}

}  // namespace pam
