#include "pam/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

namespace pam {

using json = nlohmann::json;

namespace {

void check_dim(int dim) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("dim must be in [1,4]");
}

bool lex_positive(const Site& z, int dim) {
    for (int i = 0; i < dim; ++i) {
        if (z[static_cast<std::size_t>(i)] > 0) return true;
        if (z[static_cast<std::size_t>(i)] < 0) return false;
    }
    return false;  // zero
}

Site negate(const Site& z) {
    Site m{};
    for (int i = 0; i < kMaxDim; ++i) m[static_cast<std::size_t>(i)] = -z[static_cast<std::size_t>(i)];
    return m;
}

bool is_zero(const Site& z) {
    for (auto v : z)
        if (v != 0) return false;
    return true;
}

std::int64_t max_norm(const Site& z) {
    std::int64_t r = 0;
    for (auto v : z) r = std::max(r, static_cast<std::int64_t>(std::llabs(v)));
    return r;
}

double dot_k(const double* k, const Site& z, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += k[i] * static_cast<double>(z[static_cast<std::size_t>(i)]);
    return s;
}

json site_to_json(const Site& z, int dim) {
    json a = json::array();
    for (int i = 0; i < dim; ++i) a.push_back(z[static_cast<std::size_t>(i)]);
    return a;
}

Site site_from_json(const json& a, int dim) {
    if (!a.is_array() || static_cast<int>(a.size()) != dim)
        throw std::invalid_argument("entry site must be an array of length dim");
    Site z{};
    for (int i = 0; i < dim; ++i) z[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)].get<std::int64_t>();
    return z;
}

json entries_to_json(int dim, const std::vector<std::pair<Site, double>>& entries) {
    json a = json::array();
    for (const auto& [z, v] : entries) a.push_back(json::array({site_to_json(z, dim), v}));
    return a;
}

std::vector<std::pair<Site, double>> entries_from_json(const json& j, int dim) {
    std::vector<std::pair<Site, double>> out;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2) throw std::invalid_argument("entry must be [[z...], value]");
        out.emplace_back(site_from_json(e[0], dim), e[1].get<double>());
    }
    return out;
}

}  // namespace

// --- JumpKernel --------------------------------------------------------------

JumpKernel::JumpKernel(int dim, const std::vector<std::pair<Site, double>>& entries) : dim_(dim) {
    check_dim(dim);
    // canonicalize over positive representatives, checking symmetry where both
    // halves are given
    std::vector<std::pair<Site, double>> pos, neg;
    for (const auto& [z, w] : entries) {
        if (is_zero(z)) {
            if (w != 0.0) throw std::invalid_argument("a(0) must be absent or zero");
            continue;
        }
        if (w < 0.0) throw std::invalid_argument("jump weights must be nonnegative");
        if (lex_positive(z, dim))
            pos.emplace_back(z, w);
        else
            neg.emplace_back(negate(z), w);
    }
    auto by_site = [](const auto& a, const auto& b) { return a.first < b.first; };
    std::sort(pos.begin(), pos.end(), by_site);
    std::sort(neg.begin(), neg.end(), by_site);
    for (auto* half : {&pos, &neg})
        for (std::size_t i = 1; i < half->size(); ++i)
            if ((*half)[i].first == (*half)[i - 1].first)
                throw std::invalid_argument("duplicate site in jump kernel entries");
    for (const auto& [z, w] : neg) {
        auto it = std::lower_bound(pos.begin(), pos.end(), std::make_pair(z, 0.0), by_site);
        if (it == pos.end() || it->first != z)
            pos.insert(it, {z, w});
        else if (std::abs(it->second - w) > 1e-15)
            throw std::invalid_argument("jump kernel must be symmetric: a(z) = a(-z)");
    }
    double total = 0.0;
    for (const auto& [z, w] : pos) {
        if (w == 0.0) continue;
        half_.push_back({z, w});
        total += 2.0 * w;
        radius_ = std::max(radius_, max_norm(z));
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("jump kernel normalization: sum a(z) must be 1 (got " +
                                    std::to_string(total) + ")");
    for (int i = 0; i < dim; ++i) {
        Site e{};
        e[static_cast<std::size_t>(i)] = 1;
        bool found = false;
        for (const auto& en : half_) found = found || (en.z == e && en.weight > 0.0);
        if (!found) throw std::invalid_argument("jump kernel must be positive on all unit vectors");
    }
}

JumpKernel JumpKernel::nearest_neighbor(int dim) {
    check_dim(dim);
    std::vector<std::pair<Site, double>> e;
    for (int i = 0; i < dim; ++i) {
        Site z{};
        z[static_cast<std::size_t>(i)] = 1;
        e.emplace_back(z, 1.0 / (2.0 * dim));
        e.emplace_back(negate(z), 1.0 / (2.0 * dim));
    }
    return JumpKernel(dim, e);
}

std::vector<std::pair<Site, double>> JumpKernel::entries() const {
    std::vector<std::pair<Site, double>> out;
    for (const auto& e : half_) {
        out.emplace_back(e.z, e.weight);
        out.emplace_back(negate(e.z), e.weight);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

double JumpKernel::symbol_a(const double* k) const {
    double s = 0.0;
    for (const auto& e : half_) s += 2.0 * e.weight * std::cos(dot_k(k, e.z, dim_));
    return s;
}

std::string JumpKernel::to_json() const {
    json j;
    j["dim"] = dim_;
    j["entries"] = entries_to_json(dim_, entries());
    return j.dump();
}

JumpKernel JumpKernel::from_json(const std::string& text) {
    json j = json::parse(text);
    const int dim = j.at("dim").get<int>();
    check_dim(dim);
    return JumpKernel(dim, entries_from_json(j.at("entries"), dim));
}

// --- CorrelationKernel -------------------------------------------------------

CorrelationKernel::CorrelationKernel(int dim, const std::vector<std::pair<Site, double>>& entries)
    : dim_(dim) {
    check_dim(dim);
    for (const auto& [z, v] : entries) {
        if (v == 0.0) continue;
        entries_.emplace_back(z, v);
        radius_ = std::max(radius_, max_norm(z));
    }
    std::sort(entries_.begin(), entries_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < entries_.size(); ++i)
        if (entries_[i].first == entries_[i - 1].first)
            throw std::invalid_argument("duplicate site in kernel entries");
    if (entries_.empty()) throw std::invalid_argument("noise kernel b must not be identically zero");
}

double CorrelationKernel::value(const Site& z) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), std::make_pair(z, 0.0),
                               [](const auto& a, const auto& b) { return a.first < b.first; });
    if (it != entries_.end() && it->first == z) return it->second;
    return 0.0;
}

std::string CorrelationKernel::to_json() const {
    json j;
    j["dim"] = dim_;
    j["entries"] = entries_to_json(dim_, entries_);
    return j.dump();
}

CorrelationKernel CorrelationKernel::from_json(const std::string& text) {
    json j = json::parse(text);
    const int dim = j.at("dim").get<int>();
    check_dim(dim);
    return CorrelationKernel(dim, entries_from_json(j.at("entries"), dim));
}

// --- Correlator ---------------------------------------------------------------

Correlator::Correlator(int dim, std::vector<std::pair<Site, double>> entries)
    : dim_(dim), entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < entries_.size(); ++i)
        if (entries_[i].first == entries_[i - 1].first)
            throw std::invalid_argument("duplicate site in correlator entries");
    for (const auto& [z, v] : entries_) {
        (void)v;
        radius_ = std::max(radius_, max_norm(z));
    }
}

Correlator Correlator::from_b(const CorrelationKernel& b) {
    // B(x) = sum_z b(x+z) b(z)
    std::vector<std::pair<Site, double>> acc;
    for (const auto& [z1, v1] : b.entries()) {
        for (const auto& [z2, v2] : b.entries()) {
            Site x{};
            for (int i = 0; i < kMaxDim; ++i)
                x[static_cast<std::size_t>(i)] =
                    z1[static_cast<std::size_t>(i)] - z2[static_cast<std::size_t>(i)];
            acc.emplace_back(x, v1 * v2);
        }
    }
    std::sort(acc.begin(), acc.end(), [](const auto& a, const auto& b2) { return a.first < b2.first; });
    std::vector<std::pair<Site, double>> merged;
    for (const auto& [x, v] : acc) {
        if (!merged.empty() && merged.back().first == x)
            merged.back().second += v;
        else
            merged.emplace_back(x, v);
    }
    std::erase_if(merged, [](const auto& e) { return e.second == 0.0; });
    return Correlator(b.dim(), std::move(merged));
}

Correlator Correlator::potential(int dim, const std::vector<std::pair<Site, double>>& entries) {
    check_dim(dim);
    std::vector<std::pair<Site, double>> kept;
    for (const auto& e : entries)
        if (e.second != 0.0) kept.push_back(e);
    return Correlator(dim, std::move(kept));
}

double Correlator::value(const Site& x) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), std::make_pair(x, 0.0),
                               [](const auto& a, const auto& b) { return a.first < b.first; });
    if (it != entries_.end() && it->first == x) return it->second;
    return 0.0;
}

double Correlator::max_abs() const {
    double m = 0.0;
    for (const auto& [x, v] : entries_) {
        (void)x;
        m = std::max(m, std::abs(v));
    }
    return m;
}

double Correlator::sum() const {
    double s = 0.0;
    for (const auto& [x, v] : entries_) {
        (void)x;
        s += v;
    }
    return s;
}

bool Correlator::is_symmetric() const {
    for (const auto& [x, v] : entries_)
        if (std::abs(value(negate(x)) - v) > 1e-12 * std::max(1.0, std::abs(v))) return false;
    return true;
}

bool Correlator::positive_somewhere() const {
    for (const auto& [x, v] : entries_) {
        (void)x;
        if (v > 0.0) return true;
    }
    return false;
}

double Correlator::spectral_density(const double* k) const {
    double re = 0.0, im = 0.0;
    for (const auto& [x, v] : entries_) {
        const double a = dot_k(k, x, dim_);
        re += v * std::cos(a);
        im += v * std::sin(a);
    }
    // symmetric correlators have im = 0; report the real part
    (void)im;
    return re;
}

std::string Correlator::to_json() const {
    json j;
    j["dim"] = dim_;
    j["entries"] = entries_to_json(dim_, entries_);
    return j.dump();
}

Correlator Correlator::from_json(const std::string& text) {
    json j = json::parse(text);
    const int dim = j.at("dim").get<int>();
    check_dim(dim);
    return potential(dim, entries_from_json(j.at("entries"), dim));
}

// --- BoxDomain -----------------------------------------------------------------

BoxDomain::BoxDomain(int dim, std::int64_t radius, Boundary bc)
    : dim_(dim), radius_(radius), bc_(bc) {
    check_dim(dim);
    if (radius < 1) throw std::invalid_argument("box radius must be >= 1");
    n_sites_ = 1;
    for (int i = 0; i < dim; ++i) {
        stride_[static_cast<std::size_t>(i)] = n_sites_;
        n_sites_ *= side();
        if (n_sites_ > (std::int64_t{1} << 31))
            throw std::invalid_argument("box too large: more than 2^31 sites");
    }
}

std::int64_t BoxDomain::index_of(const Site& x) const {
    std::int64_t idx = 0;
    for (int i = 0; i < dim_; ++i) {
        const std::int64_t c = x[static_cast<std::size_t>(i)];
        if (c < -radius_ || c > radius_) throw std::out_of_range("site outside box");
        idx += (c + radius_) * stride_[static_cast<std::size_t>(i)];
    }
    return idx;
}

Site BoxDomain::coord_of(std::int64_t index) const {
    Site x{};
    for (int i = 0; i < dim_; ++i) {
        x[static_cast<std::size_t>(i)] = index % side() - radius_;
        index /= side();
    }
    return x;
}

std::optional<std::int64_t> BoxDomain::shifted(std::int64_t index, const Site& z) const {
    Site x = coord_of(index);
    for (int i = 0; i < dim_; ++i) {
        std::int64_t c = x[static_cast<std::size_t>(i)] + z[static_cast<std::size_t>(i)];
        if (c < -radius_ || c > radius_) {
            if (bc_ == Boundary::killed) return std::nullopt;
            const std::int64_t n = side();
            c = ((c + radius_) % n + n) % n - radius_;
        }
        x[static_cast<std::size_t>(i)] = c;
    }
    return index_of(x);
}

bool LatticeField::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

// --- torus quadrature -----------------------------------------------------------

void for_each_torus_node(int dim, int grid_n, const std::function<void(const double*)>& fn) {
    if (grid_n < 8) throw std::invalid_argument("grid_n must be >= 8");
    const double h = 2.0 * M_PI / grid_n;
    std::array<int, kMaxDim> idx{};
    std::array<double, kMaxDim> k{};
    for (int i = 0; i < dim; ++i) k[static_cast<std::size_t>(i)] = -M_PI + 0.5 * h;
    while (true) {
        fn(k.data());
        int i = 0;
        for (; i < dim; ++i) {
            if (++idx[static_cast<std::size_t>(i)] < grid_n) {
                k[static_cast<std::size_t>(i)] = -M_PI + (idx[static_cast<std::size_t>(i)] + 0.5) * h;
                break;
            }
            idx[static_cast<std::size_t>(i)] = 0;
            k[static_cast<std::size_t>(i)] = -M_PI + 0.5 * h;
        }
        if (i == dim) break;
    }
}

double symbol_min(const JumpKernel& kernel, int grid_n) {
    double m = 0.0;
    for_each_torus_node(kernel.dim(), grid_n,
                        [&](const double* k) { m = std::min(m, kernel.symbol(k)); });
    return m;
}

SymbolGrid::SymbolGrid(const JumpKernel& kernel, int grid_n) : dim_(kernel.dim()), grid_n_(grid_n) {
    const auto n_nodes = static_cast<std::size_t>(std::pow(static_cast<double>(grid_n), dim_) + 0.5);
    symbol_.reserve(n_nodes);
    nodes_.reserve(n_nodes * static_cast<std::size_t>(dim_));
    for_each_torus_node(dim_, grid_n, [&](const double* k) {
        symbol_.push_back(kernel.symbol(k));
        for (int i = 0; i < dim_; ++i) nodes_.push_back(k[i]);
    });
}

double SymbolGrid::heat(double rate, double t, const Site& x) const {
    double s = 0.0;
    const std::size_t n = symbol_.size();
    for (std::size_t j = 0; j < n; ++j) {
        double kx = 0.0;
        for (int i = 0; i < dim_; ++i)
            kx += nodes_[j * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i)] *
                  static_cast<double>(x[static_cast<std::size_t>(i)]);
        s += std::exp(rate * symbol_[j] * t) * std::cos(kx);
    }
    return s / static_cast<double>(n);
}

double SymbolGrid::heat_diag(double rate, double t) const {
    double s = 0.0;
    for (double v : symbol_) s += std::exp(rate * v * t);
    return s / static_cast<double>(symbol_.size());
}

double heat_kernel(const JumpKernel& kernel, double kappa, double rate_multiplier, double t,
                   const Site& x, int grid_n) {
    if (kappa < 0.0) throw std::invalid_argument("kappa must be >= 0");
    if (rate_multiplier <= 0.0) throw std::invalid_argument("rate_multiplier must be > 0");
    if (t < 0.0) throw std::invalid_argument("t must be >= 0");
    double s = 0.0;
    std::size_t n = 0;
    for_each_torus_node(kernel.dim(), grid_n, [&](const double* k) {
        double kx = 0.0;
        for (int i = 0; i < kernel.dim(); ++i)
            kx += k[i] * static_cast<double>(x[static_cast<std::size_t>(i)]);
        s += std::exp(rate_multiplier * kappa * kernel.symbol(k) * t) * std::cos(kx);
        ++n;
    });
    return s / static_cast<double>(n);
}

double green_diagonal(const JumpKernel& kernel, double lambda, int grid_n) {
    if (lambda <= 0.0) throw std::invalid_argument("green_diagonal requires lambda > 0");
    double s = 0.0;
    std::size_t n = 0;
    for_each_torus_node(kernel.dim(), grid_n, [&](const double* k) {
        s += 1.0 / (lambda - kernel.symbol(k));
        ++n;
    });
    return s / static_cast<double>(n);
}

GreenZeroResult green_zero(const JumpKernel& kernel, const Site& x, int grid_n) {
    GreenZeroResult out;
    const int levels = 3;
    std::vector<double> vals;
    int n = grid_n;
    for (int l = 0; l < levels; ++l, n *= 2) {
        double s = 0.0;
        std::size_t cnt = 0;
        for_each_torus_node(kernel.dim(), n, [&](const double* k) {
            double kx = 0.0;
            for (int i = 0; i < kernel.dim(); ++i)
                kx += k[i] * static_cast<double>(x[static_cast<std::size_t>(i)]);
            s += std::cos(kx) / (-kernel.symbol(k));
            ++cnt;
        });
        vals.push_back(s / static_cast<double>(cnt));
        out.trace.emplace_back(n, vals.back());
    }
    const double d1 = vals[1] - vals[0];
    const double d2 = vals[2] - vals[1];
    if (std::abs(d1) < 1e-14) {
        out.value = vals[2];
        return out;
    }
    const double r = d2 / d1;
    if (r > 0.97) {
        out.divergent = true;
        return out;
    }
    // geometric extrapolation of the remaining increments
    out.value = vals[2] + d2 * r / (1.0 - r);
    return out;
}

HeatTailResult heat_tail_integral(const SymbolGrid& grid, double T) {
    if (T <= 0.0) throw std::invalid_argument("heat tail cutoff must be > 0");
    HeatTailResult out;
    auto p = [&](double t) { return grid.heat_diag(1.0, t); };

    // The grid represents p(t,0,0) faithfully until wrap-around images at
    // distance grid_n contribute, i.e. up to t ~ grid_n^2 / 24. Beyond the
    // window edge the tail is algebraic with the known exponent q = d/2
    // (finite support means quadratic symbol curvature); a two-term model
    // t^{-q}(c + a/t) is fitted at the edge and integrated analytically.
    const double n = grid.grid_n();
    const double t_valid = n * n / 24.0;
    const double q = 0.5 * grid.dim();
    if (!(q > 1.01))
        throw std::runtime_error("heat-kernel tail not integrable: recurrent parameters");

    auto fit_tail = [&](double t_edge) {
        const double t1 = 0.5 * t_edge, t2 = t_edge;
        const double y1 = std::pow(t1, q) * p(t1);
        const double y2 = std::pow(t2, q) * p(t2);
        // y(t) = c + a/t
        const double a = (y1 - y2) / (1.0 / t1 - 1.0 / t2);
        const double c = y2 - a / t2;
        // local decay must actually be algebraic of this order
        const double q_eff = std::log(p(t1) / p(t2)) / std::log(2.0);
        if (std::abs(q_eff - q) > 0.3)
            throw std::runtime_error("heat-kernel tail is not algebraic of order d/2");
        struct Fit {
            double c, a;
        };
        return Fit{c, a};
    };

    // composite Simpson on a log-t mesh
    auto integrate = [&](double lo, double hi) {
        const int segments = 160;
        const double la = std::log(lo), lb = std::log(hi);
        const double h = (lb - la) / segments;
        double acc = 0.0;
        for (int i = 0; i < segments; ++i) {
            const double l0 = la + i * h, l2 = l0 + h, l1 = 0.5 * (l0 + l2);
            const double t0 = std::exp(l0), t1 = std::exp(l1), t2 = std::exp(l2);
            acc += h / 6.0 * (p(t0) * t0 + 4.0 * p(t1) * t1 + p(t2) * t2);
        }
        return acc;
    };

    auto evaluate = [&](double t_edge) {
        const auto fit = fit_tail(t_edge);
        const double start = std::max(T, t_edge);
        double tail = fit.c * std::pow(start, 1.0 - q) / (q - 1.0) +
                      fit.a * std::pow(start, -q) / q;
        double value = tail;
        if (T < t_edge) value += integrate(T, t_edge);
        return std::pair{value, tail};
    };

    const auto [value, tail] = evaluate(t_valid);
    out.value = value;
    out.tail_fraction = tail / value;
    out.tail_exponent = q;
    out.richardson_delta = std::abs(value - evaluate(0.5 * t_valid).first);
    return out;
}

}  // namespace pam
