#include "pam/spde.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <thread>

namespace pam {

namespace {

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

int resolve_threads(int threads) {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

SpdeConfig::SpdeConfig(JumpKernel k, std::optional<CorrelationKernel> b, double kap, BoxDomain dom,
                       double step, Scheme s)
    : kernel(std::move(k)), noise(std::move(b)), kappa(kap), domain(dom), dt(step), scheme(s) {
    if (kernel.dim() != domain.dim() || (noise && noise->dim() != domain.dim()))
        throw std::invalid_argument("dimension mismatch in SpdeConfig");
    if (domain.boundary() != Boundary::periodic)
        throw std::invalid_argument("simulation requires a periodic box");
    if (kappa < 0.0) throw std::invalid_argument("kappa must be >= 0");
    if (dt <= 0.0) throw std::invalid_argument("dt must be > 0");
    b0_ = noise ? Correlator::from_b(*noise).at_origin() : 0.0;
    // stability guard with the norm bound |L| <= 2
    if (dt * (kappa * 2.0 + b0_) > 0.5)
        throw std::invalid_argument("unstable time step: dt*(2*kappa + B(0)) must be <= 0.5");
}

SpdeStepper::SpdeStepper(const SpdeConfig& cfg) : cfg_(cfg) {
    const auto& dom = cfg_.domain;
    const auto n = dom.n_sites();

    const auto full = cfg_.kernel.entries();
    gen_shift_.resize(full.size());
    gen_weight_.resize(full.size());
    for (std::size_t e = 0; e < full.size(); ++e) {
        gen_weight_[e] = full[e].second;
        gen_shift_[e].resize(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i)
            gen_shift_[e][static_cast<std::size_t>(i)] =
                static_cast<std::int32_t>(*dom.shifted(i, full[e].first));
    }

    if (cfg_.scheme == Scheme::exp_split) {
        // row of exp(dt kappa L) on the periodic box via its own momenta:
        // p(y) = N^-d sum_j exp(dt kappa L_hat(k_j)) cos(k_j . y)
        const int dim = dom.dim();
        const std::int64_t side = dom.side();
        const double step_rate = cfg_.dt * cfg_.kappa;
        std::vector<std::pair<Site, double>> row;
        // iterate displacements y over the box; cost (2L+1)^(2d), boxes are small
        for (std::int64_t iy = 0; iy < n; ++iy) {
            const Site y = dom.coord_of(iy);
            double acc = 0.0;
            std::array<std::int64_t, kMaxDim> j{};
            std::array<double, kMaxDim> k{};
            bool done = false;
            while (!done) {
                for (int i = 0; i < dim; ++i)
                    k[static_cast<std::size_t>(i)] =
                        2.0 * M_PI * static_cast<double>(j[static_cast<std::size_t>(i)]) /
                        static_cast<double>(side);
                double ky = 0.0;
                for (int i = 0; i < dim; ++i)
                    ky += k[static_cast<std::size_t>(i)] *
                          static_cast<double>(y[static_cast<std::size_t>(i)]);
                acc += std::exp(step_rate * cfg_.kernel.symbol(k.data())) * std::cos(ky);
                int i = 0;
                for (; i < dim; ++i) {
                    if (++j[static_cast<std::size_t>(i)] < side) break;
                    j[static_cast<std::size_t>(i)] = 0;
                }
                done = (i == dim);
            }
            const double p = acc / static_cast<double>(n);
            if (p > 1e-14) row.emplace_back(y, p);
        }
        // renormalize the truncated row to an exact probability row
        double total = 0.0;
        for (auto& [y, p] : row) total += p;
        heat_shift_.resize(row.size());
        heat_weight_.resize(row.size());
        for (std::size_t e = 0; e < row.size(); ++e) {
            heat_weight_[e] = row[e].second / total;
            heat_shift_[e].resize(static_cast<std::size_t>(n));
            for (std::int64_t i = 0; i < n; ++i)
                heat_shift_[e][static_cast<std::size_t>(i)] =
                    static_cast<std::int32_t>(*dom.shifted(i, row[e].first));
        }
    }
}

void SpdeStepper::apply_generator(const std::vector<double>& in, std::vector<double>& out) const {
    const auto n = static_cast<std::size_t>(cfg_.domain.n_sites());
    for (std::size_t i = 0; i < n; ++i) out[i] = -in[i];
    for (std::size_t e = 0; e < gen_shift_.size(); ++e) {
        const double w = gen_weight_[e];
        const auto& sh = gen_shift_[e];
        for (std::size_t i = 0; i < n; ++i) out[i] += w * in[static_cast<std::size_t>(sh[i])];
    }
}

void SpdeStepper::convolve_heat(std::vector<double>& u, std::vector<double>& scratch) const {
    const auto n = static_cast<std::size_t>(cfg_.domain.n_sites());
    scratch.assign(n, 0.0);
    for (std::size_t e = 0; e < heat_shift_.size(); ++e) {
        const double w = heat_weight_[e];
        const auto& sh = heat_shift_[e];
        for (std::size_t i = 0; i < n; ++i) scratch[i] += w * u[static_cast<std::size_t>(sh[i])];
    }
    u.swap(scratch);
}

void SpdeStepper::step(LatticeField& u, NoiseGenerator& gen, SpdeWorkspace& ws) const {
    const auto n = static_cast<std::size_t>(cfg_.domain.n_sites());
    ws.buf.resize(n);
    if (!cfg_.noise) {
        if (cfg_.scheme == Scheme::ito_euler) {
            apply_generator(u.values, ws.buf);
            for (std::size_t i = 0; i < n; ++i) u.values[i] += cfg_.dt * cfg_.kappa * ws.buf[i];
        } else {
            convolve_heat(u.values, ws.buf);
        }
        return;
    }
    const LatticeField dw = gen.sample_increment(cfg_.dt);
    if (cfg_.scheme == Scheme::ito_euler) {
        apply_generator(u.values, ws.buf);
        for (std::size_t i = 0; i < n; ++i)
            u.values[i] += cfg_.dt * cfg_.kappa * ws.buf[i] + u.values[i] * dw.values[i];
    } else {
        const double comp = 0.5 * cfg_.b0() * cfg_.dt;
        for (std::size_t i = 0; i < n; ++i) u.values[i] *= std::exp(dw.values[i] - comp);
        convolve_heat(u.values, ws.buf);
    }
    if (!u.all_finite())
        throw std::runtime_error("non-finite field during SPDE step (dt too large?)");
}

void SpdeStepper::step(LatticeField& u, NoiseGenerator& gen) const {
    SpdeWorkspace ws;
    step(u, gen, ws);
}

LatticeField step(const LatticeField& state, const SpdeConfig& cfg, NoiseGenerator& gen) {
    if (cfg.scheme == Scheme::exp_split)
        for (double v : state.values)
            if (v <= 0.0) throw std::invalid_argument("exp_split requires a positive state");
    SpdeStepper stepper(cfg);
    LatticeField u = state;
    stepper.step(u, gen);
    return u;
}

std::string EnsembleStats::to_csv() const {
    std::string out = "time,p,estimate,stderr,n_members\n";
    for (std::size_t t = 0; t < times.size(); ++t)
        for (int p = 1; p <= p_max; ++p) {
            out += fmt(times[t]);
            out += ',';
            out += std::to_string(p);
            out += ',';
            out += fmt(estimate[t][static_cast<std::size_t>(p - 1)]);
            out += ',';
            out += fmt(stderr_[t][static_cast<std::size_t>(p - 1)]);
            out += ',';
            out += std::to_string(n_members);
            out += '\n';
        }
    return out;
}

EnsembleStats run_ensemble(const SpdeConfig& cfg, double t_max, std::int64_t n_members, int p_max,
                           std::uint64_t base_seed, int n_checkpoints, int threads) {
    if (n_members < 2) throw std::invalid_argument("n_members must be >= 2");
    if (p_max < 1) throw std::invalid_argument("p_max must be >= 1");
    if (t_max <= 0.0) throw std::invalid_argument("t_max must be > 0");

    const auto n_steps = static_cast<std::int64_t>(std::ceil(t_max / cfg.dt - 1e-12));
    std::vector<std::int64_t> checkpoint_steps;
    std::vector<double> times;
    for (int c = 1; c <= n_checkpoints; ++c) {
        auto s = static_cast<std::int64_t>(
            std::llround(static_cast<double>(n_steps) * c / n_checkpoints));
        s = std::max<std::int64_t>(1, std::min(s, n_steps));
        if (checkpoint_steps.empty() || s != checkpoint_steps.back()) {
            checkpoint_steps.push_back(s);
            times.push_back(static_cast<double>(s) * cfg.dt);
        }
    }

    const SpdeStepper stepper(cfg);
    const auto n_sites = static_cast<std::size_t>(cfg.domain.n_sites());
    const std::size_t n_t = checkpoint_steps.size();
    const auto pm = static_cast<std::size_t>(p_max);

    // per-member spatial averages of u^p at each checkpoint, fixed slots
    std::vector<double> slots(static_cast<std::size_t>(n_members) * n_t * pm);

    const CorrelationKernel gen_kernel =
        cfg.noise ? *cfg.noise : CorrelationKernel::delta0(cfg.domain.dim());
    auto worker = [&](std::int64_t lo, std::int64_t hi) {
        SpdeWorkspace ws;
        for (std::int64_t m = lo; m < hi; ++m) {
            NoiseGenerator gen(gen_kernel, cfg.domain, base_seed, static_cast<std::uint64_t>(m));
            LatticeField u(cfg.domain, 1.0);
            std::size_t next_cp = 0;
            for (std::int64_t s = 1; s <= n_steps && next_cp < n_t; ++s) {
                stepper.step(u, gen, ws);
                if (s == checkpoint_steps[next_cp]) {
                    for (std::size_t p = 1; p <= pm; ++p) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < n_sites; ++i)
                            acc += std::pow(u.values[i], static_cast<double>(p));
                        slots[(static_cast<std::size_t>(m) * n_t + next_cp) * pm + (p - 1)] =
                            acc / static_cast<double>(n_sites);
                    }
                    ++next_cp;
                }
            }
        }
    };

    const int nt = std::min<std::int64_t>(resolve_threads(threads), n_members);
    if (nt <= 1) {
        worker(0, n_members);
    } else {
        std::vector<std::thread> pool;
        const std::int64_t chunk = (n_members + nt - 1) / nt;
        for (int w = 0; w < nt; ++w) {
            const std::int64_t lo = w * chunk;
            const std::int64_t hi = std::min<std::int64_t>(n_members, lo + chunk);
            if (lo < hi) pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    EnsembleStats out;
    out.times = times;
    out.p_max = p_max;
    out.n_members = n_members;
    out.estimate.assign(n_t, std::vector<double>(pm, 0.0));
    out.stderr_.assign(n_t, std::vector<double>(pm, 0.0));
    for (std::size_t t = 0; t < n_t; ++t)
        for (std::size_t p = 0; p < pm; ++p) {
            // pairwise summation over members for order-stable reduction
            const auto fetch = [&](std::int64_t m) {
                return slots[(static_cast<std::size_t>(m) * n_t + t) * pm + p];
            };
            std::function<double(std::int64_t, std::int64_t)> psum =
                [&](std::int64_t lo, std::int64_t hi) -> double {
                if (hi - lo <= 8) {
                    double s = 0.0;
                    for (std::int64_t m = lo; m < hi; ++m) s += fetch(m);
                    return s;
                }
                const std::int64_t mid = lo + (hi - lo) / 2;
                return psum(lo, mid) + psum(mid, hi);
            };
            const double mean = psum(0, n_members) / static_cast<double>(n_members);
            std::function<double(std::int64_t, std::int64_t)> pvar =
                [&](std::int64_t lo, std::int64_t hi) -> double {
                if (hi - lo <= 8) {
                    double s = 0.0;
                    for (std::int64_t m = lo; m < hi; ++m) {
                        const double d = fetch(m) - mean;
                        s += d * d;
                    }
                    return s;
                }
                const std::int64_t mid = lo + (hi - lo) / 2;
                return pvar(lo, mid) + pvar(mid, hi);
            };
            const double var = pvar(0, n_members) / static_cast<double>(n_members - 1);
            out.estimate[t][p] = mean;
            // jackknife standard error of the mean (leave-one-out form)
            out.stderr_[t][p] = std::sqrt(var / static_cast<double>(n_members));
        }
    return out;
}

}  // namespace pam
