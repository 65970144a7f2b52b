#include "pam/walk.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
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

// inverse-CDF sampler over the full (deterministically ordered) support
struct JumpSampler {
    std::vector<Site> sites;
    std::vector<double> cdf;

    explicit JumpSampler(const JumpKernel& kernel) {
        double acc = 0.0;
        for (const auto& [z, w] : kernel.entries()) {
            acc += w;
            sites.push_back(z);
            cdf.push_back(acc);
        }
        cdf.back() = 1.0;
    }

    const Site& draw(RngStream& rng) const {
        const double u = rng.next_uniform();
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        return sites[static_cast<std::size_t>(it - cdf.begin())];
    }
};

double logsumexp(const std::vector<double>& v, double scale = 1.0) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, scale * x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(scale * x - m);
    return m + std::log(s);
}

struct LogStats {
    double log_mean;
    double log_se;
    double ess_fraction;
};

LogStats log_stats(const std::vector<double>& logw) {
    const auto n = static_cast<double>(logw.size());
    const double l1 = logsumexp(logw);            // log sum w
    const double l2 = logsumexp(logw, 2.0);       // log sum w^2
    LogStats out{};
    out.log_mean = l1 - std::log(n);
    // Var(w)/n / mean^2 = (exp(l2 - 2 l1) * n - 1) / (n - 1) / n
    const double r = std::exp(l2 - 2.0 * l1) * n;
    const double rel_var = std::max(0.0, (r - 1.0) * n / (n - 1.0));
    out.log_se = std::sqrt(rel_var / n);
    out.ess_fraction = std::exp(2.0 * l1 - l2) / n;
    return out;
}

}  // namespace

WalkPath sample_path(const JumpKernel& kernel, double kappa, double t, RngStream& rng) {
    if (kappa < 0.0 || t < 0.0) throw std::invalid_argument("kappa and t must be >= 0");
    WalkPath path;
    path.positions.push_back(Site{});
    if (kappa == 0.0) return path;
    const JumpSampler sampler(kernel);
    double clock = rng.next_exponential(kappa);
    Site pos{};
    while (clock <= t) {
        const Site& z = sampler.draw(rng);
        for (int i = 0; i < kernel.dim(); ++i)
            pos[static_cast<std::size_t>(i)] += z[static_cast<std::size_t>(i)];
        path.jump_times.push_back(clock);
        path.positions.push_back(pos);
        clock += rng.next_exponential(kappa);
    }
    return path;
}

namespace {

// Runs p independent walkers to t_max, accumulating int V_p ds exactly on the
// merged jump skeleton; records the integral at each grid time.
void integrate_vp(const JumpKernel& kernel, const JumpSampler& sampler, int p, double kappa,
                  const Correlator& B, const std::vector<double>& t_grid, RngStream& rng,
                  double* out_integrals) {
    const double t_max = t_grid.back();
    const int dim = kernel.dim();

    struct Walker {
        Site pos{};
        double next_jump;
    };
    std::vector<Walker> walkers(static_cast<std::size_t>(p));
    for (auto& w : walkers)
        w.next_jump = kappa > 0.0 ? rng.next_exponential(kappa) : 2.0 * t_max + 1.0;

    auto pair_sum = [&](const Site& x) { return B.value(x); };
    // current V_p
    double v = 0.0;
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) {
            Site d{};
            for (int c = 0; c < dim; ++c)
                d[static_cast<std::size_t>(c)] =
                    walkers[static_cast<std::size_t>(i)].pos[static_cast<std::size_t>(c)] -
                    walkers[static_cast<std::size_t>(j)].pos[static_cast<std::size_t>(c)];
            v += pair_sum(d);
        }

    double now = 0.0;
    double integral = 0.0;
    std::size_t gi = 0;
    while (gi < t_grid.size()) {
        // next event: earliest walker jump or next grid time
        int who = -1;
        double t_next = t_grid[gi];
        for (int i = 0; i < p; ++i)
            if (walkers[static_cast<std::size_t>(i)].next_jump < t_next) {
                t_next = walkers[static_cast<std::size_t>(i)].next_jump;
                who = i;
            }
        integral += v * (t_next - now);
        now = t_next;
        if (who < 0) {
            out_integrals[gi++] = integral;
            continue;
        }
        auto& w = walkers[static_cast<std::size_t>(who)];
        const Site& z = sampler.draw(rng);
        // update V_p incrementally: only pairs involving `who` change
        Site newpos = w.pos;
        for (int c = 0; c < dim; ++c)
            newpos[static_cast<std::size_t>(c)] += z[static_cast<std::size_t>(c)];
        for (int j = 0; j < p; ++j) {
            if (j == who) continue;
            Site d_old{}, d_new{};
            for (int c = 0; c < dim; ++c) {
                const auto other =
                    walkers[static_cast<std::size_t>(j)].pos[static_cast<std::size_t>(c)];
                d_old[static_cast<std::size_t>(c)] = w.pos[static_cast<std::size_t>(c)] - other;
                d_new[static_cast<std::size_t>(c)] = newpos[static_cast<std::size_t>(c)] - other;
            }
            v += pair_sum(d_new) - pair_sum(d_old);
        }
        w.pos = newpos;
        w.next_jump = now + rng.next_exponential(kappa);
    }
}

// log-weights for all paths at every grid time; [path][grid] layout flattened
std::vector<double> run_paths(const JumpKernel& kernel, int p, double kappa, const Correlator& B,
                              const std::vector<double>& t_grid, std::int64_t n_paths,
                              std::uint64_t seed, int threads) {
    const JumpSampler sampler(kernel);
    std::vector<double> logw(static_cast<std::size_t>(n_paths) * t_grid.size());
    auto worker = [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            RngStream rng(seed, static_cast<std::uint64_t>(i), RngStream::kWalk);
            integrate_vp(kernel, sampler, p, kappa, B, t_grid, rng,
                         logw.data() + static_cast<std::size_t>(i) * t_grid.size());
        }
    };
    const int nt = static_cast<int>(std::min<std::int64_t>(resolve_threads(threads), n_paths));
    if (nt <= 1) {
        worker(0, n_paths);
    } else {
        std::vector<std::thread> pool;
        const std::int64_t chunk = (n_paths + nt - 1) / nt;
        for (int w = 0; w < nt; ++w) {
            const std::int64_t lo = w * chunk;
            const std::int64_t hi = std::min<std::int64_t>(n_paths, lo + chunk);
            if (lo < hi) pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    return logw;
}

}  // namespace

FkEstimate fk_moment_estimate(const JumpKernel& kernel, int p, double kappa, const Correlator& B,
                              double t, std::int64_t n_paths, std::uint64_t seed, int threads) {
    if (p < 1) throw std::invalid_argument("p must be >= 1");
    if (t < 0.0) throw std::invalid_argument("t must be >= 0");
    if (n_paths < 2) throw std::invalid_argument("n_paths must be >= 2");
    if (kernel.dim() != B.dim()) throw std::invalid_argument("kernel/correlator dim mismatch");

    FkEstimate out;
    out.n_paths = n_paths;
    if (t == 0.0 || p == 1) {
        // V_1 = 0: every weight is exactly 1
        out.estimate = 1.0;
        return out;
    }
    const std::vector<double> grid{t};
    std::vector<double> logw = run_paths(kernel, p, kappa, B, grid, n_paths, seed, threads);
    const LogStats st = log_stats(logw);
    out.log_estimate = st.log_mean;
    out.log_stderr = st.log_se;
    out.ess_fraction = st.ess_fraction;
    out.dominated = st.ess_fraction < 1e-3;
    out.estimate = std::exp(st.log_mean);
    out.stderr_ = out.estimate * st.log_se;
    return out;
}

FkSlope fk_lyapunov_estimate(const JumpKernel& kernel, int p, double kappa, const Correlator& B,
                             const std::vector<double>& t_grid, std::int64_t n_paths,
                             std::uint64_t seed, int threads) {
    FkSlope out;
    if (t_grid.size() < 3) {
        out.message = "t_grid needs at least 3 points";
        return out;
    }
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (t_grid[i] <= t_grid[i - 1]) {
            out.message = "t_grid must be strictly increasing";
            return out;
        }

    const std::size_t n_t = t_grid.size();
    std::vector<double> logw = run_paths(kernel, p, kappa, B, t_grid, n_paths, seed, threads);
    out.t_grid = t_grid;
    out.log_estimate.resize(n_t);
    out.log_stderr.resize(n_t);
    out.ess_fraction.resize(n_t);

    std::vector<double> col(static_cast<std::size_t>(n_paths));
    for (std::size_t ti = 0; ti < n_t; ++ti) {
        for (std::int64_t i = 0; i < n_paths; ++i)
            col[static_cast<std::size_t>(i)] = logw[static_cast<std::size_t>(i) * n_t + ti];
        const LogStats st = log_stats(col);
        out.log_estimate[ti] = st.log_mean;
        out.log_stderr[ti] = st.log_se;
        out.ess_fraction[ti] = st.ess_fraction;
    }

    // largest contiguous window with relative error < 0.5 (ties -> later t);
    // a minimal effective-sample floor guards se estimates that would
    // otherwise come from a handful of dominating paths
    const double ess_floor = 1e-4;
    std::size_t best_lo = 0, best_len = 0;
    std::size_t lo = 0;
    while (lo < n_t) {
        if (out.log_stderr[lo] >= 0.5 || out.ess_fraction[lo] < ess_floor) {
            ++lo;
            continue;
        }
        std::size_t hi = lo;
        while (hi + 1 < n_t && out.log_stderr[hi + 1] < 0.5 && out.ess_fraction[hi + 1] >= ess_floor)
            ++hi;
        if (hi - lo + 1 >= best_len) {
            best_len = hi - lo + 1;
            best_lo = lo;
        }
        lo = hi + 1;
    }
    if (best_len < 3) {
        out.message = "effective sample size collapse: no usable window";
        return out;
    }
    const std::size_t wlo = best_lo, whi = best_lo + best_len - 1;
    out.window_lo = t_grid[wlo];
    out.window_hi = t_grid[whi];

    // weighted least squares on the window, weights 1/se^2
    auto wls_slope = [&](const std::vector<double>& y) {
        double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
        for (std::size_t ti = wlo; ti <= whi; ++ti) {
            const double se = std::max(out.log_stderr[ti], 1e-12);
            const double w = 1.0 / (se * se);
            const double x = t_grid[ti];
            sw += w;
            swx += w * x;
            swy += w * y[ti];
            swxx += w * x * x;
            swxy += w * x * y[ti];
        }
        return (sw * swxy - swx * swy) / (sw * swxx - swx * swx);
    };
    out.slope = wls_slope(out.log_estimate);

    // jackknife over path batches, log-estimates recomputed per left-out batch
    const int n_batches = static_cast<int>(std::min<std::int64_t>(64, n_paths));
    std::vector<std::vector<double>> batch_lse(static_cast<std::size_t>(n_batches),
                                               std::vector<double>(n_t));
    std::vector<double> tmp;
    for (int b = 0; b < n_batches; ++b) {
        const std::int64_t blo = n_paths * b / n_batches;
        const std::int64_t bhi = n_paths * (b + 1) / n_batches;
        for (std::size_t ti = 0; ti < n_t; ++ti) {
            tmp.clear();
            for (std::int64_t i = blo; i < bhi; ++i)
                tmp.push_back(logw[static_cast<std::size_t>(i) * n_t + ti]);
            batch_lse[static_cast<std::size_t>(b)][ti] = logsumexp(tmp);
        }
    }
    std::vector<double> jack_slopes;
    std::vector<double> loo(n_t);
    for (int b = 0; b < n_batches; ++b) {
        for (std::size_t ti = 0; ti < n_t; ++ti) {
            tmp.clear();
            for (int b2 = 0; b2 < n_batches; ++b2)
                if (b2 != b) tmp.push_back(batch_lse[static_cast<std::size_t>(b2)][ti]);
            const std::int64_t blo = n_paths * b / n_batches;
            const std::int64_t bhi = n_paths * (b + 1) / n_batches;
            loo[ti] = logsumexp(tmp) - std::log(static_cast<double>(n_paths - (bhi - blo)));
        }
        jack_slopes.push_back(wls_slope(loo));
    }
    double mean = 0.0;
    for (double s : jack_slopes) mean += s;
    mean /= jack_slopes.size();
    double var = 0.0;
    for (double s : jack_slopes) var += (s - mean) * (s - mean);
    var *= static_cast<double>(jack_slopes.size() - 1) / static_cast<double>(jack_slopes.size());
    out.slope_stderr = std::sqrt(var);
    out.ok = true;
    return out;
}

std::string fk_csv_header() { return "p,kappa,t,estimate_log,stderr_log,n_paths\n"; }

std::string fk_csv_row(int p, double kappa, double t, const FkEstimate& est) {
    std::string out;
    out += std::to_string(p);
    out += ',';
    out += fmt(kappa);
    out += ',';
    out += fmt(t);
    out += ',';
    out += fmt(est.log_estimate);
    out += ',';
    out += fmt(est.log_stderr);
    out += ',';
    out += std::to_string(est.n_paths);
    out += '\n';
    return out;
}

}  // namespace pam
