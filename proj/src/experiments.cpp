#include "pam/experiments.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "pam/moments.hpp"
#include "pam/noise.hpp"
#include "pam/spde.hpp"
#include "pam/spectral.hpp"
#include "pam/version.hpp"
#include "pam/walk.hpp"

namespace pam {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::uint64_t fnv64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw std::invalid_argument(where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) throw std::invalid_argument("unknown key '" + key + "' in " + where);
    }
}

std::vector<std::pair<Site, double>> entries_from(const json& j, int dim) {
    std::vector<std::pair<Site, double>> out;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2)
            throw std::invalid_argument("entries must be [[z...], value] pairs");
        Site z{};
        const auto& zs = e[0];
        if (!zs.is_array() || static_cast<int>(zs.size()) != dim)
            throw std::invalid_argument("entry site must have length dim");
        for (int i = 0; i < dim; ++i) z[static_cast<std::size_t>(i)] = zs[static_cast<std::size_t>(i)].get<std::int64_t>();
        out.emplace_back(z, e[1].get<double>());
    }
    return out;
}

struct Config {
    std::string experiment;
    json raw;

    JumpKernel kernel = JumpKernel::nearest_neighbor(1);
    bool has_b = false;
    CorrelationKernel b = CorrelationKernel::delta0(1);
    bool has_v = false;
    Correlator V = Correlator::delta0(1);
    double kappa = 0.5;
    double sigma = 1.0;
    double alpha = 2.0;
    std::vector<double> beta = {1.0};
    double diffusion_scale = 1.0;
    double noise_factor = 1.0;

    std::int64_t L = 0;  // 0: per-experiment default
    double dt = 0.05;
    int grid_n = 0;      // 0: dimension default
    std::int64_t n_members = 1000;
    std::int64_t n_paths = 20000;
    double t_max = 2.0;
    double tol = 1e-3;
    int p = 2;
    int p_max = 4;
    std::vector<double> t_grid;
    double sigma_max = 8.0;
    int n_checkpoints = 8;
    int threads = 0;
    std::int64_t witness_box = 24;
    std::int64_t site_cap = 1000000;
    Scheme scheme = Scheme::exp_split;

    std::uint64_t seed = 1;

    int grid() const {
        if (grid_n > 0) return grid_n;
        const int d = kernel.dim();
        return d == 1 ? 256 : d == 2 ? 128 : 64;
    }
    std::int64_t box_or(std::int64_t dflt) const { return L > 0 ? L : dflt; }
};

Config parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j, {"experiment", "model", "numerics", "seed", "output_dir"}, "config");
    Config c;
    c.raw = j;
    c.experiment = j.at("experiment").get<std::string>();
    static const std::set<std::string> experiments = {
        "simulate", "moments",  "lyapunov", "spectrum",     "sigma-cr",      "bargmann",
        "sigma0",   "classify", "partition", "zero-mean-1d", "scaling-check"};
    if (!experiments.count(c.experiment))
        throw std::invalid_argument("unknown experiment '" + c.experiment + "'");

    if (j.contains("model")) {
        const auto& m = j["model"];
        reject_unknown(m,
                       {"kernel", "b", "V", "kappa", "sigma", "alpha", "beta", "diffusion_scale",
                        "noise_factor"},
                       "model");
        if (m.contains("kernel")) {
            const auto& k = m["kernel"];
            reject_unknown(k, {"type", "dim", "entries"}, "model.kernel");
            const std::string type = k.value("type", "nn");
            const int dim = k.value("dim", 1);
            if (type == "nn")
                c.kernel = JumpKernel::nearest_neighbor(dim);
            else if (type == "custom")
                c.kernel = JumpKernel(dim, entries_from(k.at("entries"), dim));
            else
                throw std::invalid_argument("kernel.type must be 'nn' or 'custom'");
        }
        const int kd = c.kernel.dim();
        if (m.contains("b")) {
            const auto& b = m["b"];
            reject_unknown(b, {"type", "dim", "entries"}, "model.b");
            const std::string type = b.value("type", "custom");
            const int dim = b.value("dim", kd);
            c.b = type == "delta0" ? CorrelationKernel::delta0(dim)
                                   : CorrelationKernel(dim, entries_from(b.at("entries"), dim));
            c.has_b = true;
        }
        if (m.contains("V")) {
            const auto& v = m["V"];
            reject_unknown(v, {"type", "dim", "entries"}, "model.V");
            const std::string type = v.value("type", "custom");
            const int dim = v.value("dim", kd);
            c.V = type == "delta0" ? Correlator::delta0(dim)
                                   : Correlator::potential(dim, entries_from(v.at("entries"), dim));
            c.has_v = true;
        }
        c.kappa = m.value("kappa", c.kappa);
        c.sigma = m.value("sigma", c.sigma);
        c.alpha = m.value("alpha", c.alpha);
        if (m.contains("beta")) c.beta = m["beta"].get<std::vector<double>>();
        c.diffusion_scale = m.value("diffusion_scale", c.diffusion_scale);
        c.noise_factor = m.value("noise_factor", c.noise_factor);
    }
    if (j.contains("numerics")) {
        const auto& n = j["numerics"];
        reject_unknown(n,
                       {"L", "dt", "grid_n", "n_members", "n_paths", "t_max", "tol", "p", "p_max",
                        "t_grid", "sigma_max", "n_checkpoints", "threads", "witness_box",
                        "site_cap", "scheme"},
                       "numerics");
        c.L = n.value("L", c.L);
        c.dt = n.value("dt", c.dt);
        c.grid_n = n.value("grid_n", c.grid_n);
        c.n_members = n.value("n_members", c.n_members);
        c.n_paths = n.value("n_paths", c.n_paths);
        c.t_max = n.value("t_max", c.t_max);
        c.tol = n.value("tol", c.tol);
        c.p = n.value("p", c.p);
        c.p_max = n.value("p_max", c.p_max);
        if (n.contains("t_grid")) c.t_grid = n["t_grid"].get<std::vector<double>>();
        c.sigma_max = n.value("sigma_max", c.sigma_max);
        c.n_checkpoints = n.value("n_checkpoints", c.n_checkpoints);
        c.threads = n.value("threads", c.threads);
        c.witness_box = n.value("witness_box", c.witness_box);
        c.site_cap = n.value("site_cap", c.site_cap);
        if (n.contains("scheme")) {
            const std::string s = n["scheme"].get<std::string>();
            if (s == "ito_euler")
                c.scheme = Scheme::ito_euler;
            else if (s == "exp_split")
                c.scheme = Scheme::exp_split;
            else
                throw std::invalid_argument("scheme must be 'ito_euler' or 'exp_split'");
        }
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();

    // basic range checks
    if (c.kappa < 0.0) throw std::invalid_argument("model.kappa must be >= 0");
    if (c.sigma < 0.0) throw std::invalid_argument("model.sigma must be >= 0");
    if (c.dt <= 0.0) throw std::invalid_argument("numerics.dt must be > 0");
    if (c.L < 0) throw std::invalid_argument("numerics.L must be >= 1");
    if (c.grid_n != 0 && c.grid_n < 8) throw std::invalid_argument("numerics.grid_n must be >= 8");
    if (c.n_members < 2) throw std::invalid_argument("numerics.n_members must be >= 2");
    if (c.n_paths < 2) throw std::invalid_argument("numerics.n_paths must be >= 2");
    if (c.t_max <= 0.0) throw std::invalid_argument("numerics.t_max must be > 0");
    if (c.tol <= 0.0) throw std::invalid_argument("numerics.tol must be > 0");
    if (c.p < 1) throw std::invalid_argument("numerics.p must be >= 1");
    if (c.p_max < 1) throw std::invalid_argument("numerics.p_max must be >= 1");
    return c;
}

struct ExperimentResult {
    std::string csv;      // results.csv body (header + rows)
    json summary;         // results.json
    std::string display;  // extra human-readable text (printed by the CLI)
    std::string aux_name;  // optional second artifact
    std::string aux_body;
};

std::vector<double> default_grid(double t_max, int n) {
    std::vector<double> g;
    for (int i = 1; i <= n; ++i) g.push_back(t_max * i / n);
    return g;
}

ExperimentResult exp_simulate(const Config& c) {
    const BoxDomain box(c.kernel.dim(), c.box_or(c.kernel.dim() == 1 ? 64 : 32), Boundary::periodic);
    const CorrelationKernel b = c.has_b ? c.b : CorrelationKernel::delta0(c.kernel.dim());
    SpdeConfig cfg(c.kernel, b, c.kappa, box, c.dt, c.scheme);
    const auto stats =
        run_ensemble(cfg, c.t_max, c.n_members, c.p_max, c.seed, c.n_checkpoints, c.threads);
    ExperimentResult out;
    out.csv = stats.to_csv();
    json j;
    j["times"] = stats.times;
    j["p_max"] = stats.p_max;
    j["n_members"] = stats.n_members;
    for (std::size_t t = 0; t < stats.times.size(); ++t)
        for (int p = 1; p <= stats.p_max; ++p) {
            j["estimates"].push_back(stats.estimate[t][static_cast<std::size_t>(p - 1)]);
            j["stderrs"].push_back(stats.stderr_[t][static_cast<std::size_t>(p - 1)]);
        }
    out.summary = j;
    out.display = "ensemble of " + std::to_string(stats.n_members) + " members to t = " +
                  fmt(c.t_max) + "; moments up to p = " + std::to_string(stats.p_max);
    return out;
}

ExperimentResult exp_moments(const Config& c) {
    const BoxDomain box(c.kernel.dim(), c.box_or(64), Boundary::periodic);
    const Correlator B = c.has_v ? c.V : Correlator::from_b(c.has_b ? c.b : CorrelationKernel::delta0(c.kernel.dim()));
    const auto grid = c.t_grid.empty() ? default_grid(c.t_max, 8) : c.t_grid;
    const auto fields = solve_m2(c.kernel, c.kappa, B, grid, box);
    ExperimentResult out;
    out.csv = "t,m2_origin,log_m2_over_t\n";
    const Site origin{};
    json js = json::array();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = fields[i][box.index_of(origin)];
        out.csv += fmt(grid[i]);
        out.csv += ',';
        out.csv += fmt(v);
        out.csv += ',';
        out.csv += fmt(grid[i] > 0 ? std::log(v) / grid[i] : 0.0);
        out.csv += '\n';
        js.push_back(json::array({grid[i], v}));
    }
    out.summary["m2_origin"] = js;
    out.display = "deterministic second moment on a periodic box of radius " +
                  std::to_string(box.radius());
    return out;
}

ExperimentResult exp_lyapunov(const Config& c) {
    const Correlator B = c.has_v ? c.V : Correlator::from_b(c.has_b ? c.b : CorrelationKernel::delta0(c.kernel.dim()));
    const auto grid = c.t_grid.empty() ? default_grid(c.t_max, 8) : c.t_grid;
    const std::int64_t L = c.box_or(200);
    auto g2 = [&](double kap) { return gamma2(c.kernel, kap, B, L).value; };
    LyapunovTable table;
    for (int p = 2; p <= c.p_max; ++p) {
        LyapunovRow row;
        row.p = p;
        row.kappa = c.kappa;
        row.b0 = B.at_origin();
        row.bounds = gamma_p_bounds(p, c.kappa, row.b0, c.kernel.dim(), g2);
        const auto slope =
            fk_lyapunov_estimate(c.kernel, p, c.kappa, B, grid, c.n_paths, c.seed, c.threads);
        if (slope.ok) {
            row.mc_slope = slope.slope;
            row.mc_stderr = slope.slope_stderr;
        }
        table.rows.push_back(row);
    }
    ExperimentResult out;
    out.csv = table.to_csv();
    out.summary = json::parse(table.to_json());
    out.display = "Lyapunov bounds and FK slopes for p = 2.." + std::to_string(c.p_max);
    return out;
}

ExperimentResult exp_spectrum(const Config& c) {
    if (!c.has_v) throw std::invalid_argument("spectrum requires model.V");
    SchrodingerOp op(c.kernel, c.diffusion_scale, c.sigma, c.V,
                     BoxDomain(c.kernel.dim(), c.box_or(200), Boundary::killed));
    const auto rep = top_eigenvalue(op);
    ExperimentResult out;
    out.csv = "lambda_top,residual,found,stabilized,L_final\n";
    out.csv += fmt(rep.lambda_top);
    out.csv += ',';
    out.csv += fmt(rep.residual);
    out.csv += ',';
    out.csv += rep.positive_eigenvalue_found ? "1" : "0";
    out.csv += ',';
    out.csv += rep.stabilized ? "1" : "0";
    out.csv += ',';
    out.csv += std::to_string(rep.box_trace.back().first);
    out.csv += '\n';
    out.summary = json::parse(rep.to_json());
    out.aux_name = "eigenvector.csv";
    out.aux_body = rep.eigenvector_csv();
    out.display = "lambda_top = " + fmt(rep.lambda_top) +
                  (rep.positive_eigenvalue_found ? " (positive eigenvalue found)"
                                                 : " (no positive eigenvalue)");
    return out;
}

ExperimentResult exp_sigma_cr(const Config& c) {
    if (!c.has_v) throw std::invalid_argument("sigma-cr requires model.V");
    const auto r = sigma_cr(c.kernel, c.V, c.sigma_max, c.tol, c.grid(), 0.1, c.witness_box);
    ExperimentResult out;
    out.csv = "sigma_cr,bs_top,refused,none_below_max,below_sigma,below_found,above_sigma,above_found\n";
    out.csv += fmt(r.sigma_cr);
    out.csv += ',';
    out.csv += fmt(r.bs_top);
    out.csv += ',';
    out.csv += r.refused ? "1" : "0";
    out.csv += ',';
    out.csv += r.none_below_max ? "1" : "0";
    out.csv += ',';
    out.csv += fmt(r.below.sigma);
    out.csv += ',';
    out.csv += r.below.found ? "1" : "0";
    out.csv += ',';
    out.csv += fmt(r.above.sigma);
    out.csv += ',';
    out.csv += r.above.found ? "1" : "0";
    out.csv += '\n';
    json j;
    j["sigma_cr"] = r.sigma_cr;
    j["bs_top"] = r.bs_top;
    j["refused"] = r.refused;
    j["none_below_max"] = r.none_below_max;
    j["message"] = r.message;
    j["below"] = {{"sigma", r.below.sigma}, {"found", r.below.found}, {"lambda_top", r.below.lambda_top}};
    j["above"] = {{"sigma", r.above.sigma}, {"found", r.above.found}, {"lambda_top", r.above.lambda_top}};
    out.summary = j;
    out.display = r.refused ? r.message : ("sigma_cr = " + fmt(r.sigma_cr));
    return out;
}

ExperimentResult exp_bargmann(const Config& c) {
    if (!c.has_v) throw std::invalid_argument("bargmann requires model.V");
    const auto r = bargmann_quantities(c.kernel, c.V, c.sigma, c.alpha, c.grid());
    ExperimentResult out;
    out.csv = "sigma,alpha,s_raw,s_simplified,tail_exponent,richardson_delta\n";
    out.csv += fmt(c.sigma);
    out.csv += ',';
    out.csv += fmt(c.alpha);
    out.csv += ',';
    out.csv += fmt(r.s_raw);
    out.csv += ',';
    out.csv += fmt(r.s_simplified);
    out.csv += ',';
    out.csv += fmt(r.tail_exponent);
    out.csv += ',';
    out.csv += fmt(r.richardson_delta);
    out.csv += '\n';
    out.summary = {{"s_raw", r.s_raw},
                   {"s_simplified", r.s_simplified},
                   {"tail_exponent", r.tail_exponent},
                   {"richardson_delta", r.richardson_delta}};
    out.display = "S_raw = " + fmt(r.s_raw) + ", S_simplified = " + fmt(r.s_simplified);
    return out;
}

ExperimentResult exp_sigma0(const Config& c) {
    if (!c.has_v) throw std::invalid_argument("sigma0 requires model.V");
    const auto r = sigma0_uniqueness_bound(c.kernel, c.V, c.grid());
    ExperimentResult out;
    out.csv = "status,sigma0,symbol_integral,moment_sum\n";
    out.csv += r.infinite ? "infinite" : "finite";
    out.csv += ',';
    out.csv += fmt(r.sigma0);
    out.csv += ',';
    out.csv += fmt(r.symbol_integral);
    out.csv += ',';
    out.csv += fmt(r.moment_sum);
    out.csv += '\n';
    out.summary = {{"infinite", r.infinite},
                   {"sigma0", r.sigma0},
                   {"symbol_integral", r.symbol_integral},
                   {"moment_sum", r.moment_sum}};
    out.display = r.infinite ? "sigma0 = infinite (potential has no first moment mass)"
                             : ("sigma0 = " + fmt(r.sigma0));
    return out;
}

ExperimentResult exp_classify(const Config& c) {
    const SymbolFamily family(c.kernel.dim(), c.alpha, c.beta);
    const auto r = classify_recurrence(family, std::min(c.grid(), 128));
    ExperimentResult out;
    out.csv = "d,alpha,label,diagnostic_divergent\n";
    out.csv += std::to_string(family.dim);
    out.csv += ',';
    out.csv += fmt(family.alpha);
    out.csv += ',';
    out.csv += to_string(r.label);
    out.csv += ',';
    out.csv += r.diagnostic_divergent ? "1" : "0";
    out.csv += '\n';
    out.summary = {{"d", family.dim},
                   {"alpha", family.alpha},
                   {"label", to_string(r.label)},
                   {"diagnostic_divergent", r.diagnostic_divergent}};
    out.display = to_string(r.label);
    return out;
}

ExperimentResult exp_partition(const Config& c) {
    const auto s = build_partition(c.p);
    const auto rep = verify_partition(s);
    ExperimentResult out;
    out.csv = "group,i,j\n";
    for (std::size_t g = 0; g < s.groups.size(); ++g)
        for (const auto& [a, b] : s.groups[g]) {
            out.csv += std::to_string(g + 1);
            out.csv += ',';
            out.csv += std::to_string(std::min(a, b));
            out.csv += ',';
            out.csv += std::to_string(std::max(a, b));
            out.csv += '\n';
        }
    out.summary = json::parse(s.to_json());
    out.summary["valid"] = rep.valid;
    out.summary["pair_count"] = rep.pair_count;
    out.display = s.display() + (rep.valid ? "valid: " : "INVALID: ") + rep.message;
    return out;
}

ExperimentResult exp_zero_mean(const Config& c) {
    if (!c.has_v) throw std::invalid_argument("zero-mean-1d requires model.V");
    const auto r = zero_mean_1d_construct(c.V, c.sigma, c.site_cap);
    ExperimentResult out;
    out.csv = "sigma,m,Q,eps_delta,eps_slope,eps1,eps2,c2_plus,c2_minus,predicted,positive_found\n";
    out.csv += fmt(r.sigma);
    out.csv += ',';
    out.csv += std::to_string(r.m);
    out.csv += ',';
    out.csv += fmt(r.Q);
    out.csv += ',';
    out.csv += fmt(r.eps_delta);
    out.csv += ',';
    out.csv += fmt(r.eps_slope);
    out.csv += ',';
    out.csv += fmt(r.eps1);
    out.csv += ',';
    out.csv += fmt(r.eps2);
    out.csv += ',';
    out.csv += fmt(r.c2_plus);
    out.csv += ',';
    out.csv += fmt(r.c2_minus);
    out.csv += ',';
    out.csv += fmt(r.predicted);
    out.csv += ',';
    out.csv += r.positive_found ? "1" : "0";
    out.csv += '\n';
    out.summary = {{"sigma", r.sigma},
                   {"m", r.m},
                   {"Q", r.Q},
                   {"eps_delta", r.eps_delta},
                   {"eps_slope", r.eps_slope},
                   {"eps1", r.eps1},
                   {"eps2", r.eps2},
                   {"c2_plus", r.c2_plus},
                   {"c2_minus", r.c2_minus},
                   {"predicted", r.predicted},
                   {"positive_found", r.positive_found}};
    std::string phi = "x,phi\n";
    for (std::int64_t x = -r.m; x <= r.m; ++x) {
        phi += std::to_string(x);
        phi += ',';
        phi += fmt(r.phi[static_cast<std::size_t>(x + r.m)]);
        phi += '\n';
    }
    out.aux_name = "phi.csv";
    out.aux_body = std::move(phi);
    out.display = "Q = " + fmt(r.Q) + (r.positive_found ? " > 0: trial function certifies a bound state"
                                                        : " <= 0: no certificate at this sigma");
    return out;
}

ExperimentResult exp_scaling_check(const Config& c) {
    const Correlator B = c.has_v ? c.V : Correlator::from_b(c.has_b ? c.b : CorrelationKernel::delta0(c.kernel.dim()));
    const BoxDomain box(c.kernel.dim(), c.box_or(64), Boundary::periodic);
    const auto r = scaling_check(c.kernel, c.kappa, c.noise_factor, B, c.t_max, box);
    ExperimentResult out;
    out.csv = "alpha,t,lhs,rhs,residual\n";
    out.csv += fmt(c.noise_factor);
    out.csv += ',';
    out.csv += fmt(c.t_max);
    out.csv += ',';
    out.csv += fmt(r.lhs);
    out.csv += ',';
    out.csv += fmt(r.rhs);
    out.csv += ',';
    out.csv += fmt(r.residual);
    out.csv += '\n';
    out.summary = {{"alpha", c.noise_factor}, {"t", c.t_max}, {"lhs", r.lhs}, {"rhs", r.rhs},
                   {"residual", r.residual}};
    out.display = "scaling residual = " + fmt(r.residual);
    return out;
}

ExperimentResult dispatch(const Config& c) {
    if (c.experiment == "simulate") return exp_simulate(c);
    if (c.experiment == "moments") return exp_moments(c);
    if (c.experiment == "lyapunov") return exp_lyapunov(c);
    if (c.experiment == "spectrum") return exp_spectrum(c);
    if (c.experiment == "sigma-cr") return exp_sigma_cr(c);
    if (c.experiment == "bargmann") return exp_bargmann(c);
    if (c.experiment == "sigma0") return exp_sigma0(c);
    if (c.experiment == "classify") return exp_classify(c);
    if (c.experiment == "partition") return exp_partition(c);
    if (c.experiment == "zero-mean-1d") return exp_zero_mean(c);
    if (c.experiment == "scaling-check") return exp_scaling_check(c);
    throw std::invalid_argument("unknown experiment");
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << body;
}

}  // namespace

RunOutput run_experiment(const std::string& config_json, const std::string& output_dir) {
    RunOutput out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const Config c = parse_config(config_json);
        const auto res = dispatch(c);
        fs::create_directories(output_dir);
        const fs::path dir(output_dir);
        write_file(dir / "results.csv", res.csv);
        out.files.push_back("results.csv");
        write_file(dir / "results.json", res.summary.dump(2) + "\n");
        out.files.push_back("results.json");
        if (!res.aux_name.empty()) {
            write_file(dir / res.aux_name, res.aux_body);
            out.files.push_back(res.aux_name);
        }
        json manifest;
        manifest["config"] = c.raw;
        manifest["config_hash"] = hex64(fnv64(c.raw.dump()));
        manifest["seed"] = c.seed;
        manifest["version"] = kVersion;
        manifest["wall_time_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_file(dir / "manifest.json", manifest.dump(2) + "\n");
        out.files.push_back("manifest.json");
        out.summary = res.display;
    } catch (const std::invalid_argument& e) {
        out.exit_code = 2;
        out.message = e.what();
    } catch (const std::exception& e) {
        out.exit_code = 1;
        out.message = e.what();
    }
    return out;
}

RunOutput run_sweep(const std::string& config_json, const std::string& parameter,
                    const std::vector<std::string>& values, const std::string& output_dir) {
    RunOutput out;
    json base;
    try {
        base = json::parse(config_json);
    } catch (const std::exception& e) {
        out.exit_code = 2;
        out.message = std::string("config is not valid JSON: ") + e.what();
        return out;
    }
    if (values.empty()) {
        out.exit_code = 2;
        out.message = "sweep needs at least one value";
        return out;
    }
    // resolve the dotted path
    std::vector<std::string> keys;
    std::size_t pos = 0;
    while (pos != std::string::npos) {
        const auto dot = parameter.find('.', pos);
        keys.push_back(parameter.substr(pos, dot == std::string::npos ? dot : dot - pos));
        pos = dot == std::string::npos ? dot : dot + 1;
    }

    std::string combined;
    std::string header;
    int failures = 0;
    fs::create_directories(output_dir);
    for (const auto& value : values) {
        json cfg = base;
        json* node = &cfg;
        for (std::size_t i = 0; i + 1 < keys.size(); ++i) node = &((*node)[keys[i]]);
        json parsed_value;
        try {
            parsed_value = json::parse(value);
        } catch (...) {
            parsed_value = value;  // plain string value
        }
        (*node)[keys.back()] = parsed_value;
        const std::string subdir = output_dir + "/" + parameter + "=" + value;
        const auto r = run_experiment(cfg.dump(), subdir);
        if (r.exit_code != 0) {
            ++failures;
            combined += value + ",ERROR," + r.message + "\n";
            continue;
        }
        std::ifstream f(fs::path(subdir) / "results.csv");
        std::string line;
        bool first = true;
        while (std::getline(f, line)) {
            if (first) {
                if (header.empty()) {
                    header = "sweep_value,status," + line + "\n";
                    combined = header + combined;
                }
                first = false;
                continue;
            }
            if (!line.empty()) combined += value + ",ok," + line + "\n";
        }
    }
    write_file(fs::path(output_dir) / "combined.csv", combined);
    out.files.push_back("combined.csv");
    out.summary = "swept " + parameter + " over " + std::to_string(values.size()) + " values (" +
                  std::to_string(failures) + " failures)";
    return out;
}

}  // namespace pam
