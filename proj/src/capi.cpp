#include "pamlab.h"

#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "pam/experiments.hpp"
#include "pam/moments.hpp"
#include "pam/spectral.hpp"
#include "pam/version.hpp"
#include "pam/walk.hpp"

struct pam_kernel {
    pam::JumpKernel impl;
};
struct pam_correlator {
    pam::Correlator impl;
};

namespace {

thread_local std::string g_last_error;

pam_status fail(pam_status code, const char* what) {
    g_last_error = what;
    return code;
}

template <class F>
pam_status guard(F&& f) {
    try {
        f();
        return PAM_OK;
    } catch (const std::invalid_argument& e) {
        return fail(PAM_ERR_CONFIG, e.what());
    } catch (const std::exception& e) {
        return fail(PAM_ERR_NUMERIC, e.what());
    }
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

pam::Site site_from(const int64_t* x, int dim) {
    pam::Site s{};
    for (int i = 0; i < dim; ++i) s[static_cast<std::size_t>(i)] = x[i];
    return s;
}

}  // namespace

extern "C" {

const char* pam_version(void) { return pam::kVersion; }

const char* pam_last_error(void) { return g_last_error.c_str(); }

void pam_string_free(char* s) { delete[] s; }

pam_status pam_kernel_create_json(const char* json, pam_kernel** out) {
    if (!json || !out) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] { *out = new pam_kernel{pam::JumpKernel::from_json(json)}; });
}

pam_status pam_kernel_create_nn(int dim, pam_kernel** out) {
    if (!out) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] { *out = new pam_kernel{pam::JumpKernel::nearest_neighbor(dim)}; });
}

pam_status pam_kernel_to_json(const pam_kernel* k, char** out) {
    if (!k || !out) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] { *out = dup_string(k->impl.to_json()); });
}

void pam_kernel_free(pam_kernel* k) { delete k; }

pam_status pam_correlator_from_b_json(const char* b_json, pam_correlator** out) {
    if (!b_json || !out) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] {
        *out = new pam_correlator{pam::Correlator::from_b(pam::CorrelationKernel::from_json(b_json))};
    });
}

pam_status pam_correlator_create_json(const char* v_json, pam_correlator** out) {
    if (!v_json || !out) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] { *out = new pam_correlator{pam::Correlator::from_json(v_json)}; });
}

pam_status pam_correlator_to_json(const pam_correlator* c, char** out) {
    if (!c || !out) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] { *out = dup_string(c->impl.to_json()); });
}

void pam_correlator_free(pam_correlator* c) { delete c; }

pam_status pam_symbol_a(const pam_kernel* k, const double* kvec, int dim, double* out) {
    if (!k || !kvec || !out) return fail(PAM_ERR_NULL, "null argument");
    if (dim != k->impl.dim()) return fail(PAM_ERR_CONFIG, "dimension mismatch");
    return guard([&] { *out = k->impl.symbol_a(kvec); });
}

pam_status pam_symbol_min(const pam_kernel* k, int grid_n, double* out) {
    if (!k || !out) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] { *out = pam::symbol_min(k->impl, grid_n); });
}

pam_status pam_spectral_density(const pam_correlator* c, const double* kvec, int dim, double* out) {
    if (!c || !kvec || !out) return fail(PAM_ERR_NULL, "null argument");
    if (dim != c->impl.dim()) return fail(PAM_ERR_CONFIG, "dimension mismatch");
    return guard([&] { *out = c->impl.spectral_density(kvec); });
}

pam_status pam_heat_kernel(const pam_kernel* k, double kappa, double rate_multiplier, double t,
                           const int64_t* x, int grid_n, double* out) {
    if (!k || !x || !out) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] {
        *out = pam::heat_kernel(k->impl, kappa, rate_multiplier, t, site_from(x, k->impl.dim()),
                                grid_n);
    });
}

pam_status pam_green_diagonal(const pam_kernel* k, double lambda, int grid_n, double* out) {
    if (!k || !out) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] { *out = pam::green_diagonal(k->impl, lambda, grid_n); });
}

pam_status pam_green_zero(const pam_kernel* k, const int64_t* x, int grid_n, double* out) {
    if (!k || !x || !out) return fail(PAM_ERR_NULL, "null argument");
    pam_status st = PAM_OK;
    const pam_status inner = guard([&] {
        const auto g = pam::green_zero(k->impl, site_from(x, k->impl.dim()), grid_n);
        if (g.divergent) {
            st = fail(PAM_DIVERGENT, "zero-energy Green function diverges (recurrent kernel)");
            return;
        }
        *out = g.value;
    });
    return inner != PAM_OK ? inner : st;
}

pam_status pam_partition_build_json(int p, char** out) {
    if (!out) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] { *out = dup_string(pam::build_partition(p).to_json()); });
}

pam_status pam_partition_display(int p, char** out) {
    if (!out) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] { *out = dup_string(pam::build_partition(p).display()); });
}

pam_status pam_partition_verify_json(const char* schedule_json, char** report_json) {
    if (!schedule_json || !report_json) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] {
        const auto j = nlohmann::json::parse(schedule_json);
        pam::PartitionSchedule s;
        s.p = j.at("p").get<int>();
        for (const auto& g : j.at("groups")) {
            std::vector<std::pair<int, int>> group;
            for (const auto& pr : g) group.emplace_back(pr[0].get<int>(), pr[1].get<int>());
            s.groups.push_back(std::move(group));
        }
        const auto rep = pam::verify_partition(s);
        nlohmann::json out{{"valid", rep.valid}, {"message", rep.message},
                           {"pair_count", rep.pair_count}};
        *report_json = dup_string(out.dump());
    });
}

pam_status pam_solve_m2_origin(const pam_kernel* k, const pam_correlator* b_corr, double kappa,
                               const double* t_grid, int n_t, int64_t box_radius, double* out) {
    if (!k || !b_corr || !t_grid || !out) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] {
        const pam::BoxDomain box(k->impl.dim(), box_radius, pam::Boundary::periodic);
        const std::vector<double> grid(t_grid, t_grid + n_t);
        const auto fields = pam::solve_m2(k->impl, kappa, b_corr->impl, grid, box);
        const pam::Site origin{};
        for (int i = 0; i < n_t; ++i) out[i] = fields[static_cast<std::size_t>(i)][box.index_of(origin)];
    });
}

pam_status pam_gamma2(const pam_kernel* k, const pam_correlator* b_corr, double kappa,
                      int64_t box_radius, double* out) {
    if (!k || !b_corr || !out) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] { *out = pam::gamma2(k->impl, kappa, b_corr->impl, box_radius).value; });
}

pam_status pam_gamma_p_bounds_json(const pam_kernel* k, const pam_correlator* b_corr, int p,
                                   double kappa, int64_t box_radius, char** out) {
    if (!k || !b_corr || !out) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] {
        auto g2 = [&](double kap) { return pam::gamma2(k->impl, kap, b_corr->impl, box_radius).value; };
        const auto b = pam::gamma_p_bounds(p, kappa, b_corr->impl.at_origin(), k->impl.dim(), g2);
        nlohmann::json j{{"p", b.p},
                         {"crude_upper", b.crude_upper},
                         {"crude_lower_dkappa", b.crude_lower_dkappa},
                         {"crude_lower", b.crude_lower},
                         {"refined_upper", b.refined_upper},
                         {"refined_lower_2dkappa", b.refined_lower_2dkappa},
                         {"refined_lower", b.refined_lower},
                         {"gamma2_kp", b.gamma2_kp},
                         {"gamma2_kp1", b.gamma2_kp1}};
        *out = dup_string(j.dump());
    });
}

pam_status pam_fk_moment(const pam_kernel* k, const pam_correlator* b_corr, int p, double kappa,
                         double t, int64_t n_paths, uint64_t seed, int threads, double* log_estimate,
                         double* log_stderr) {
    if (!k || !b_corr || !log_estimate || !log_stderr) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] {
        const auto est =
            pam::fk_moment_estimate(k->impl, p, kappa, b_corr->impl, t, n_paths, seed, threads);
        *log_estimate = est.log_estimate;
        *log_stderr = est.log_stderr;
    });
}

pam_status pam_fk_lyapunov(const pam_kernel* k, const pam_correlator* b_corr, int p, double kappa,
                           const double* t_grid, int n_t, int64_t n_paths, uint64_t seed,
                           int threads, double* slope, double* slope_stderr) {
    if (!k || !b_corr || !t_grid || !slope || !slope_stderr)
        return fail(PAM_ERR_NULL, "null argument");
    pam_status st = PAM_OK;
    const pam_status inner = guard([&] {
        const std::vector<double> grid(t_grid, t_grid + n_t);
        const auto r =
            pam::fk_lyapunov_estimate(k->impl, p, kappa, b_corr->impl, grid, n_paths, seed, threads);
        if (!r.ok) {
            st = fail(PAM_ERR_NUMERIC, r.message.c_str());
            return;
        }
        *slope = r.slope;
        *slope_stderr = r.slope_stderr;
    });
    return inner != PAM_OK ? inner : st;
}

pam_status pam_top_eigenvalue_json(const pam_kernel* k, const pam_correlator* v,
                                   double diffusion_scale, double sigma, int64_t box_radius,
                                   char** report_json) {
    if (!k || !v || !report_json) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] {
        const pam::SchrodingerOp op(k->impl, diffusion_scale, sigma, v->impl,
                                    pam::BoxDomain(k->impl.dim(), box_radius, pam::Boundary::killed));
        *report_json = dup_string(pam::top_eigenvalue(op).to_json());
    });
}

pam_status pam_count_positive_eigenvalues(const pam_kernel* k, const pam_correlator* v,
                                          double diffusion_scale, double sigma, int64_t box_radius,
                                          int64_t* count, int* stable) {
    if (!k || !v || !count) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] {
        const pam::SchrodingerOp op(k->impl, diffusion_scale, sigma, v->impl,
                                    pam::BoxDomain(k->impl.dim(), box_radius, pam::Boundary::killed));
        const auto r = pam::count_positive_eigenvalues(op);
        *count = r.count;
        if (stable) *stable = r.stable ? 1 : 0;
    });
}

pam_status pam_sigma_cr_json(const pam_kernel* k, const pam_correlator* v, double sigma_max,
                             double tol, int grid_n, char** result_json) {
    if (!k || !v || !result_json) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] {
        const auto r = pam::sigma_cr(k->impl, v->impl, sigma_max, tol, grid_n);
        nlohmann::json j{{"refused", r.refused},
                         {"none_below_max", r.none_below_max},
                         {"message", r.message},
                         {"sigma_cr", r.sigma_cr},
                         {"bs_top", r.bs_top},
                         {"below", {{"sigma", r.below.sigma}, {"found", r.below.found}}},
                         {"above", {{"sigma", r.above.sigma}, {"found", r.above.found}}}};
        *result_json = dup_string(j.dump());
    });
}

pam_status pam_bargmann(const pam_kernel* k, const pam_correlator* v, double sigma, double alpha,
                        int grid_n, double* s_raw, double* s_simplified) {
    if (!k || !v || !s_raw || !s_simplified) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] {
        const auto r = pam::bargmann_quantities(k->impl, v->impl, sigma, alpha, grid_n);
        *s_raw = r.s_raw;
        *s_simplified = r.s_simplified;
    });
}

pam_status pam_sigma0(const pam_kernel* k, const pam_correlator* v, int grid_n, double* sigma0,
                      int* is_infinite) {
    if (!k || !v || !sigma0 || !is_infinite) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] {
        const auto r = pam::sigma0_uniqueness_bound(k->impl, v->impl, grid_n);
        *is_infinite = r.infinite ? 1 : 0;
        *sigma0 = r.sigma0;
    });
}

pam_status pam_classify(int dim, double alpha, char* label_out) {
    if (!label_out) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] {
        const auto r = pam::classify_recurrence(pam::SymbolFamily(dim, alpha), 64);
        std::strncpy(label_out, pam::to_string(r.label), 15);
        label_out[15] = '\0';
    });
}

pam_status pam_zero_mean_1d_json(const pam_correlator* v, double sigma, char** report_json) {
    if (!v || !report_json) return fail(PAM_ERR_NULL, "null argument");
    return guard([&] {
        const auto r = pam::zero_mean_1d_construct(v->impl, sigma);
        nlohmann::json j{{"sigma", r.sigma},
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
        *report_json = dup_string(j.dump());
    });
}

pam_status pam_run_experiment(const char* config_json, const char* output_dir, char** summary) {
    if (!config_json || !output_dir) return fail(PAM_ERR_NULL, "null argument");
    const auto r = pam::run_experiment(config_json, output_dir);
    if (r.exit_code != 0) {
        g_last_error = r.message;
        return r.exit_code == 2 ? PAM_ERR_CONFIG : PAM_ERR_NUMERIC;
    }
    if (summary) *summary = dup_string(r.summary);
    return PAM_OK;
}

pam_status pam_run_sweep(const char* config_json, const char* parameter, const char* values_json,
                         const char* output_dir, char** summary) {
    if (!config_json || !parameter || !values_json || !output_dir)
        return fail(PAM_ERR_NULL, "null argument");
    std::vector<std::string> values;
    try {
        const auto j = nlohmann::json::parse(values_json);
        for (const auto& v : j) values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    } catch (const std::exception& e) {
        return fail(PAM_ERR_CONFIG, e.what());
    }
    const auto r = pam::run_sweep(config_json, parameter, values, output_dir);
    if (r.exit_code != 0) {
        g_last_error = r.message;
        return r.exit_code == 2 ? PAM_ERR_CONFIG : PAM_ERR_NUMERIC;
    }
    if (summary) *summary = dup_string(r.summary);
    return PAM_OK;
}

}  // extern "C"
