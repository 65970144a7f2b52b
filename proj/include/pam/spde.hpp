#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pam/noise.hpp"

namespace pam {

enum class Scheme { ito_euler, exp_split };

// One lattice Ito equation du = kappa*L u dt + u dW on a periodic box.
// An absent noise kernel degenerates to the deterministic heat flow.
struct SpdeConfig {
    JumpKernel kernel;
    std::optional<CorrelationKernel> noise;
    double kappa;
    BoxDomain domain;
    double dt;
    Scheme scheme;

    SpdeConfig(JumpKernel k, std::optional<CorrelationKernel> b, double kap, BoxDomain dom,
               double step, Scheme s);

    double b0() const { return b0_; }

private:
    double b0_;
};

// Precomputes the periodic generator stencil and the exact diffusion
// substep kernel row for exp_split; reusable across members and steps.
struct SpdeWorkspace {
    std::vector<double> buf;
};

class SpdeStepper {
public:
    explicit SpdeStepper(const SpdeConfig& cfg);
    // advances by cfg.dt, drawing the increment from gen; the workspace makes
    // concurrent stepping of separate members safe
    void step(LatticeField& u, NoiseGenerator& gen, SpdeWorkspace& ws) const;
    void step(LatticeField& u, NoiseGenerator& gen) const;
    const SpdeConfig& config() const { return cfg_; }

private:
    void apply_generator(const std::vector<double>& in, std::vector<double>& out) const;
    void convolve_heat(std::vector<double>& u, std::vector<double>& scratch) const;

    SpdeConfig cfg_;
    // generator stencil (periodic): offsets as wrapped index shifts per entry
    std::vector<std::vector<std::int32_t>> gen_shift_;
    std::vector<double> gen_weight_;
    // exp(dt kappa L) row, truncated and renormalized to row sum 1
    std::vector<std::vector<std::int32_t>> heat_shift_;
    std::vector<double> heat_weight_;
};

// single step per the configured scheme (convenience wrapper)
LatticeField step(const LatticeField& state, const SpdeConfig& cfg, NoiseGenerator& gen);

struct EnsembleStats {
    std::vector<double> times;
    int p_max = 1;
    std::int64_t n_members = 0;
    // estimate[t][p-1], stderr_[t][p-1]: spatially and ensemble averaged <u^p>
    std::vector<std::vector<double>> estimate;
    std::vector<std::vector<double>> stderr_;

    std::string to_csv() const;  // columns: time,p,estimate,stderr,n_members
};

// Independent members seeded by (base_seed, member index); statistics are
// reduced in member order so results do not depend on thread count.
EnsembleStats run_ensemble(const SpdeConfig& cfg, double t_max, std::int64_t n_members, int p_max,
                           std::uint64_t base_seed, int n_checkpoints = 8, int threads = 0);

}  // namespace pam
