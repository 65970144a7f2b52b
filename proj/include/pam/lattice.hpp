#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pam {

constexpr int kMaxDim = 4;

// Lattice vector, padded with zeros beyond `dim`.
using Site = std::array<std::int64_t, kMaxDim>;

inline Site make_site(std::initializer_list<std::int64_t> v) {
    Site s{};
    int i = 0;
    for (auto x : v) s[static_cast<std::size_t>(i++)] = x;
    return s;
}

// Symmetric normalized jump distribution a(z) on Z^d, a(0) = 0, sum = 1,
// a(z) > 0 for |z| = 1. Stored canonically over half the support
// (lexicographically positive representatives) so equality is structural.
class JumpKernel {
public:
    struct Entry {
        Site z;
        double weight;  // weight of z (mirror -z carries the same weight)
    };

    JumpKernel(int dim, const std::vector<std::pair<Site, double>>& entries);

    static JumpKernel nearest_neighbor(int dim);

    int dim() const { return dim_; }
    const std::vector<Entry>& half_support() const { return half_; }
    // full support, mirrors included
    std::vector<std::pair<Site, double>> entries() const;
    std::int64_t support_radius() const { return radius_; }

    // a_hat(k) = sum_z a(z) cos(k.z), in [-1, 1]
    double symbol_a(const double* k) const;
    // L_hat(k) = a_hat(k) - 1 <= 0
    double symbol(const double* k) const { return symbol_a(k) - 1.0; }

    std::string to_json() const;
    static JumpKernel from_json(const std::string& text);

private:
    int dim_;
    std::vector<Entry> half_;
    std::int64_t radius_ = 0;
};

// Real finite-support weight kernel b(.) used to color the driving noise.
class CorrelationKernel {
public:
    CorrelationKernel(int dim, const std::vector<std::pair<Site, double>>& entries);

    static CorrelationKernel delta0(int dim) {
        return CorrelationKernel(dim, {{Site{}, 1.0}});
    }

    int dim() const { return dim_; }
    const std::vector<std::pair<Site, double>>& entries() const { return entries_; }
    double value(const Site& z) const;
    std::int64_t support_radius() const { return radius_; }

    std::string to_json() const;
    static CorrelationKernel from_json(const std::string& text);

private:
    int dim_;
    std::vector<std::pair<Site, double>> entries_;  // sorted by site
    std::int64_t radius_ = 0;
};

// Spatial correlator B(x) = sum_z b(x-z)b(-z), or a general finite-support
// real potential V(x). Symmetry and B(0) = max|B| hold on the from_b path.
class Correlator {
public:
    static Correlator from_b(const CorrelationKernel& b);
    // general potential; symmetry not required
    static Correlator potential(int dim, const std::vector<std::pair<Site, double>>& entries);
    static Correlator delta0(int dim) { return potential(dim, {{Site{}, 1.0}}); }
    static Correlator zero(int dim) { return potential(dim, {}); }

    int dim() const { return dim_; }
    const std::vector<std::pair<Site, double>>& entries() const { return entries_; }
    double value(const Site& x) const;
    double at_origin() const { return value(Site{}); }
    double max_abs() const;
    double sum() const;
    std::int64_t support_radius() const { return radius_; }
    bool is_symmetric() const;
    bool positive_somewhere() const;

    // B_hat(k) = sum_x B(x) e^{ikx}; real for symmetric B
    double spectral_density(const double* k) const;

    std::string to_json() const;
    static Correlator from_json(const std::string& text);

private:
    Correlator(int dim, std::vector<std::pair<Site, double>> entries);
    int dim_;
    std::vector<std::pair<Site, double>> entries_;  // sorted by site
    std::int64_t radius_ = 0;
};

enum class Boundary { periodic, killed };

// Box {|x_i| <= L} with periodic wrap or killed (Dirichlet) truncation.
class BoxDomain {
public:
    BoxDomain(int dim, std::int64_t radius, Boundary bc);

    int dim() const { return dim_; }
    std::int64_t radius() const { return radius_; }
    Boundary boundary() const { return bc_; }
    std::int64_t side() const { return 2 * radius_ + 1; }
    std::int64_t n_sites() const { return n_sites_; }

    std::int64_t index_of(const Site& x) const;
    Site coord_of(std::int64_t index) const;
    // index of x+z under the boundary rule; nullopt when the jump is killed
    std::optional<std::int64_t> shifted(std::int64_t index, const Site& z) const;

    bool operator==(const BoxDomain& o) const {
        return dim_ == o.dim_ && radius_ == o.radius_ && bc_ == o.bc_;
    }

private:
    int dim_;
    std::int64_t radius_;
    Boundary bc_;
    std::int64_t n_sites_;
    std::array<std::int64_t, kMaxDim> stride_{};
};

// Real field over a box; plain value type.
struct LatticeField {
    BoxDomain domain;
    std::vector<double> values;

    LatticeField() : LatticeField(BoxDomain(1, 1, Boundary::killed)) {}
    explicit LatticeField(const BoxDomain& d, double fill = 0.0)
        : domain(d), values(static_cast<std::size_t>(d.n_sites()), fill) {}

    double& operator[](std::int64_t i) { return values[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return values[static_cast<std::size_t>(i)]; }
    bool all_finite() const;
};

// --- Torus quadrature -------------------------------------------------------
// Midpoint rule on the uniform grid_n^d grid of T^d = [-pi,pi]^d. Nodes avoid
// k = 0 for even grid_n; node weight folds the (2pi)^-d normalization, so a
// plain mean over nodes approximates (2pi)^-d * integral.
void for_each_torus_node(int dim, int grid_n, const std::function<void(const double*)>& fn);

double symbol_min(const JumpKernel& kernel, int grid_n);

// Precomputed symbol values on the quadrature grid, for repeated t sweeps.
class SymbolGrid {
public:
    SymbolGrid(const JumpKernel& kernel, int grid_n);
    // (2pi)^-d int exp(rate*symbol*t) cos(k.x) dk
    double heat(double rate, double t, const Site& x) const;
    double heat_diag(double rate, double t) const;  // x = 0
    int grid_n() const { return grid_n_; }
    int dim() const { return dim_; }

private:
    int dim_;
    int grid_n_;
    std::vector<double> symbol_;      // L_hat at nodes
    std::vector<double> nodes_;       // node coordinates, dim-major
};

// p(t,x,0) for the rate kappa*rate_multiplier walk generated by kappa*L.
double heat_kernel(const JumpKernel& kernel, double kappa, double rate_multiplier, double t,
                   const Site& x, int grid_n);

// R_lambda(0) = (2pi)^-d int dk / (lambda + 1 - a_hat(k)), lambda > 0.
double green_diagonal(const JumpKernel& kernel, double lambda, int grid_n);

struct GreenZeroResult {
    double value = 0.0;              // extrapolated limit (transient case)
    bool divergent = false;          // lambda=0 integral diverges (recurrent)
    std::vector<std::pair<int, double>> trace;  // (grid_n, raw midpoint value)
};

// lambda -> 0+ limit of R_lambda(x), by dyadic grid refinement with
// geometric (Aitken) extrapolation; flags divergence instead of a value.
GreenZeroResult green_zero(const JumpKernel& kernel, const Site& x, int grid_n);

struct HeatTailResult {
    double value = 0.0;      // int_T^inf p(t,0,0) dt
    double tail_fraction = 0.0;
    double tail_exponent = 0.0;  // fitted q in p ~ c t^-q
    double richardson_delta = 0.0;  // change under doubling the far cutoff
};

// Time-domain quadrature of the on-diagonal heat kernel with algebraic tail
// extrapolation; requires a transient kernel (fitted q > 1).
HeatTailResult heat_tail_integral(const SymbolGrid& grid, double T);

}  // namespace pam
