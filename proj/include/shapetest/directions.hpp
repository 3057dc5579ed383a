#pragma once

// Test directions T_n, blockwise polynomial nuisance spaces V_n, and the
// projection / studentization machinery shared by all test variants.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shapetest/cones.hpp"
#include "shapetest/design.hpp"
#include "shapetest/partition.hpp"

namespace shapetest {

enum class Variant { Positivity, LocalMeans, Convexity, LocalGradients, DiffIneq };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// Smallest scale carrying directions: 1 for single-block variants,
// 2 for block pairs, 3 for block triples.
int variant_min_scale(Variant v);

struct VariantConfig {
    Variant variant = Variant::Positivity;
    int n = 0;
    int ell_n = 0;
    int r = 0;        // DiffIneq order (LocalGradients behaves as r = 1)
    RFunction R;      // DiffIneq weight (LocalGradients: R = 1)

    static VariantConfig positivity(int n, int ell_n);
    static VariantConfig local_means(int n, int ell_n);
    static VariantConfig convexity(int n, int ell_n);
    static VariantConfig local_gradients(int n, int ell_n);
    static VariantConfig diff_ineq(int n, int ell_n, int r, RFunction R);

    // "lm", "positivity", "diffineq:r=2:R=const1", ...
    std::string id() const;
    // The cone this variant tests, for membership checks.
    ConeSpec cone(const DesignGrid& x) const;
    // True when the null calibration depends on the design points and not
    // just on (n, ell_n): block means of x enter the convexity directions,
    // and the LG/DiffIneq directions are built from x itself.
    bool design_dependent() const;
};

// ell_n = floor(n / (2(r+1))), the default scale count for DiffIneq, R = 1.
int default_ell_n_diff_ineq(int n, int r);

// One orthonormal basis vector of V_n, supported on a contiguous run of
// design indices starting at `lo` (0-based).
struct BasisVec {
    int lo = 0;
    std::vector<double> v;
};

class NuisanceSpace {
public:
    NuisanceSpace() = default;
    NuisanceSpace(int n, std::vector<BasisVec> basis);

    int n() const { return n_; }
    int dim() const { return static_cast<int>(basis_.size()); }
    const std::vector<BasisVec>& basis() const { return basis_; }

    // out = Pi_V y (out may alias nothing; length n).
    void project(std::span<const double> y, std::span<double> out) const;
    // (||y - Pi_V y||, sigma_hat = ||.||/sqrt(n - d)); never throws on a
    // zero residual, callers decide.
    std::pair<double, double> residual_and_sigma(std::span<const double> y) const;
    double residual_norm(std::span<const double> y) const;

private:
    int n_ = 0;
    std::vector<BasisVec> basis_;
};

// Orthonormal blockwise polynomial basis per the variant:
//   constants           Positivity / LocalMeans / Convexity  (d = ell_n)
//   {1, x}              LocalGradients                       (d = 2 ell_n)
//   {1, ..., x^r}       DiffIneq with R = 1                  (d = (r+1) ell_n)
//   plus R*{1,...,x^r}  DiffIneq, general R
// Modified Gram-Schmidt with one reorthogonalization pass; rank tolerance
// 1e-10 relative to column norms.  Throws on rank deficiency (block too
// small), d >= n, or d > n/2 for LG/DiffIneq.
NuisanceSpace build_nuisance_space(const VariantConfig& cfg, const PartitionFamily& family,
                                   const DesignGrid& x);

struct Direction {
    int scale = 0;                // ell
    std::array<int, 3> tag{};     // block indices at that scale, 1-based
    int tag_size = 0;
    std::vector<std::pair<int, double>> coeffs;  // (0-based index, value)

    double dot(std::span<const double> y) const {
        double s = 0.0;
        for (const auto& [i, c] : coeffs) s += c * y[static_cast<std::size_t>(i)];
        return s;
    }
};

struct DirectionSet {
    VariantConfig cfg;
    std::vector<int> scales;          // ascending
    std::vector<Direction> dirs;      // sorted by (scale, tag)
};

// Unit directions per variant, grouped by scale:
//   Positivity:   -(1/sqrt|J|) sum_{j in J} e_j
//   LocalMeans:   N_ij (avg_{J_i} - avg_{J_j}), i < j
//   Convexity:    N_ijk (avg_{J_j} - lam avg_{J_i} - (1-lam) avg_{J_k})
//   LG/DiffIneq:  -R*(x_J^r - Pi_{X_J} x_J^r) / gamma_J
// Throws when gamma_J degenerates (block polynomial degeneracy).
DirectionSet build_directions(const VariantConfig& cfg, const PartitionFamily& family,
                              const DesignGrid& x);

// (residual norm, sigma_hat); zero residual is legal here.
std::pair<double, double> project_residual(std::span<const double> y, const NuisanceSpace& V);

// sqrt(n - d) <y, t> / ||y - Pi_V y|| for every direction.
// Throws ZeroResidualError when the residual vanishes.
std::vector<double> studentized_scores(std::span<const double> y, const DirectionSet& dirs,
                                       const NuisanceSpace& V);

// Basis (not normalized) of the cone's lineality space W: empty for
// positivity, {1} for the monotone variants, {1, x} for convexity,
// {(1/R)*x^k, k < r} for DiffIneq.
std::vector<std::vector<double>> lineality_basis(const VariantConfig& cfg, const DesignGrid& x);

}  // namespace shapetest
