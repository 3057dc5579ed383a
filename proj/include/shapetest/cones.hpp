#pragma once

// Finite-dimensional shape cones: nonnegativity, monotone differences,
// convexity triples, and determinant forms for differential inequalities.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "shapetest/design.hpp"

namespace shapetest {

enum class ConeKind { NonNegative, NonDecreasing, NonConcave, DiffIneq };

// Weight function R for the DiffIneq cone; must not vanish on [0,1].
// `name` is the registry name, `a` its parameter (ignored by const1).
struct RFunction {
    std::string name;
    double a = 0.0;
    std::function<double(double)> fn;

    double operator()(double x) const { return fn(x); }
};

// Built-in registry: "const1" (R = 1), "exp" (R(x) = exp(a x)),
// "neg-exp" (R(x) = -exp(a x)).  Unknown names throw.
RFunction make_rfunction(const std::string& name, double a = 1.0);

struct ConeSpec {
    ConeKind kind = ConeKind::NonNegative;
    int r = 0;       // DiffIneq derivative order
    RFunction R;     // DiffIneq weight

    static ConeSpec non_negative();
    static ConeSpec non_decreasing();
    static ConeSpec non_concave();
    // Checks |R(x_i)| > 0 at every design point.
    static ConeSpec diff_ineq(int r, RFunction R, const DesignGrid& x);
};

// The (r+1)x(r+1) determinant with rows (1, x_i, ..., x_i^{r-1}, w_i) over
// the strictly increasing index tuple `idx` (1-based).  Fraction-free
// (Bareiss) elimination.
double phi_form(const DesignGrid& x, std::span<const int> idx, int r,
                std::span<const double> w);

struct Membership {
    bool member = false;
    double margin = 0.0;  // raw minimum of the defining linear forms
};

// member is true iff every defining form is >= -tol; margin is untouched.
Membership cone_membership(const ConeSpec& spec, std::span<const double> f,
                           const DesignGrid& x, double tol = 1e-10);

// (1/2) max_{i<=j} (f_i - f_j), floored at zero.  Sup-norm distance from f
// to the nondecreasing cone over the design points.
double dist_sup_to_monotone(std::span<const double> f);

// Same quantity for a callable F, approximated on a uniform grid of
// `grid_points` points spanning [0,1].
double dist_sup_to_monotone_fn(const std::function<double(double)>& F, int grid_points);

// Pointwise-largest convex sequence below f: the lower convex hull of the
// points (x_i, f_i) evaluated at each x_i.
std::vector<double> greatest_convex_minorant(std::span<const double> f, const DesignGrid& x);

// max_i (f_i - g*_i) with g* the greatest convex minorant; requires n >= 3.
double dist_sup_to_convex(std::span<const double> f, const DesignGrid& x);

}  // namespace shapetest
