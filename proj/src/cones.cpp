#include "shapetest/cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace shapetest {

RFunction make_rfunction(const std::string& name, double a) {
    if (name == "const1") {
        return RFunction{"const1", 0.0, [](double) { return 1.0; }};
    }
    if (name == "exp") {
        return RFunction{"exp", a, [a](double x) { return std::exp(a * x); }};
    }
    if (name == "neg-exp") {
        return RFunction{"neg-exp", a, [a](double x) { return -std::exp(a * x); }};
    }
    throw std::invalid_argument("make_rfunction: unknown R function '" + name +
                                "' (registry: const1, exp, neg-exp)");
}

ConeSpec ConeSpec::non_negative()  { return ConeSpec{ConeKind::NonNegative, 0, {}}; }
ConeSpec ConeSpec::non_decreasing(){ return ConeSpec{ConeKind::NonDecreasing, 0, {}}; }
ConeSpec ConeSpec::non_concave()   { return ConeSpec{ConeKind::NonConcave, 0, {}}; }

ConeSpec ConeSpec::diff_ineq(int r, RFunction R, const DesignGrid& x) {
    if (r < 1) throw std::invalid_argument("ConeSpec::diff_ineq: r must be >= 1");
    if (!R.fn) throw std::invalid_argument("ConeSpec::diff_ineq: missing R function");
    for (int i = 0; i < x.n(); ++i) {
        if (std::abs(R(x.x[static_cast<std::size_t>(i)])) <= 0.0) {
            throw std::invalid_argument("ConeSpec::diff_ineq: R vanishes at design point " +
                                        std::to_string(i + 1));
        }
    }
    return ConeSpec{ConeKind::DiffIneq, r, std::move(R)};
}

namespace {

// Bareiss fraction-free elimination; exact for integer matrices, stable for
// the small (r+1)x(r+1) systems used here.
double bareiss_det(std::vector<double>& m, int dim) {
    double prev = 1.0;
    int sign = 1;
    for (int k = 0; k < dim - 1; ++k) {
        if (m[static_cast<std::size_t>(k * dim + k)] == 0.0) {
            int piv = -1;
            for (int i = k + 1; i < dim; ++i) {
                if (m[static_cast<std::size_t>(i * dim + k)] != 0.0) { piv = i; break; }
            }
            if (piv < 0) return 0.0;
            for (int j = 0; j < dim; ++j) {
                std::swap(m[static_cast<std::size_t>(k * dim + j)],
                          m[static_cast<std::size_t>(piv * dim + j)]);
            }
            sign = -sign;
        }
        for (int i = k + 1; i < dim; ++i) {
            for (int j = k + 1; j < dim; ++j) {
                m[static_cast<std::size_t>(i * dim + j)] =
                    (m[static_cast<std::size_t>(i * dim + j)] * m[static_cast<std::size_t>(k * dim + k)] -
                     m[static_cast<std::size_t>(i * dim + k)] * m[static_cast<std::size_t>(k * dim + j)]) /
                    prev;
            }
            m[static_cast<std::size_t>(i * dim + k)] = 0.0;
        }
        prev = m[static_cast<std::size_t>(k * dim + k)];
    }
    return sign * m[static_cast<std::size_t>(dim * dim - 1)];
}

}  // namespace

double phi_form(const DesignGrid& x, std::span<const int> idx, int r,
                std::span<const double> w) {
    if (r < 1) throw std::invalid_argument("phi_form: r must be >= 1");
    if (static_cast<int>(idx.size()) != r + 1) {
        throw std::invalid_argument("phi_form: idx must have exactly r+1 entries");
    }
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const int i = idx[j];
        if (i < 1 || i > x.n() || i > static_cast<int>(w.size())) {
            throw std::invalid_argument("phi_form: index out of range");
        }
        if (j > 0 && !(idx[j] > idx[j - 1])) {
            throw std::invalid_argument("phi_form: idx must be strictly increasing");
        }
    }
    const int dim = r + 1;
    std::vector<double> m(static_cast<std::size_t>(dim * dim));
    for (int row = 0; row < dim; ++row) {
        const std::size_t i0 = static_cast<std::size_t>(idx[static_cast<std::size_t>(row)] - 1);
        double p = 1.0;
        for (int col = 0; col < r; ++col) {
            m[static_cast<std::size_t>(row * dim + col)] = p;
            p *= x.x[i0];
        }
        m[static_cast<std::size_t>(row * dim + r)] = w[i0];
    }
    return bareiss_det(m, dim);
}

Membership cone_membership(const ConeSpec& spec, std::span<const double> f,
                           const DesignGrid& x, double tol) {
    const int n = static_cast<int>(f.size());
    if (n != x.n()) throw std::invalid_argument("cone_membership: f/x dimension mismatch");
    double margin = std::numeric_limits<double>::infinity();

    switch (spec.kind) {
    case ConeKind::NonNegative:
        for (int i = 0; i < n; ++i) margin = std::min(margin, f[static_cast<std::size_t>(i)]);
        break;
    case ConeKind::NonDecreasing:
        if (n < 2) { margin = 0.0; break; }
        for (int i = 0; i + 1 < n; ++i) {
            margin = std::min(margin, f[static_cast<std::size_t>(i + 1)] - f[static_cast<std::size_t>(i)]);
        }
        break;
    case ConeKind::NonConcave: {
        if (n < 3) throw std::invalid_argument("cone_membership: NonConcave needs n >= 3");
        int idx[3];
        for (int i = 1; i + 2 <= n; ++i) {
            idx[0] = i; idx[1] = i + 1; idx[2] = i + 2;
            margin = std::min(margin, phi_form(x, std::span<const int>(idx, 3), 2, f));
        }
        break;
    }
    case ConeKind::DiffIneq: {
        const int r = spec.r;
        if (n < r + 1) throw std::invalid_argument("cone_membership: DiffIneq needs n >= r+1");
        std::vector<double> rf(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            rf[static_cast<std::size_t>(i)] =
                spec.R(x.x[static_cast<std::size_t>(i)]) * f[static_cast<std::size_t>(i)];
        }
        std::vector<int> idx(static_cast<std::size_t>(r + 1));
        for (int i = 1; i + r <= n; ++i) {
            for (int j = 0; j <= r; ++j) idx[static_cast<std::size_t>(j)] = i + j;
            margin = std::min(margin, phi_form(x, idx, r, rf));
        }
        break;
    }
    }
    return Membership{margin >= -tol, margin};
}

double dist_sup_to_monotone(std::span<const double> f) {
    if (f.empty()) throw std::invalid_argument("dist_sup_to_monotone: empty input");
    double best = 0.0;
    double run_max = -std::numeric_limits<double>::infinity();
    for (const double v : f) {
        run_max = std::max(run_max, v);
        best = std::max(best, run_max - v);
    }
    return 0.5 * best;
}

double dist_sup_to_monotone_fn(const std::function<double(double)>& F, int grid_points) {
    if (grid_points < 2) throw std::invalid_argument("dist_sup_to_monotone_fn: need >= 2 grid points");
    double best = 0.0;
    double run_max = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid_points; ++i) {
        const double t = static_cast<double>(i) / (grid_points - 1);
        const double v = F(t);
        run_max = std::max(run_max, v);
        best = std::max(best, run_max - v);
    }
    return 0.5 * best;
}

std::vector<double> greatest_convex_minorant(std::span<const double> f, const DesignGrid& x) {
    const int n = static_cast<int>(f.size());
    if (n != x.n()) throw std::invalid_argument("greatest_convex_minorant: f/x dimension mismatch");
    if (n == 0) throw std::invalid_argument("greatest_convex_minorant: empty input");
    if (n <= 2) return std::vector<double>(f.begin(), f.end());

    // Monotone-stack lower hull over (x_i, f_i).
    std::vector<int> hull;
    hull.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        while (hull.size() >= 2) {
            const int a = hull[hull.size() - 2];
            const int b = hull[hull.size() - 1];
            // Pop b if it lies on or above chord a--i.
            const double cross =
                (x.x[static_cast<std::size_t>(b)] - x.x[static_cast<std::size_t>(a)]) *
                    (f[static_cast<std::size_t>(i)] - f[static_cast<std::size_t>(a)]) -
                (x.x[static_cast<std::size_t>(i)] - x.x[static_cast<std::size_t>(a)]) *
                    (f[static_cast<std::size_t>(b)] - f[static_cast<std::size_t>(a)]);
            if (cross >= 0.0) break;
            hull.pop_back();
        }
        hull.push_back(i);
    }

    std::vector<double> g(static_cast<std::size_t>(n));
    std::size_t seg = 0;
    for (int i = 0; i < n; ++i) {
        while (seg + 1 < hull.size() && hull[seg + 1] < i) ++seg;
        const int a = hull[seg];
        if (i == a) {
            g[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i)];
            continue;
        }
        const int b = hull[seg + 1];
        const double lam = (x.x[static_cast<std::size_t>(i)] - x.x[static_cast<std::size_t>(a)]) /
                           (x.x[static_cast<std::size_t>(b)] - x.x[static_cast<std::size_t>(a)]);
        g[static_cast<std::size_t>(i)] = (1.0 - lam) * f[static_cast<std::size_t>(a)] +
                                         lam * f[static_cast<std::size_t>(b)];
    }
    return g;
}

double dist_sup_to_convex(std::span<const double> f, const DesignGrid& x) {
    if (f.size() < 3) throw std::invalid_argument("dist_sup_to_convex: need n >= 3");
    const std::vector<double> g = greatest_convex_minorant(f, x);
    double best = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) best = std::max(best, f[i] - g[i]);
    return best;
}

}  // namespace shapetest
