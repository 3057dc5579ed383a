#include "shapetest/directions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "shapetest/errors.hpp"

namespace shapetest {

std::string variant_name(Variant v) {
    switch (v) {
    case Variant::Positivity:     return "positivity";
    case Variant::LocalMeans:     return "mono-lm";
    case Variant::Convexity:      return "convexity";
    case Variant::LocalGradients: return "mono-lg";
    case Variant::DiffIneq:       return "diffineq";
    }
    throw std::logic_error("variant_name: unreachable");
}

Variant variant_from_name(const std::string& name) {
    if (name == "positivity") return Variant::Positivity;
    if (name == "mono-lm")    return Variant::LocalMeans;
    if (name == "convexity")  return Variant::Convexity;
    if (name == "mono-lg")    return Variant::LocalGradients;
    if (name == "diffineq")   return Variant::DiffIneq;
    throw std::invalid_argument("unknown test variant '" + name +
                                "' (positivity|mono-lm|mono-lg|convexity|diffineq)");
}

int variant_min_scale(Variant v) {
    switch (v) {
    case Variant::LocalMeans: return 2;
    case Variant::Convexity:  return 3;
    default:                  return 1;
    }
}

namespace {

void check_dims(int n, int ell_n, Variant v) {
    if (n < 1) throw std::invalid_argument("VariantConfig: n must be positive");
    if (ell_n < 1 || ell_n > n) throw std::invalid_argument("VariantConfig: ell_n must lie in {1,...,n}");
    if (ell_n < variant_min_scale(v)) {
        throw std::invalid_argument("VariantConfig: " + variant_name(v) + " needs ell_n >= " +
                                    std::to_string(variant_min_scale(v)));
    }
}

}  // namespace

VariantConfig VariantConfig::positivity(int n, int ell_n) {
    check_dims(n, ell_n, Variant::Positivity);
    return VariantConfig{Variant::Positivity, n, ell_n, 0, {}};
}

VariantConfig VariantConfig::local_means(int n, int ell_n) {
    check_dims(n, ell_n, Variant::LocalMeans);
    return VariantConfig{Variant::LocalMeans, n, ell_n, 0, {}};
}

VariantConfig VariantConfig::convexity(int n, int ell_n) {
    check_dims(n, ell_n, Variant::Convexity);
    return VariantConfig{Variant::Convexity, n, ell_n, 0, {}};
}

VariantConfig VariantConfig::local_gradients(int n, int ell_n) {
    check_dims(n, ell_n, Variant::LocalGradients);
    return VariantConfig{Variant::LocalGradients, n, ell_n, 1, make_rfunction("const1")};
}

VariantConfig VariantConfig::diff_ineq(int n, int ell_n, int r, RFunction R) {
    check_dims(n, ell_n, Variant::DiffIneq);
    if (r < 1) throw std::invalid_argument("VariantConfig::diff_ineq: r must be >= 1");
    if (!R.fn) throw std::invalid_argument("VariantConfig::diff_ineq: missing R");
    return VariantConfig{Variant::DiffIneq, n, ell_n, r, std::move(R)};
}

std::string VariantConfig::id() const {
    std::string s = variant_name(variant);
    if (variant == Variant::DiffIneq) {
        s += ":r=" + std::to_string(r) + ":R=" + R.name;
        if (R.name != "const1") {
            char buf[40];
            std::snprintf(buf, sizeof buf, ":a=%.17g", R.a);
            s += buf;
        }
    }
    return s;
}

ConeSpec VariantConfig::cone(const DesignGrid& x) const {
    switch (variant) {
    case Variant::Positivity:     return ConeSpec::non_negative();
    case Variant::LocalMeans:     return ConeSpec::non_decreasing();
    case Variant::Convexity:      return ConeSpec::non_concave();
    case Variant::LocalGradients: return ConeSpec::diff_ineq(1, make_rfunction("const1"), x);
    case Variant::DiffIneq:       return ConeSpec::diff_ineq(r, R, x);
    }
    throw std::logic_error("VariantConfig::cone: unreachable");
}

bool VariantConfig::design_dependent() const {
    switch (variant) {
    case Variant::Positivity:
    case Variant::LocalMeans:
        return false;
    default:
        return true;
    }
}

int default_ell_n_diff_ineq(int n, int r) {
    if (n < 1 || r < 1) throw std::invalid_argument("default_ell_n_diff_ineq: bad arguments");
    return n / (2 * (r + 1));
}

// ---------------------------------------------------------------------------
// NuisanceSpace
// ---------------------------------------------------------------------------

NuisanceSpace::NuisanceSpace(int n, std::vector<BasisVec> basis)
    : n_(n), basis_(std::move(basis)) {}

void NuisanceSpace::project(std::span<const double> y, std::span<double> out) const {
    if (static_cast<int>(y.size()) != n_ || static_cast<int>(out.size()) != n_) {
        throw std::invalid_argument("NuisanceSpace::project: dimension mismatch");
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (const BasisVec& b : basis_) {
        double c = 0.0;
        for (std::size_t k = 0; k < b.v.size(); ++k) {
            c += b.v[k] * y[static_cast<std::size_t>(b.lo) + k];
        }
        for (std::size_t k = 0; k < b.v.size(); ++k) {
            out[static_cast<std::size_t>(b.lo) + k] += c * b.v[k];
        }
    }
}

std::pair<double, double> NuisanceSpace::residual_and_sigma(std::span<const double> y) const {
    if (static_cast<int>(y.size()) != n_) {
        throw std::invalid_argument("NuisanceSpace: dimension mismatch");
    }
    std::vector<double> proj(static_cast<std::size_t>(n_));
    project(y, proj);
    double s = 0.0;
    for (std::size_t i = 0; i < proj.size(); ++i) {
        const double d = y[i] - proj[i];
        s += d * d;
    }
    const double norm = std::sqrt(s);
    const int dof = n_ - dim();
    const double sigma = dof > 0 ? norm / std::sqrt(static_cast<double>(dof)) : 0.0;
    return {norm, sigma};
}

double NuisanceSpace::residual_norm(std::span<const double> y) const {
    return residual_and_sigma(y).first;
}

namespace {

// MGS with one reorthogonalization pass over dense columns of equal length.
// Returns the surviving orthonormal columns; `kept` reports per input column
// whether it survived the 1e-10 relative rank tolerance.
std::vector<std::vector<double>> orthonormalize(std::vector<std::vector<double>> cols,
                                                std::vector<bool>* kept_out) {
    constexpr double kRankTol = 1e-10;
    std::vector<std::vector<double>> q;
    std::vector<bool> kept(cols.size(), false);
    for (std::size_t j = 0; j < cols.size(); ++j) {
        std::vector<double>& v = cols[j];
        double norm0 = 0.0;
        for (const double t : v) norm0 += t * t;
        norm0 = std::sqrt(norm0);
        if (norm0 == 0.0) continue;
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& u : q) {
                double c = 0.0;
                for (std::size_t k = 0; k < v.size(); ++k) c += u[k] * v[k];
                for (std::size_t k = 0; k < v.size(); ++k) v[k] -= c * u[k];
            }
        }
        double norm1 = 0.0;
        for (const double t : v) norm1 += t * t;
        norm1 = std::sqrt(norm1);
        if (norm1 <= kRankTol * norm0) continue;
        for (double& t : v) t /= norm1;
        q.push_back(std::move(v));
        kept[j] = true;
    }
    if (kept_out != nullptr) *kept_out = kept;
    return q;
}

// Columns of the blockwise polynomial span on block [lo,hi] (0-based,
// inclusive), in shifted-and-scaled coordinates (x - mean)/span.
std::vector<std::vector<double>> block_poly_columns(const DesignGrid& x, int lo, int hi, int deg) {
    const int m = hi - lo + 1;
    double mean = 0.0;
    for (int i = lo; i <= hi; ++i) mean += x.x[static_cast<std::size_t>(i)];
    mean /= m;
    double span = x.x[static_cast<std::size_t>(hi)] - x.x[static_cast<std::size_t>(lo)];
    if (span <= 0.0) span = 1.0;
    std::vector<std::vector<double>> cols;
    cols.reserve(static_cast<std::size_t>(deg + 1));
    for (int d = 0; d <= deg; ++d) {
        std::vector<double> c(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            const double u = (x.x[static_cast<std::size_t>(lo + i)] - mean) / span;
            c[static_cast<std::size_t>(i)] = std::pow(u, d);
        }
        cols.push_back(std::move(c));
    }
    return cols;
}

}  // namespace

NuisanceSpace build_nuisance_space(const VariantConfig& cfg, const PartitionFamily& family,
                                   const DesignGrid& x) {
    if (family.n != cfg.n || x.n() != cfg.n) {
        throw std::invalid_argument("build_nuisance_space: n mismatch");
    }
    int deg = 0;
    bool with_r_columns = false;
    switch (cfg.variant) {
    case Variant::Positivity:
    case Variant::LocalMeans:
    case Variant::Convexity:
        deg = 0;
        break;
    case Variant::LocalGradients:
        deg = 1;
        break;
    case Variant::DiffIneq:
        deg = cfg.r;
        with_r_columns = (cfg.R.name != "const1");
        break;
    }

    std::vector<BasisVec> basis;
    for (const Block& blk : family.base().blocks) {
        const int lo = blk.lo - 1;
        const int hi = blk.hi - 1;
        if (blk.size() < deg + 1) {
            throw std::invalid_argument("build_nuisance_space: base block [" +
                                        std::to_string(blk.lo) + "," + std::to_string(blk.hi) +
                                        "] has " + std::to_string(blk.size()) +
                                        " points, need at least " + std::to_string(deg + 1) +
                                        " (rank deficiency; reduce ell_n)");
        }
        std::vector<std::vector<double>> cols = block_poly_columns(x, lo, hi, deg);
        if (with_r_columns) {
            const std::size_t base_count = cols.size();
            for (std::size_t j = 0; j < base_count; ++j) {
                std::vector<double> c = cols[j];
                for (int i = 0; i < blk.size(); ++i) {
                    c[static_cast<std::size_t>(i)] *= cfg.R(x.x[static_cast<std::size_t>(lo + i)]);
                }
                cols.push_back(std::move(c));
            }
        }
        std::vector<bool> kept;
        std::vector<std::vector<double>> q = orthonormalize(std::move(cols), &kept);
        for (int j = 0; j <= deg; ++j) {
            if (!kept[static_cast<std::size_t>(j)]) {
                throw std::invalid_argument("build_nuisance_space: polynomial degree " +
                                            std::to_string(j) + " collapses on block [" +
                                            std::to_string(blk.lo) + "," + std::to_string(blk.hi) +
                                            "] (rank deficiency)");
            }
        }
        for (auto& v : q) basis.push_back(BasisVec{lo, std::move(v)});
    }

    const int d = static_cast<int>(basis.size());
    if (d >= cfg.n) {
        throw std::invalid_argument("build_nuisance_space: d_n=" + std::to_string(d) +
                                    " >= n=" + std::to_string(cfg.n));
    }
    if ((cfg.variant == Variant::DiffIneq || cfg.variant == Variant::LocalGradients) &&
        2 * d > cfg.n) {
        throw std::invalid_argument("build_nuisance_space: d_n=" + std::to_string(d) +
                                    " exceeds n/2 (reduce ell_n or r)");
    }
    return NuisanceSpace(cfg.n, std::move(basis));
}

// ---------------------------------------------------------------------------
// Directions
// ---------------------------------------------------------------------------

namespace {

double block_mean_x(const DesignGrid& x, const Block& b) {
    double s = 0.0;
    for (int i = b.lo; i <= b.hi; ++i) s += x.x[static_cast<std::size_t>(i - 1)];
    return s / b.size();
}

// -R*(x_J^r - Pi_{X_J} x_J^r)/gamma_J on the block, as a dense segment.
// X_J is spanned by the scaled polynomials of degree < r.
std::vector<double> gradient_direction(const DesignGrid& x, const Block& blk, int r,
                                       const RFunction& R, int scale, double* gamma_out) {
    const int lo = blk.lo - 1;
    const int m = blk.size();
    if (m < r + 1) {
        throw std::invalid_argument("build_directions: block [" + std::to_string(blk.lo) + "," +
                                    std::to_string(blk.hi) + "] at scale " + std::to_string(scale) +
                                    " has fewer than r+1 points");
    }
    std::vector<std::vector<double>> q =
        orthonormalize(block_poly_columns(x, lo, blk.hi - 1, r - 1), nullptr);
    std::vector<double> v(static_cast<std::size_t>(m));
    double vnorm = 0.0;
    for (int i = 0; i < m; ++i) {
        v[static_cast<std::size_t>(i)] = std::pow(x.x[static_cast<std::size_t>(lo + i)], r);
        vnorm += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    }
    vnorm = std::sqrt(vnorm);
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& u : q) {
            double c = 0.0;
            for (int i = 0; i < m; ++i) c += u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
            for (int i = 0; i < m; ++i) v[static_cast<std::size_t>(i)] -= c * u[static_cast<std::size_t>(i)];
        }
    }
    double rnorm = 0.0;
    for (const double t : v) rnorm += t * t;
    rnorm = std::sqrt(rnorm);
    if (rnorm <= 1e-12 * std::max(vnorm, 1.0)) {
        throw std::invalid_argument("build_directions: gamma_J = 0 on block [" +
                                    std::to_string(blk.lo) + "," + std::to_string(blk.hi) +
                                    "] at scale " + std::to_string(scale) +
                                    " (block polynomial degeneracy)");
    }
    double gamma = 0.0;
    for (int i = 0; i < m; ++i) {
        v[static_cast<std::size_t>(i)] *= R(x.x[static_cast<std::size_t>(lo + i)]);
        gamma += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    }
    gamma = std::sqrt(gamma);
    for (double& t : v) t /= -gamma;
    if (gamma_out != nullptr) *gamma_out = gamma;
    return v;
}

}  // namespace

DirectionSet build_directions(const VariantConfig& cfg, const PartitionFamily& family,
                              const DesignGrid& x) {
    if (family.n != cfg.n || family.ell_n != cfg.ell_n || x.n() != cfg.n) {
        throw std::invalid_argument("build_directions: configuration mismatch");
    }
    DirectionSet set;
    set.cfg = cfg;
    for (int ell = variant_min_scale(cfg.variant); ell <= cfg.ell_n; ++ell) {
        set.scales.push_back(ell);
        const Partition& part = family.at(ell);
        switch (cfg.variant) {
        case Variant::Positivity: {
            for (int j = 1; j <= ell; ++j) {
                const Block& b = part.blocks[static_cast<std::size_t>(j - 1)];
                Direction d;
                d.scale = ell;
                d.tag = {j, 0, 0};
                d.tag_size = 1;
                const double c = -1.0 / std::sqrt(static_cast<double>(b.size()));
                for (int i = b.lo; i <= b.hi; ++i) d.coeffs.emplace_back(i - 1, c);
                set.dirs.push_back(std::move(d));
            }
            break;
        }
        case Variant::LocalMeans: {
            for (int i = 1; i <= ell; ++i) {
                for (int j = i + 1; j <= ell; ++j) {
                    const Block& bi = part.blocks[static_cast<std::size_t>(i - 1)];
                    const Block& bj = part.blocks[static_cast<std::size_t>(j - 1)];
                    const double N = 1.0 / std::sqrt(1.0 / bi.size() + 1.0 / bj.size());
                    Direction d;
                    d.scale = ell;
                    d.tag = {i, j, 0};
                    d.tag_size = 2;
                    for (int k = bi.lo; k <= bi.hi; ++k) d.coeffs.emplace_back(k - 1, N / bi.size());
                    for (int k = bj.lo; k <= bj.hi; ++k) d.coeffs.emplace_back(k - 1, -N / bj.size());
                    set.dirs.push_back(std::move(d));
                }
            }
            break;
        }
        case Variant::Convexity: {
            std::vector<double> xbar(static_cast<std::size_t>(ell));
            for (int j = 1; j <= ell; ++j) {
                xbar[static_cast<std::size_t>(j - 1)] =
                    block_mean_x(x, part.blocks[static_cast<std::size_t>(j - 1)]);
            }
            for (int i = 1; i <= ell; ++i) {
                for (int j = i + 1; j <= ell; ++j) {
                    for (int k = j + 1; k <= ell; ++k) {
                        const Block& bi = part.blocks[static_cast<std::size_t>(i - 1)];
                        const Block& bj = part.blocks[static_cast<std::size_t>(j - 1)];
                        const Block& bk = part.blocks[static_cast<std::size_t>(k - 1)];
                        const double lam = (xbar[static_cast<std::size_t>(k - 1)] -
                                            xbar[static_cast<std::size_t>(j - 1)]) /
                                           (xbar[static_cast<std::size_t>(k - 1)] -
                                            xbar[static_cast<std::size_t>(i - 1)]);
                        const double N = 1.0 / std::sqrt(1.0 / bj.size() +
                                                         lam * lam / bi.size() +
                                                         (1.0 - lam) * (1.0 - lam) / bk.size());
                        Direction d;
                        d.scale = ell;
                        d.tag = {i, j, k};
                        d.tag_size = 3;
                        for (int t = bj.lo; t <= bj.hi; ++t) d.coeffs.emplace_back(t - 1, N / bj.size());
                        for (int t = bi.lo; t <= bi.hi; ++t) d.coeffs.emplace_back(t - 1, -N * lam / bi.size());
                        for (int t = bk.lo; t <= bk.hi; ++t)
                            d.coeffs.emplace_back(t - 1, -N * (1.0 - lam) / bk.size());
                        std::sort(d.coeffs.begin(), d.coeffs.end());
                        set.dirs.push_back(std::move(d));
                    }
                }
            }
            break;
        }
        case Variant::LocalGradients:
        case Variant::DiffIneq: {
            const int r = cfg.variant == Variant::LocalGradients ? 1 : cfg.r;
            const RFunction& R = cfg.R;
            for (int j = 1; j <= ell; ++j) {
                const Block& b = part.blocks[static_cast<std::size_t>(j - 1)];
                const std::vector<double> seg = gradient_direction(x, b, r, R, ell, nullptr);
                Direction d;
                d.scale = ell;
                d.tag = {j, 0, 0};
                d.tag_size = 1;
                for (int i = 0; i < b.size(); ++i) {
                    d.coeffs.emplace_back(b.lo - 1 + i, seg[static_cast<std::size_t>(i)]);
                }
                set.dirs.push_back(std::move(d));
            }
            break;
        }
        }
    }
    return set;
}

std::pair<double, double> project_residual(std::span<const double> y, const NuisanceSpace& V) {
    return V.residual_and_sigma(y);
}

std::vector<double> studentized_scores(std::span<const double> y, const DirectionSet& dirs,
                                       const NuisanceSpace& V) {
    const auto [rnorm, sigma] = V.residual_and_sigma(y);
    (void)sigma;
    double ynorm = 0.0;
    for (const double v : y) ynorm += v * v;
    ynorm = std::sqrt(ynorm);
    if (rnorm <= 1e-12 * std::max(1.0, ynorm)) {
        throw ZeroResidualError("studentized_scores: ||y - Pi_V y|| is numerically zero "
                                "(constant or duplicated input)");
    }
    const double fac = std::sqrt(static_cast<double>(V.n() - V.dim())) / rnorm;
    std::vector<double> out;
    out.reserve(dirs.dirs.size());
    for (const Direction& d : dirs.dirs) out.push_back(fac * d.dot(y));
    return out;
}

std::vector<std::vector<double>> lineality_basis(const VariantConfig& cfg, const DesignGrid& x) {
    const int n = cfg.n;
    std::vector<std::vector<double>> basis;
    auto ones = [&] {
        return std::vector<double>(static_cast<std::size_t>(n), 1.0);
    };
    switch (cfg.variant) {
    case Variant::Positivity:
        break;
    case Variant::LocalMeans:
        basis.push_back(ones());
        break;
    case Variant::Convexity: {
        basis.push_back(ones());
        basis.push_back(x.x);
        break;
    }
    case Variant::LocalGradients:
    case Variant::DiffIneq: {
        const int r = cfg.variant == Variant::LocalGradients ? 1 : cfg.r;
        for (int k = 0; k < r; ++k) {
            std::vector<double> w(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                const double xi = x.x[static_cast<std::size_t>(i)];
                w[static_cast<std::size_t>(i)] = std::pow(xi, k) / cfg.R(xi);
            }
            basis.push_back(std::move(w));
        }
        break;
    }
    }
    return basis;
}

}  // namespace shapetest
