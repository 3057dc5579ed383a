#include "shapetest/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "shapetest/errors.hpp"

namespace shapetest {

StatisticEngine::StatisticEngine(VariantConfig cfg, DesignGrid x)
    : cfg_(std::move(cfg)), x_(std::move(x)) {
    if (x_.n() != cfg_.n) throw std::invalid_argument("StatisticEngine: design/n mismatch");
    family_ = partition_family(cfg_.n, cfg_.ell_n);
    nuisance_ = build_nuisance_space(cfg_, family_, x_);
    sqrt_dof_ = std::sqrt(static_cast<double>(dof()));

    // A direction set is cheap to build and pins the per-scale enumeration;
    // the kernel below reproduces its scores through block sums.
    const DirectionSet dirs = build_directions(cfg_, family_, x_);
    scales_ = dirs.scales;

    per_scale_.resize(scales_.size());
    const Partition& base = family_.base();
    for (std::size_t si = 0; si < scales_.size(); ++si) {
        const int ell = scales_[si];
        const Partition& part = family_.at(ell);
        ScaleData& sd = per_scale_[si];
        const int nb = part.scale();
        sd.base_lo.resize(static_cast<std::size_t>(nb));
        sd.base_hi.resize(static_cast<std::size_t>(nb));
        sd.inv_size.resize(static_cast<std::size_t>(nb));
        // Map each coarse block to its run of base blocks.
        std::size_t k = 0;
        for (int j = 0; j < nb; ++j) {
            const Block& b = part.blocks[static_cast<std::size_t>(j)];
            while (base.blocks[k].lo != b.lo) ++k;
            sd.base_lo[static_cast<std::size_t>(j)] = static_cast<int>(k);
            while (base.blocks[k].hi != b.hi) ++k;
            sd.base_hi[static_cast<std::size_t>(j)] = static_cast<int>(k);
            sd.inv_size[static_cast<std::size_t>(j)] = 1.0 / b.size();
        }

        switch (cfg_.variant) {
        case Variant::Positivity: {
            sd.neg_sqrt_size.resize(static_cast<std::size_t>(nb));
            for (int j = 0; j < nb; ++j) {
                sd.neg_sqrt_size[static_cast<std::size_t>(j)] =
                    -std::sqrt(static_cast<double>(part.blocks[static_cast<std::size_t>(j)].size()));
            }
            break;
        }
        case Variant::LocalMeans: {
            for (int i = 1; i <= ell; ++i) {
                for (int j = i + 1; j <= ell; ++j) {
                    const double N = 1.0 / std::sqrt(sd.inv_size[static_cast<std::size_t>(i - 1)] +
                                                     sd.inv_size[static_cast<std::size_t>(j - 1)]);
                    sd.pairs.push_back({i - 1, j - 1, N});
                }
            }
            break;
        }
        case Variant::Convexity: {
            std::vector<double> xbar(static_cast<std::size_t>(nb));
            for (int j = 0; j < nb; ++j) {
                const Block& b = part.blocks[static_cast<std::size_t>(j)];
                double s = 0.0;
                for (int t = b.lo; t <= b.hi; ++t) s += x_.x[static_cast<std::size_t>(t - 1)];
                xbar[static_cast<std::size_t>(j)] = s / b.size();
            }
            for (int i = 1; i <= ell; ++i) {
                for (int j = i + 1; j <= ell; ++j) {
                    for (int kk = j + 1; kk <= ell; ++kk) {
                        const double lam = (xbar[static_cast<std::size_t>(kk - 1)] -
                                            xbar[static_cast<std::size_t>(j - 1)]) /
                                           (xbar[static_cast<std::size_t>(kk - 1)] -
                                            xbar[static_cast<std::size_t>(i - 1)]);
                        const double N =
                            1.0 / std::sqrt(sd.inv_size[static_cast<std::size_t>(j - 1)] +
                                            lam * lam * sd.inv_size[static_cast<std::size_t>(i - 1)] +
                                            (1.0 - lam) * (1.0 - lam) *
                                                sd.inv_size[static_cast<std::size_t>(kk - 1)]);
                        sd.triples.push_back({i - 1, j - 1, kk - 1, lam, N});
                    }
                }
            }
            break;
        }
        case Variant::LocalGradients:
        case Variant::DiffIneq: {
            // Reuse the direction coefficients as dense segments.
            for (const Direction& d : dirs.dirs) {
                if (d.scale != ell) continue;
                sd.seg_lo.push_back(d.coeffs.front().first);
                std::vector<double> seg(d.coeffs.size());
                for (std::size_t t = 0; t < d.coeffs.size(); ++t) seg[t] = d.coeffs[t].second;
                sd.seg.push_back(std::move(seg));
            }
            break;
        }
        }
    }
}

StatisticEngine::Workspace StatisticEngine::make_workspace() const {
    Workspace ws;
    ws.resid.resize(static_cast<std::size_t>(cfg_.n));
    ws.base_sums.resize(static_cast<std::size_t>(cfg_.ell_n));
    ws.means.resize(static_cast<std::size_t>(cfg_.ell_n));
    return ws;
}

void StatisticEngine::evaluate(std::span<const double> y, Eval& out, Workspace& ws) const {
    const int n = cfg_.n;
    if (static_cast<int>(y.size()) != n) {
        throw std::invalid_argument("StatisticEngine::evaluate: y has length " +
                                    std::to_string(y.size()) + ", expected " + std::to_string(n));
    }

    // Residual y - Pi_V y by basis subtraction.
    std::copy(y.begin(), y.end(), ws.resid.begin());
    for (const BasisVec& b : nuisance_.basis()) {
        double c = 0.0;
        for (std::size_t k = 0; k < b.v.size(); ++k) {
            c += b.v[k] * y[static_cast<std::size_t>(b.lo) + k];
        }
        for (std::size_t k = 0; k < b.v.size(); ++k) {
            ws.resid[static_cast<std::size_t>(b.lo) + k] -= c * b.v[k];
        }
    }
    double rnorm2 = 0.0, ynorm2 = 0.0;
    for (int i = 0; i < n; ++i) {
        rnorm2 += ws.resid[static_cast<std::size_t>(i)] * ws.resid[static_cast<std::size_t>(i)];
        ynorm2 += y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
    }
    const double rnorm = std::sqrt(rnorm2);
    if (rnorm <= 1e-12 * std::max(1.0, std::sqrt(ynorm2))) {
        throw ZeroResidualError("statistic: ||y - Pi_V y|| is numerically zero "
                                "(constant or duplicated input)");
    }
    out.residual_norm = rnorm;
    out.sigma_hat = rnorm / sqrt_dof_;
    const double fac = sqrt_dof_ / rnorm;

    out.value.assign(scales_.size(), 0.0);
    out.argmax.assign(scales_.size(), 0);

    const bool mean_based = cfg_.variant == Variant::Positivity ||
                            cfg_.variant == Variant::LocalMeans ||
                            cfg_.variant == Variant::Convexity;
    if (mean_based) {
        const Partition& base = family_.base();
        for (int k = 0; k < family_.ell_n; ++k) {
            const Block& b = base.blocks[static_cast<std::size_t>(k)];
            double s = 0.0;
            for (int i = b.lo; i <= b.hi; ++i) s += y[static_cast<std::size_t>(i - 1)];
            ws.base_sums[static_cast<std::size_t>(k)] = s;
        }
    }

    for (std::size_t si = 0; si < scales_.size(); ++si) {
        const ScaleData& sd = per_scale_[si];
        double best = 0.0;
        int best_idx = 0;
        switch (cfg_.variant) {
        case Variant::Positivity: {
            const int nb = static_cast<int>(sd.base_lo.size());
            for (int j = 0; j < nb; ++j) {
                double s = 0.0;
                for (int k = sd.base_lo[static_cast<std::size_t>(j)];
                     k <= sd.base_hi[static_cast<std::size_t>(j)]; ++k) {
                    s += ws.base_sums[static_cast<std::size_t>(k)];
                }
                const double score = sd.neg_sqrt_size[static_cast<std::size_t>(j)] *
                                     (s * sd.inv_size[static_cast<std::size_t>(j)]);
                if (j == 0 || score > best) { best = score; best_idx = j; }
            }
            break;
        }
        case Variant::LocalMeans:
        case Variant::Convexity: {
            const int nb = static_cast<int>(sd.base_lo.size());
            for (int j = 0; j < nb; ++j) {
                double s = 0.0;
                for (int k = sd.base_lo[static_cast<std::size_t>(j)];
                     k <= sd.base_hi[static_cast<std::size_t>(j)]; ++k) {
                    s += ws.base_sums[static_cast<std::size_t>(k)];
                }
                ws.means[static_cast<std::size_t>(j)] = s * sd.inv_size[static_cast<std::size_t>(j)];
            }
            if (cfg_.variant == Variant::LocalMeans) {
                for (std::size_t p = 0; p < sd.pairs.size(); ++p) {
                    const PairEntry& e = sd.pairs[p];
                    const double score = e.norm * (ws.means[static_cast<std::size_t>(e.i)] -
                                                   ws.means[static_cast<std::size_t>(e.j)]);
                    if (p == 0 || score > best) { best = score; best_idx = static_cast<int>(p); }
                }
            } else {
                for (std::size_t p = 0; p < sd.triples.size(); ++p) {
                    const TripleEntry& e = sd.triples[p];
                    const double score =
                        e.norm * (ws.means[static_cast<std::size_t>(e.j)] -
                                  e.lambda * ws.means[static_cast<std::size_t>(e.i)] -
                                  (1.0 - e.lambda) * ws.means[static_cast<std::size_t>(e.k)]);
                    if (p == 0 || score > best) { best = score; best_idx = static_cast<int>(p); }
                }
            }
            break;
        }
        case Variant::LocalGradients:
        case Variant::DiffIneq: {
            for (std::size_t j = 0; j < sd.seg.size(); ++j) {
                const std::vector<double>& seg = sd.seg[j];
                const int lo = sd.seg_lo[j];
                double s = 0.0;
                for (std::size_t t = 0; t < seg.size(); ++t) {
                    s += seg[t] * y[static_cast<std::size_t>(lo) + t];
                }
                if (j == 0 || s > best) { best = s; best_idx = static_cast<int>(j); }
            }
            break;
        }
        }
        out.value[si] = best * fac;
        out.argmax[si] = best_idx;
    }
}

StatisticEngine::Eval StatisticEngine::evaluate(std::span<const double> y) const {
    Eval out;
    Workspace ws = make_workspace();
    evaluate(y, out, ws);
    return out;
}

std::array<int, 3> StatisticEngine::tag_at(int scale_index, int enum_index) const {
    switch (cfg_.variant) {
    case Variant::Positivity:
    case Variant::LocalGradients:
    case Variant::DiffIneq:
        return {enum_index + 1, 0, 0};
    case Variant::LocalMeans: {
        const PairEntry& e = per_scale_[static_cast<std::size_t>(scale_index)]
                                 .pairs[static_cast<std::size_t>(enum_index)];
        return {e.i + 1, e.j + 1, 0};
    }
    case Variant::Convexity: {
        const TripleEntry& e = per_scale_[static_cast<std::size_t>(scale_index)]
                                   .triples[static_cast<std::size_t>(enum_index)];
        return {e.i + 1, e.j + 1, e.k + 1};
    }
    }
    throw std::logic_error("tag_at: unreachable");
}

int StatisticEngine::tag_size() const {
    switch (cfg_.variant) {
    case Variant::LocalMeans: return 2;
    case Variant::Convexity:  return 3;
    default:                  return 1;
    }
}

}  // namespace shapetest
