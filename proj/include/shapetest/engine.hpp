#pragma once

// Per-scale maximum statistics T^ell(Y).
//
// This is the production kernel used by both calibration and test
// evaluation: block means are aggregated from base-block sums instead of
// forming every direction's inner product.  The direction-based path
// (build_directions + studentized_scores) computes the same numbers and is
// kept as the reference implementation for tests and the bench target.

#include <array>
#include <span>
#include <vector>

#include "shapetest/design.hpp"
#include "shapetest/directions.hpp"
#include "shapetest/partition.hpp"

namespace shapetest {

class StatisticEngine {
public:
    StatisticEngine(VariantConfig cfg, DesignGrid x);

    const VariantConfig& config() const { return cfg_; }
    const PartitionFamily& family() const { return family_; }
    const DesignGrid& design() const { return x_; }
    const NuisanceSpace& nuisance() const { return nuisance_; }
    const std::vector<int>& scales() const { return scales_; }
    int n() const { return cfg_.n; }
    int dof() const { return cfg_.n - nuisance_.dim(); }

    struct Workspace {
        std::vector<double> resid;
        std::vector<double> base_sums;
        std::vector<double> means;
    };
    Workspace make_workspace() const;

    struct Eval {
        double residual_norm = 0.0;
        double sigma_hat = 0.0;
        std::vector<double> value;  // T^ell, aligned with scales()
        std::vector<int> argmax;    // per scale: direction enumeration index
    };

    // Throws ZeroResidualError when ||y - Pi_V y|| is numerically zero.
    void evaluate(std::span<const double> y, Eval& out, Workspace& ws) const;
    Eval evaluate(std::span<const double> y) const;

    // Block tuple achieving the maximum; enumeration order matches
    // build_directions (lexicographic within each scale).
    std::array<int, 3> tag_at(int scale_index, int enum_index) const;
    int tag_size() const;

private:
    struct PairEntry { int i, j; double norm; };
    struct TripleEntry { int i, j, k; double lambda, norm; };
    struct ScaleData {
        std::vector<int> base_lo, base_hi;   // base-block range per coarse block
        std::vector<double> inv_size;        // 1/|J| per coarse block
        std::vector<double> neg_sqrt_size;   // -sqrt(|J|), positivity
        std::vector<PairEntry> pairs;        // local means
        std::vector<TripleEntry> triples;    // convexity
        std::vector<int> seg_lo;             // gradient segment starts (0-based)
        std::vector<std::vector<double>> seg; // gradient t_J* values
    };

    VariantConfig cfg_;
    DesignGrid x_;
    PartitionFamily family_;
    NuisanceSpace nuisance_;
    std::vector<int> scales_;
    std::vector<ScaleData> per_scale_;
    double sqrt_dof_ = 0.0;
};

}  // namespace shapetest
