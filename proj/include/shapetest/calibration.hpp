#pragma once

// Monte-Carlo calibration of the per-scale null quantiles q(ell,u) and the
// multiplicity-corrected u_alpha.
//
// Two independent batches: the table batch estimates q(ell,u) on a u-grid,
// the search batch estimates p(u) = P(max_ell {T^ell - q(ell,u)} > 0) and
// selects u_alpha as the largest grid u with p_hat(u) <= alpha.  Reusing a
// single batch would bias p_hat down at the selected u.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shapetest/engine.hpp"
#include "shapetest/stats.hpp"

namespace shapetest {

struct NullScoreMatrix {
    std::vector<int> scales;
    int rows = 0;
    std::vector<double> data;  // rows x scales, row-major

    double at(int row, int scale_index) const {
        return data[static_cast<std::size_t>(row) * scales.size() +
                    static_cast<std::size_t>(scale_index)];
    }
};

// Row s is T^ell(eps_s) for an i.i.d. standard normal draw on stream s of
// `key`; bitwise reproducible for any worker count.
NullScoreMatrix simulate_null_scores(const StatisticEngine& engine, int n_sim,
                                     std::uint64_t key);

// Geometric grid of `points` values from alpha down to alpha/ell_n.
std::vector<double> make_u_grid(double alpha, int ell_n, int points);

struct QuantileTable {
    std::vector<int> scales;
    std::vector<double> u_grid;  // descending
    std::vector<double> q;       // scales x grid, row-major

    double at(int scale_index, int u_index) const {
        return q[static_cast<std::size_t>(scale_index) * u_grid.size() +
                 static_cast<std::size_t>(u_index)];
    }
};

// q(ell,u) = empirical 1-u quantile of the scale-ell column.  Warns on
// stderr when n_sim < 1/min(u_grid).
QuantileTable estimate_quantile_table(const NullScoreMatrix& scores,
                                      std::vector<double> u_grid);

struct UAlphaChoice {
    double u_alpha = 0.0;
    int index = 0;     // into the (descending) u-grid
    double p_hat = 0.0;
};

// Largest grid u with p_hat(u) <= alpha over the independent batch.
// Throws CalibrationError when no grid point qualifies.
UAlphaChoice calibrate_u_alpha(const QuantileTable& table, double alpha,
                               const NullScoreMatrix& independent);

struct CalibrationConfig {
    double alpha = 0.05;
    int n_sim_table = 10000;
    int n_sim_search = 10000;
    std::uint64_t seed = 0;
    int u_grid_points = 40;
};

struct NullCalibration {
    int format_version = 1;
    std::string variant;   // registry name
    int n = 0;
    int ell_n = 0;
    double alpha = 0.0;
    int r = 0;             // diffineq only
    std::string rfun;      // diffineq only
    double rfun_a = 0.0;
    bool design_dependent = false;
    std::vector<double> design;  // stored iff design_dependent

    std::uint64_t seed = 0;        // user seed
    std::uint64_t table_key = 0;   // derived stream keys, disjoint by purpose
    std::uint64_t search_key = 0;
    int n_sim_table = 0;
    int n_sim_search = 0;

    std::vector<int> scales;
    std::vector<double> u_grid;   // descending
    std::vector<double> q_table;  // scales x grid, row-major
    double u_alpha = 0.0;
    int u_alpha_index = 0;
    double p_hat = 0.0;

    std::string content_hash() const;
    double q_at(int scale, int u_index) const;
    double q_at_u_alpha(int scale) const;

    // Rebuilds the variant configuration (the design is taken from the
    // stored copy for design-dependent variants).
    VariantConfig variant_config() const;

    // Persistence: decimal JSON with 17 significant digits, so a write/read
    // round trip is bitwise exact.  Refuses to save when either batch has
    // fewer than 1000 rows.
    void save(const std::string& path) const;
    static NullCalibration load(const std::string& path);

    // Compatibility checks used before testing data against this file.
    void require_matches(const VariantConfig& cfg, const DesignGrid& x) const;
};

NullCalibration calibrate(const VariantConfig& cfg, const DesignGrid& x,
                          const CalibrationConfig& cc);

}  // namespace shapetest
