#pragma once

// Calibrated decisions: T_alpha = max_ell (T^ell(Y) - q(ell, u_alpha)),
// rejection iff T_alpha > 0, with an auditable per-scale breakdown and the
// witness direction that achieves the maximum.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "shapetest/calibration.hpp"
#include "shapetest/directions.hpp"
#include "shapetest/engine.hpp"

namespace shapetest {

struct PerScaleRow {
    int scale = 0;
    double t_value = 0.0;     // T^ell(Y)
    double q = 0.0;           // q(ell, u_alpha)
    double exceedance = 0.0;  // T^ell - q
};

struct WitnessInfo {
    int scale = 0;
    std::array<int, 3> blocks{};  // 1-based block indices at that scale
    int tag_size = 0;
    double x_lo = 0.0, x_hi = 0.0;                    // span of the whole tuple
    std::vector<std::array<double, 2>> block_spans;   // [x_J^-, x_J^+] per block
};

struct TestReport {
    std::string variant;
    int n = 0;
    double alpha = 0.0;
    double u_alpha = 0.0;
    double statistic = 0.0;  // T_alpha
    double sigma_hat = 0.0;
    bool reject = false;
    WitnessInfo witness;
    std::vector<PerScaleRow> per_scale;

    std::string to_json(int indent = 2) const;
};

// Per-scale maxima from explicit per-direction scores; the reference path
// mirroring StatisticEngine::evaluate.
std::map<int, double> statistic_per_scale(std::span<const double> scores,
                                          const DirectionSet& dirs);

// Ties across scales break toward the smaller scale, within a scale toward
// the lexicographically smaller block tuple.
TestReport evaluate_test(std::span<const double> y, const StatisticEngine& engine,
                         const NullCalibration& cal);

struct CombinedMonotonicityReport {
    bool reject = false;
    double level = 0.0;  // 2 alpha
    TestReport local_means;
    TestReport local_gradients;
};

// Rejects when either the local-means or the local-gradients test rejects;
// both calibrations must share (alpha, n, ell_n).
CombinedMonotonicityReport combined_monotonicity_test(std::span<const double> y,
                                                      const DesignGrid& x,
                                                      const NullCalibration& cal_lm,
                                                      const NullCalibration& cal_lg);

struct SmoothnessReport {
    bool reject = false;  // rejects ||F^(r)||_inf <= L
    double level = 0.0;   // 2 alpha
    int r = 0;
    double bound = 0.0;   // L
    TestReport upper;     // test on -y_i + L x_i^r / r!
    TestReport lower;     // test on +y_i + L x_i^r / r!
};

// Two one-sided derivative tests on transformed data; cal must be a
// diffineq(r, R = 1) calibration for the same (n, ell_n, design).
SmoothnessReport smoothness_test(std::span<const double> y, const DesignGrid& x, int r,
                                 double L, const NullCalibration& cal);

// v_t(f, beta): the detectability threshold of the power guarantee: if some
// direction has <f,t> >= v_t(f,beta), rejection probability is >= 1-beta.
// Noncentral chi-square quantile by Monte Carlo on a deterministic stream.
double power_witness_bound(std::span<const double> f, double sigma, double beta,
                           const Direction& dir, const NullCalibration& cal,
                           const NuisanceSpace& V, int mc_reps,
                           std::uint64_t seed = 0x706f776572ULL);

}  // namespace shapetest
