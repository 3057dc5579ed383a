#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "shapetest/errors.hpp"
#include "shapetest/rng.hpp"
#include "shapetest/stats.hpp"
#include "shapetest/testkit.hpp"

using namespace shapetest;

namespace {

DesignGrid study_design(int n) {
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) xs[static_cast<std::size_t>(i - 1)] = static_cast<double>(i) / (n + 1);
    return DesignGrid(std::move(xs));
}

NullCalibration quick_cal(const VariantConfig& cfg, const DesignGrid& x, double alpha,
                          int sims, std::uint64_t seed) {
    CalibrationConfig cc;
    cc.alpha = alpha;
    cc.n_sim_table = sims;
    cc.n_sim_search = sims;
    cc.seed = seed;
    return calibrate(cfg, x, cc);
}

std::vector<double> noisy(const std::vector<double>& mean, double sigma, std::uint64_t seed) {
    std::vector<double> y(mean.size());
    rng::GaussianStream g(rng::derive_key(seed, 17), 0);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = mean[i] + sigma * g.next();
    return y;
}

}  // namespace

TEST_CASE("per-scale maxima from explicit scores") {
    const int n = 40;
    const DesignGrid x = study_design(n);
    const VariantConfig cfg = VariantConfig::positivity(n, 4);
    const PartitionFamily fam = partition_family(n, 4);
    const NuisanceSpace V = build_nuisance_space(cfg, fam, x);
    const DirectionSet dirs = build_directions(cfg, fam, x);

    // y = -c*1: every block score at a given scale is equal, so T^ell is the
    // common value; with c > 0 all scores are positive.
    std::vector<double> y(static_cast<std::size_t>(n), -2.0);
    y[3] += 1e-3;  // avoid the zero-residual guard, keep symmetry near-exact
    const auto scores = studentized_scores(y, dirs, V);
    const auto per_scale = statistic_per_scale(scores, dirs);
    REQUIRE(per_scale.size() == 4);
    // Single direction at scale 1, so T^1 equals that score.
    CHECK(per_scale.at(1) == doctest::Approx(scores[0]));
    for (const auto& [ell, value] : per_scale) {
        CHECK(value > 0.0);
    }
}

TEST_CASE("evaluate_test decisions, witness, and report consistency") {
    const int n = 100;
    const DesignGrid x = study_design(n);
    const VariantConfig cfg = VariantConfig::local_means(n, 10);
    const NullCalibration cal = quick_cal(cfg, x, 0.05, 4000, 2024);
    const StatisticEngine engine(cfg, x);

    // A decreasing step between block pairs (3,4) at scale 10 dominates.
    std::vector<double> mean(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) mean[static_cast<std::size_t>(i)] = i < 30 ? 1.0 : 0.0;
    const auto y = noisy(mean, 0.05, 7);
    const TestReport rep = evaluate_test(y, engine, cal);
    CHECK(rep.reject);
    CHECK(rep.statistic > 0.0);
    CHECK(rep.witness.tag_size == 2);

    // Internal consistency: statistic equals the best exceedance, decision
    // follows the sign, per-scale rows recompute exactly.
    double best = rep.per_scale.front().exceedance;
    for (const auto& row : rep.per_scale) {
        CHECK(row.exceedance == row.t_value - row.q);
        best = std::max(best, row.exceedance);
    }
    CHECK(rep.statistic == best);
    CHECK(rep.reject == (rep.statistic > 0.0));

    // Scale invariance: c*y gives the identical report.
    std::vector<double> y2(y);
    for (auto& v : y2) v *= 37.5;
    const TestReport rep2 = evaluate_test(y2, engine, cal);
    CHECK(rep2.statistic == doctest::Approx(rep.statistic).epsilon(1e-12));
    CHECK(rep2.witness.scale == rep.witness.scale);
    CHECK(rep2.witness.blocks == rep.witness.blocks);
    CHECK(rep2.reject == rep.reject);

    // Shift invariance: adding c*1 leaves the report identical for LM.
    std::vector<double> y3(y);
    for (auto& v : y3) v += 11.0;
    const TestReport rep3 = evaluate_test(y3, engine, cal);
    CHECK(rep3.statistic == doctest::Approx(rep.statistic).epsilon(1e-9));
    CHECK(rep3.witness.blocks == rep.witness.blocks);

    // Zero residual raises the dedicated error.
    std::vector<double> constant(static_cast<std::size_t>(n), 4.0);
    CHECK_THROWS_AS(evaluate_test(constant, engine, cal), ZeroResidualError);

    // Wrong-length input and mismatched calibration are rejected.
    std::vector<double> short_y(static_cast<std::size_t>(n - 1), 0.0);
    CHECK_THROWS_AS(evaluate_test(short_y, engine, cal), std::invalid_argument);
    const StatisticEngine other(VariantConfig::local_means(n, 5), x);
    CHECK_THROWS_AS(evaluate_test(y, other, cal), std::invalid_argument);
}

TEST_CASE("a direction bump is witnessed by its own pair at its scale") {
    const int n = 60;
    const DesignGrid x = study_design(n);
    const VariantConfig cfg = VariantConfig::local_means(n, 6);
    const PartitionFamily fam = partition_family(n, 6);
    const NuisanceSpace V = build_nuisance_space(cfg, fam, x);
    const DirectionSet dirs = build_directions(cfg, fam, x);
    const StatisticEngine engine(cfg, x);

    // Bump along e_{2,5} at scale 6, plus a small non-blockwise perturbation
    // so the residual stays away from zero.
    const Direction* bump = nullptr;
    for (const Direction& d : dirs.dirs) {
        if (d.scale == 6 && d.tag[0] == 2 && d.tag[1] == 5) { bump = &d; break; }
    }
    REQUIRE(bump != nullptr);
    std::vector<double> y(static_cast<std::size_t>(n), 0.0);
    for (const auto& [i, c] : bump->coeffs) y[static_cast<std::size_t>(i)] += 5.0 * c;
    for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] += 0.01 * ((i % 3) - 1);

    const auto ev = engine.evaluate(y);
    const int si = 4;  // scale 6 is the fifth entry of scales {2,...,6}
    REQUIRE(engine.scales()[static_cast<std::size_t>(si)] == 6);
    const auto tag = engine.tag_at(si, ev.argmax[static_cast<std::size_t>(si)]);
    CHECK(tag[0] == 2);
    CHECK(tag[1] == 5);
    (void)V;
}

TEST_CASE("combined test keeps its level on monotone data") {
    const int n = 60;
    const DesignGrid x = study_design(n);
    const NullCalibration cal_lm = quick_cal(VariantConfig::local_means(n, 6), x, 0.05, 4000, 71);
    const NullCalibration cal_lg =
        quick_cal(VariantConfig::local_gradients(n, 6), x, 0.05, 4000, 71);

    std::vector<double> inc(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) inc[static_cast<std::size_t>(i)] = x.x[static_cast<std::size_t>(i)];
    const int reps = 400;
    int rejections = 0;
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<double> y(static_cast<std::size_t>(n));
        rng::GaussianStream g(rng::derive_key(808, 5), static_cast<std::uint64_t>(rep));
        for (int i = 0; i < n; ++i) {
            y[static_cast<std::size_t>(i)] = inc[static_cast<std::size_t>(i)] + 0.1 * g.next();
        }
        if (combined_monotonicity_test(y, x, cal_lm, cal_lg).reject) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / reps;
    // Level 2*alpha plus three binomial standard errors.
    CHECK(rate <= 0.10 + 3.0 * std::sqrt(0.10 * 0.90 / reps));
}

TEST_CASE("monotone blockwise shifts move every pairwise score one way") {
    const int n = 60;
    const DesignGrid x = study_design(n);
    const VariantConfig cfg = VariantConfig::local_means(n, 6);
    const PartitionFamily fam = partition_family(n, 6);
    const NuisanceSpace V = build_nuisance_space(cfg, fam, x);
    const DirectionSet dirs = build_directions(cfg, fam, x);

    std::mt19937 gen(15);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> upos(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> y(static_cast<std::size_t>(n));
        for (auto& v : y) v = gauss(gen);
        // d: nonincreasing, constant on base blocks (an element of V_n,
        // so the residual norm is unchanged).
        std::vector<double> d(static_cast<std::size_t>(n));
        double level = 5.0;
        for (int b = 0; b < 6; ++b) {
            level -= upos(gen);
            for (int i = b * 10; i < (b + 1) * 10; ++i) d[static_cast<std::size_t>(i)] = level;
        }
        std::vector<double> yd(y);
        for (int i = 0; i < n; ++i) yd[static_cast<std::size_t>(i)] += d[static_cast<std::size_t>(i)];
        const auto s0 = studentized_scores(y, dirs, V);
        const auto s1 = studentized_scores(yd, dirs, V);
        for (std::size_t k = 0; k < s0.size(); ++k) {
            CHECK(s1[k] >= s0[k] - 1e-9);
        }
    }
}

TEST_CASE("scores invariant to nuisance shifts orthogonal to the directions") {
    const int n = 60;
    const DesignGrid x = study_design(n);
    // Convexity: directions are orthogonal to 1 and x; adding c*1 keeps the
    // report identical (1 is in V_n), adding c*x keeps every raw inner
    // product <y,t> unchanged (x is orthogonal to the directions but not in
    // V_n, so the studentizing residual does change).
    const VariantConfig cfg = VariantConfig::convexity(n, 6);
    const PartitionFamily fam = partition_family(n, 6);
    const NuisanceSpace V = build_nuisance_space(cfg, fam, x);
    const DirectionSet dirs = build_directions(cfg, fam, x);
    const NullCalibration cal = quick_cal(cfg, x, 0.05, 2000, 77);
    const StatisticEngine engine(cfg, x);

    std::mt19937 gen(23);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = gauss(gen);

    std::vector<double> y_plus_one(y);
    for (auto& v : y_plus_one) v += 3.25;
    const TestReport a = evaluate_test(y, engine, cal);
    const TestReport b = evaluate_test(y_plus_one, engine, cal);
    CHECK(a.statistic == doctest::Approx(b.statistic).epsilon(1e-9));
    CHECK(a.witness.blocks == b.witness.blocks);

    std::vector<double> y_plus_x(y);
    for (int i = 0; i < n; ++i) y_plus_x[static_cast<std::size_t>(i)] += 2.0 * x.x[static_cast<std::size_t>(i)];
    for (const Direction& d : dirs.dirs) {
        CHECK(std::fabs(d.dot(y_plus_x) - d.dot(y)) <= 1e-9 * std::max(1.0, std::fabs(d.dot(y))));
    }
    (void)V;
}

TEST_CASE("combined monotonicity test") {
    const int n = 100;
    const DesignGrid x = study_design(n);
    const NullCalibration cal_lm = quick_cal(VariantConfig::local_means(n, 15), x, 0.05, 4000, 3);
    const NullCalibration cal_lg =
        quick_cal(VariantConfig::local_gradients(n, 15), x, 0.05, 4000, 3);

    // Clean monotone data: both accept, so the combination accepts.
    std::vector<double> inc(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) inc[static_cast<std::size_t>(i)] = x.x[static_cast<std::size_t>(i)];
    const auto quiet = noisy(inc, 0.05, 99);
    const auto rep_null = combined_monotonicity_test(quiet, x, cal_lm, cal_lg);
    CHECK(rep_null.level == doctest::Approx(0.10));
    CHECK(rep_null.reject == (rep_null.local_means.reject || rep_null.local_gradients.reject));

    // A steep dip (the kind the gradient test is built for) rejects.
    std::vector<double> dip(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = x.x[static_cast<std::size_t>(i)];
        const double c = t - 0.5;
        dip[static_cast<std::size_t>(i)] = (t <= 0.5 ? 15.0 * c * c * c : 0.0) + 0.3 * c -
                                           std::exp(-250.0 * (t - 0.25) * (t - 0.25));
    }
    const auto loud = noisy(dip, 0.1, 4);
    const auto rep_alt = combined_monotonicity_test(loud, x, cal_lm, cal_lg);
    CHECK(rep_alt.local_gradients.reject);
    CHECK(rep_alt.reject);

    // Mismatched calibrations are refused.
    const NullCalibration other = quick_cal(VariantConfig::local_gradients(n, 10), x, 0.05, 1000, 3);
    CHECK_THROWS_AS(combined_monotonicity_test(quiet, x, cal_lm, other), std::invalid_argument);
}

TEST_CASE("smoothness test via two one-sided derivative tests") {
    const int n = 100;
    const DesignGrid x = study_design(n);
    const VariantConfig cfg = VariantConfig::diff_ineq(n, 25, 1, make_rfunction("const1"));
    const NullCalibration cal = quick_cal(cfg, x, 0.05, 4000, 8);

    // F = 0: both transformed means have nonnegative first derivative for
    // any L > 0, so acceptance is overwhelmingly likely.
    const auto flat = noisy(std::vector<double>(static_cast<std::size_t>(n), 0.0), 0.05, 13);
    const auto rep0 = smoothness_test(flat, x, 1, 5.0, cal);
    CHECK(rep0.level == doctest::Approx(0.10));
    CHECK_FALSE(rep0.reject);

    // F(t) = M t with L < M: the transform -y + L t has slope L - M < 0
    // everywhere, so the first one-sided test fires.
    std::vector<double> steep(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) steep[static_cast<std::size_t>(i)] = 4.0 * x.x[static_cast<std::size_t>(i)];
    const auto y_steep = noisy(steep, 0.05, 21);
    const auto rep1 = smoothness_test(y_steep, x, 1, 1.0, cal);
    CHECK(rep1.upper.reject);
    CHECK(rep1.reject);

    // The transform applied twice restores +/- y up to the deterministic
    // shift: (-(-y + s) + s) = y.
    std::vector<double> once(static_cast<std::size_t>(n)), twice(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double s = 1.0 * x.x[static_cast<std::size_t>(i)];
        once[static_cast<std::size_t>(i)] = -y_steep[static_cast<std::size_t>(i)] + s;
        twice[static_cast<std::size_t>(i)] = -once[static_cast<std::size_t>(i)] + s;
    }
    for (int i = 0; i < n; ++i) {
        CHECK(twice[static_cast<std::size_t>(i)] ==
              doctest::Approx(y_steep[static_cast<std::size_t>(i)]).epsilon(1e-12));
    }

    CHECK_THROWS_AS(smoothness_test(flat, x, 2, 1.0, cal), std::invalid_argument);
    CHECK_THROWS_AS(smoothness_test(flat, x, 1, -1.0, cal), std::invalid_argument);
}

TEST_CASE("power witness bound special cases") {
    const int n = 100;
    const DesignGrid x = study_design(n);
    const VariantConfig cfg = VariantConfig::positivity(n, 10);
    const PartitionFamily fam = partition_family(n, 10);
    const NuisanceSpace V = build_nuisance_space(cfg, fam, x);
    const DirectionSet dirs = build_directions(cfg, fam, x);
    const NullCalibration cal = quick_cal(cfg, x, 0.05, 4000, 55);
    const Direction& dir = dirs.dirs.front();

    // f in V_n: zero noncentrality, the chi-square factor is central.
    std::vector<double> f_in(static_cast<std::size_t>(n), 1.0);
    const double v1 = power_witness_bound(f_in, 1.0, 0.2, dir, cal, V, 100000);
    const int dof = n - V.dim();
    const double central = stats::noncentral_chi2_upper_quantile_mc(
        dof, 0.0, 0.1, 100000, rng::derive_key(0x706f776572ULL, rng::purpose::kChi2));
    const double expect1 = cal.q_at_u_alpha(dir.scale) * std::sqrt(central / dof) +
                           stats::normal_upper_quantile(0.1);
    CHECK(v1 == doctest::Approx(expect1).epsilon(1e-12));

    // beta -> 1: the additive Gaussian term vanishes (median is zero).
    const double v_med = power_witness_bound(f_in, 1.0, 1.0 - 1e-12, dir, cal, V, 50000);
    const double chi_med = stats::noncentral_chi2_upper_quantile_mc(
        dof, 0.0, 0.5 - 5e-13, 50000, rng::derive_key(0x706f776572ULL, rng::purpose::kChi2));
    CHECK(v_med == doctest::Approx(cal.q_at_u_alpha(dir.scale) * std::sqrt(chi_med / dof))
                       .epsilon(1e-9));

    // sigma scales the bound linearly.
    const double v2 = power_witness_bound(f_in, 2.0, 0.2, dir, cal, V, 100000);
    CHECK(v2 == doctest::Approx(2.0 * v1).epsilon(1e-12));

    CHECK_THROWS_AS(power_witness_bound(f_in, 1.0, 1.5, dir, cal, V, 1000),
                    std::invalid_argument);
    CHECK_THROWS_AS(power_witness_bound(f_in, 0.0, 0.2, dir, cal, V, 1000),
                    std::invalid_argument);
}
