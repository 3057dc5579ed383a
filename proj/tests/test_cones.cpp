#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "shapetest/cones.hpp"
#include "support/oracles.hpp"

using namespace shapetest;

namespace {

DesignGrid grid3() { return DesignGrid({0.0, 0.5, 1.0}); }

DesignGrid study_design(int n) {
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) xs[static_cast<std::size_t>(i - 1)] = static_cast<double>(i) / (n + 1);
    return DesignGrid(std::move(xs));
}

}  // namespace

TEST_CASE("phi_form determinants") {
    const DesignGrid x = grid3();
    // r = 1: two-point difference.
    {
        std::vector<double> w = {3.0, 7.5, -1.0};
        const int idx[] = {1, 2};
        CHECK(phi_form(x, std::span<const int>(idx, 2), 1, w) == doctest::Approx(4.5));
        const int idx2[] = {2, 3};
        CHECK(phi_form(x, std::span<const int>(idx2, 2), 1, w) == doctest::Approx(-8.5));
    }
    // Hand-expanded 3x3 case.
    {
        std::vector<double> w = {0.0, 0.0, 1.0};
        const int idx[] = {1, 2, 3};
        CHECK(phi_form(x, std::span<const int>(idx, 3), 2, w) == doctest::Approx(0.5));
    }
    // Vanishes when w restricted to the tuple lies in span{1, x, ..., x^{r-1}}.
    {
        std::mt19937 gen(7);
        std::uniform_real_distribution<double> unif(-2.0, 2.0);
        std::vector<double> xs = {0.03, 0.21, 0.36, 0.5, 0.77, 0.94};
        const DesignGrid g(xs);
        for (int rep = 0; rep < 50; ++rep) {
            const int r = 1 + rep % 3;
            std::vector<double> coef(static_cast<std::size_t>(r));
            for (double& c : coef) c = unif(gen);
            std::vector<double> w(xs.size(), 0.0);
            for (std::size_t i = 0; i < xs.size(); ++i) {
                double p = 1.0;
                for (int d = 0; d < r; ++d) {
                    w[i] += coef[static_cast<std::size_t>(d)] * p;
                    p *= xs[i];
                }
            }
            std::vector<int> idx(static_cast<std::size_t>(r + 1));
            for (int j = 0; j <= r; ++j) idx[static_cast<std::size_t>(j)] = j + 1;
            CHECK(std::fabs(phi_form(g, idx, r, w)) <= 1e-12);
        }
    }
    // Linearity in w and agreement with a cofactor-expansion determinant.
    {
        std::mt19937 gen(11);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        std::vector<double> xs = {0.05, 0.2, 0.4, 0.6, 0.9};
        const DesignGrid g(xs);
        const int r = 3;
        const int idx[] = {1, 2, 4, 5};
        std::vector<double> w1(5), w2(5);
        for (int rep = 0; rep < 20; ++rep) {
            for (auto& v : w1) v = unif(gen);
            for (auto& v : w2) v = unif(gen);
            const double a = unif(gen), b = unif(gen);
            std::vector<double> mix(5);
            for (int i = 0; i < 5; ++i) {
                mix[static_cast<std::size_t>(i)] =
                    a * w1[static_cast<std::size_t>(i)] + b * w2[static_cast<std::size_t>(i)];
            }
            const auto span_idx = std::span<const int>(idx, 4);
            CHECK(phi_form(g, span_idx, r, mix) ==
                  doctest::Approx(a * phi_form(g, span_idx, r, w1) +
                                  b * phi_form(g, span_idx, r, w2)).epsilon(1e-10));
            std::vector<std::vector<double>> m;
            for (const int i : idx) {
                const double xi = xs[static_cast<std::size_t>(i - 1)];
                m.push_back({1.0, xi, xi * xi, w1[static_cast<std::size_t>(i - 1)]});
            }
            CHECK(phi_form(g, span_idx, r, w1) ==
                  doctest::Approx(oracle::det_cofactor(m)).epsilon(1e-10));
        }
    }
    // Errors.
    {
        std::vector<double> w = {1.0, 2.0, 3.0};
        const int bad_order[] = {2, 1};
        CHECK_THROWS_AS(phi_form(x, std::span<const int>(bad_order, 2), 1, w),
                        std::invalid_argument);
        const int idx[] = {1, 2, 3};
        CHECK_THROWS_AS(phi_form(x, std::span<const int>(idx, 3), 1, w), std::invalid_argument);
    }
}

TEST_CASE("cone membership") {
    const DesignGrid x = grid3();
    {
        std::vector<double> f = {1.0, 2.0, 3.0};
        const Membership m = cone_membership(ConeSpec::non_decreasing(), f, x);
        CHECK(m.member);
        CHECK(m.margin == doctest::Approx(1.0));
    }
    {
        std::vector<double> f = {0.0, 1.0, 0.0};
        const Membership m = cone_membership(ConeSpec::non_concave(), f, x);
        CHECK_FALSE(m.member);
        CHECK(m.margin == doctest::Approx(-1.0));
    }
    {
        // DiffIneq(r=1, R=1) agrees with NonDecreasing, margins included.
        std::mt19937 gen(3);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        std::vector<double> xs = {0.1, 0.3, 0.45, 0.8, 0.95};
        const DesignGrid g(xs);
        const ConeSpec d1 = ConeSpec::diff_ineq(1, make_rfunction("const1"), g);
        for (int rep = 0; rep < 40; ++rep) {
            std::vector<double> f(5);
            for (auto& v : f) v = unif(gen);
            const Membership a = cone_membership(ConeSpec::non_decreasing(), f, g);
            const Membership b = cone_membership(d1, f, g);
            CHECK(a.member == b.member);
            CHECK(a.margin == doctest::Approx(b.margin).epsilon(1e-12));
        }
    }
    {
        std::vector<double> f = {0.0, 0.0};
        CHECK_THROWS_AS(cone_membership(ConeSpec::non_negative(), f, x), std::invalid_argument);
    }
    // R must not vanish on the design.
    CHECK_THROWS_AS(ConeSpec::diff_ineq(1, RFunction{"zero-at-half", 0.0,
                                                     [](double t) { return t - 0.5; }},
                                        x),
                    std::invalid_argument);
}

TEST_CASE("sup-norm distance to the monotone cone") {
    {
        std::vector<double> f = {0.0, 0.5, 0.5, 2.0};
        CHECK(dist_sup_to_monotone(f) == 0.0);
    }
    {
        std::vector<double> f = {0.0, -1.0, 0.0};
        CHECK(dist_sup_to_monotone(f) == doctest::Approx(0.5));
    }
    {
        // The decreasing line -0.15 x on the study design: closed form
        // (1/2) * 0.15 * 99/101.
        const DesignGrid x = study_design(100);
        std::vector<double> f(100);
        for (int i = 0; i < 100; ++i) f[static_cast<std::size_t>(i)] = -0.15 * x.x[static_cast<std::size_t>(i)];
        CHECK(dist_sup_to_monotone(f) == doctest::Approx(0.5 * 0.15 * 99.0 / 101.0).epsilon(1e-12));
        CHECK(dist_sup_to_monotone(f) == doctest::Approx(0.073514851485148512).epsilon(1e-12));
    }
    {
        // Brute-force pair oracle on random data.
        std::mt19937 gen(17);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        for (int rep = 0; rep < 60; ++rep) {
            std::vector<double> f(static_cast<std::size_t>(1 + rep % 14));
            for (auto& v : f) v = unif(gen);
            CHECK(dist_sup_to_monotone(f) ==
                  doctest::Approx(oracle::dist_monotone_brute(f)).epsilon(1e-14));
        }
    }
    {
        // Zero distance iff member of the nondecreasing cone.
        std::mt19937 gen(29);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        std::vector<double> xs(8);
        for (int i = 0; i < 8; ++i) xs[static_cast<std::size_t>(i)] = (i + 1) / 9.0;
        const DesignGrid g(xs);
        for (int rep = 0; rep < 60; ++rep) {
            std::vector<double> f(8);
            for (auto& v : f) v = unif(gen);
            if (rep % 3 == 0) std::sort(f.begin(), f.end());
            const bool zero = dist_sup_to_monotone(f) <= 1e-12;
            const bool member = cone_membership(ConeSpec::non_decreasing(), f, g).member;
            CHECK(zero == member);
        }
    }
    // The continuous-domain variant of the same line reaches 0.075.
    const double cont = dist_sup_to_monotone_fn([](double t) { return -0.15 * t; }, 200001);
    CHECK(cont == doctest::Approx(0.075).epsilon(1e-6));
}

TEST_CASE("greatest convex minorant and convex distance") {
    const DesignGrid x = grid3();
    {
        std::vector<double> f = {0.0, 1.0, 0.0};
        const auto g = greatest_convex_minorant(f, x);
        CHECK(g[0] == doctest::Approx(0.0));
        CHECK(g[1] == doctest::Approx(0.0));
        CHECK(g[2] == doctest::Approx(0.0));
        CHECK(dist_sup_to_convex(f, x) == doctest::Approx(1.0));
    }
    {
        // Convex and linear inputs are fixed points.
        std::vector<double> xs = {0.0, 0.2, 0.5, 0.7, 1.0};
        const DesignGrid g(xs);
        std::vector<double> convex(5), linear(5);
        for (std::size_t i = 0; i < 5; ++i) {
            convex[i] = xs[i] * xs[i];
            linear[i] = 3.0 * xs[i] - 1.0;
        }
        const auto gc = greatest_convex_minorant(convex, g);
        const auto gl = greatest_convex_minorant(linear, g);
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(gc[i] == doctest::Approx(convex[i]));
            CHECK(gl[i] == doctest::Approx(linear[i]));
        }
        CHECK(dist_sup_to_convex(convex, g) == doctest::Approx(0.0));
    }
    {
        // Against brute-force oracles on random data, n <= 12.
        std::mt19937 gen(41);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        for (int rep = 0; rep < 80; ++rep) {
            const int n = 3 + rep % 10;
            std::vector<double> xs(static_cast<std::size_t>(n)), f(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                xs[static_cast<std::size_t>(i)] = (i + 1.0) / (n + 1.0) + 0.003 * unif(gen);
                f[static_cast<std::size_t>(i)] = unif(gen);
            }
            const DesignGrid g(xs);
            const auto mine = greatest_convex_minorant(f, g);
            const auto ref = oracle::convex_minorant_brute(f, xs);
            for (int i = 0; i < n; ++i) {
                CHECK(mine[static_cast<std::size_t>(i)] ==
                      doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-9));
                CHECK(mine[static_cast<std::size_t>(i)] <= f[static_cast<std::size_t>(i)] + 1e-12);
            }
            CHECK(dist_sup_to_convex(f, g) ==
                  doctest::Approx(oracle::dist_convex_brute(f, xs)).epsilon(1e-9));
            // The minorant is itself convex over the design.
            CHECK(cone_membership(ConeSpec::non_concave(), mine, g, 1e-9).member);
            // Zero distance iff f is already convex over the design.
            const bool zero = dist_sup_to_convex(f, g) <= 1e-12;
            const bool member = cone_membership(ConeSpec::non_concave(), f, g).member;
            CHECK(zero == member);
        }
    }
    std::vector<double> too_short = {1.0, 2.0};
    CHECK_THROWS_AS(dist_sup_to_convex(too_short, DesignGrid({0.2, 0.8})), std::invalid_argument);
}

TEST_CASE("consecutive tuples decide all increasing tuples (n <= 8, r <= 2)") {
    std::mt19937 gen(53);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> upos(0.0, 1.0);

    for (int r = 1; r <= 2; ++r) {
        for (const char* rname : {"const1", "exp"}) {
            const RFunction R = make_rfunction(rname, 0.7);
            for (int rep = 0; rep < 40; ++rep) {
                const int n = r + 2 + rep % (7 - r);
                std::vector<double> xs(static_cast<std::size_t>(n));
                for (int i = 0; i < n; ++i) {
                    xs[static_cast<std::size_t>(i)] = (i + 1.0) / (n + 1.0) + 0.004 * unif(gen);
                }
                const DesignGrid g(xs);

                // Members: R*f sampled from functions with nonnegative r-th
                // derivative (nonnegative combinations of (x-u)_+^r plus a
                // polynomial of degree < r); pure low-degree polynomials as
                // boundary cases every fourth rep.
                std::vector<double> w(static_cast<std::size_t>(n), 0.0);
                for (int d = 0; d < r; ++d) {
                    const double c = unif(gen);
                    for (int i = 0; i < n; ++i) {
                        w[static_cast<std::size_t>(i)] +=
                            c * std::pow(xs[static_cast<std::size_t>(i)], d);
                    }
                }
                if (rep % 4 != 0) {
                    for (int m = 0; m < 3; ++m) {
                        const double c = upos(gen);
                        const double knot = upos(gen);
                        for (int i = 0; i < n; ++i) {
                            const double t = xs[static_cast<std::size_t>(i)] - knot;
                            if (t > 0) w[static_cast<std::size_t>(i)] += c * std::pow(t, r);
                        }
                    }
                }
                std::vector<double> f(static_cast<std::size_t>(n));
                for (int i = 0; i < n; ++i) {
                    f[static_cast<std::size_t>(i)] =
                        w[static_cast<std::size_t>(i)] / R(xs[static_cast<std::size_t>(i)]);
                }

                const ConeSpec spec = ConeSpec::diff_ineq(r, R, g);
                const Membership consec = cone_membership(spec, f, g, 1e-9);
                REQUIRE(consec.member);
                // Exhaustive check over all increasing (r+1)-tuples.
                std::vector<double> rf(static_cast<std::size_t>(n));
                for (int i = 0; i < n; ++i) {
                    rf[static_cast<std::size_t>(i)] =
                        R(xs[static_cast<std::size_t>(i)]) * f[static_cast<std::size_t>(i)];
                }
                oracle::for_each_tuple(n, r + 1, [&](const std::vector<int>& t0) {
                    std::vector<int> idx(t0.size());
                    for (std::size_t k = 0; k < t0.size(); ++k) idx[k] = t0[k] + 1;
                    CHECK(phi_form(g, idx, r, rf) >= -1e-9);
                });

                // Perturbed non-member: both characterizations reject it.
                std::vector<double> fbad = f;
                fbad[static_cast<std::size_t>(n / 2)] -= 2.0;
                const Membership bad = cone_membership(spec, fbad, g, 1e-9);
                if (!bad.member) {
                    bool found_negative = false;
                    std::vector<double> rfb(static_cast<std::size_t>(n));
                    for (int i = 0; i < n; ++i) {
                        rfb[static_cast<std::size_t>(i)] =
                            R(xs[static_cast<std::size_t>(i)]) * fbad[static_cast<std::size_t>(i)];
                    }
                    oracle::for_each_tuple(n, r + 1, [&](const std::vector<int>& t0) {
                        std::vector<int> idx(t0.size());
                        for (std::size_t k = 0; k < t0.size(); ++k) idx[k] = t0[k] + 1;
                        if (phi_form(g, idx, r, rfb) < -1e-9) found_negative = true;
                    });
                    CHECK(found_negative);
                }
            }
        }
    }
}
