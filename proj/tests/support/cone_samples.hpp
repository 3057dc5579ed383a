#pragma once

// Random members of each variant's null cone, for sign-correctness checks.

#include <cmath>
#include <random>
#include <vector>

#include "shapetest/directions.hpp"

namespace oracle {

inline std::vector<double> random_cone_member(const shapetest::VariantConfig& cfg,
                                              const shapetest::DesignGrid& x,
                                              std::mt19937& gen) {
    using shapetest::Variant;
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> upos(0.0, 1.0);
    const int n = cfg.n;
    std::vector<double> f(static_cast<std::size_t>(n), 0.0);
    switch (cfg.variant) {
    case Variant::Positivity:
        for (auto& v : f) v = std::fabs(unif(gen));
        break;
    case Variant::LocalMeans: {
        double acc = unif(gen);
        for (auto& v : f) {
            v = acc;
            acc += std::fabs(unif(gen));
        }
        break;
    }
    case Variant::Convexity: {
        // Piecewise-linear convex: a + b x + sum c_m (x - u_m)_+ with c_m >= 0.
        const double a = unif(gen), b = 2.0 * unif(gen);
        std::vector<std::pair<double, double>> hinges;
        for (int m = 0; m < 4; ++m) hinges.emplace_back(upos(gen), upos(gen));
        for (int i = 0; i < n; ++i) {
            const double xi = x.x[static_cast<std::size_t>(i)];
            double v = a + b * xi;
            for (const auto& [knot, c] : hinges) {
                if (xi > knot) v += c * (xi - knot);
            }
            f[static_cast<std::size_t>(i)] = v;
        }
        break;
    }
    case Variant::LocalGradients:
    case Variant::DiffIneq: {
        const int r = cfg.variant == Variant::LocalGradients ? 1 : cfg.r;
        // R*f = polynomial of degree < r plus nonnegative combinations of
        // (x - u)_+^r, so the r-th derivative of R*F is nonnegative.
        std::vector<double> coef(static_cast<std::size_t>(r));
        for (auto& c : coef) c = unif(gen);
        for (int i = 0; i < n; ++i) {
            const double xi = x.x[static_cast<std::size_t>(i)];
            double w = 0.0;
            for (int d = 0; d < r; ++d) w += coef[static_cast<std::size_t>(d)] * std::pow(xi, d);
            f[static_cast<std::size_t>(i)] = w;
        }
        std::vector<std::pair<double, double>> hinges;
        for (int m = 0; m < 4; ++m) hinges.emplace_back(upos(gen), upos(gen));
        for (int i = 0; i < n; ++i) {
            const double xi = x.x[static_cast<std::size_t>(i)];
            double w = 0.0;
            for (const auto& [knot, c] : hinges) {
                if (xi > knot) w += c * std::pow(xi - knot, r);
            }
            f[static_cast<std::size_t>(i)] =
                (f[static_cast<std::size_t>(i)] + w) / cfg.R(xi);
        }
        break;
    }
    }
    return f;
}

// Hand-picked extreme rays per variant (boundary members of the cone).
inline std::vector<std::vector<double>> extreme_cone_members(const shapetest::VariantConfig& cfg,
                                                             const shapetest::DesignGrid& x) {
    using shapetest::Variant;
    const int n = cfg.n;
    std::vector<std::vector<double>> out;
    std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
    out.push_back(zero);
    switch (cfg.variant) {
    case Variant::Positivity: {
        std::vector<double> spike = zero;
        spike[static_cast<std::size_t>(n / 2)] = 1.0;
        out.push_back(spike);
        break;
    }
    case Variant::LocalMeans: {
        std::vector<double> step = zero;
        for (int i = n / 2; i < n; ++i) step[static_cast<std::size_t>(i)] = 1.0;
        out.push_back(step);
        out.push_back(std::vector<double>(static_cast<std::size_t>(n), 3.0));
        break;
    }
    case Variant::Convexity: {
        std::vector<double> hinge(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            hinge[static_cast<std::size_t>(i)] =
                std::max(0.0, x.x[static_cast<std::size_t>(i)] - 0.5);
        }
        out.push_back(hinge);
        break;
    }
    case Variant::LocalGradients:
    case Variant::DiffIneq: {
        const int r = cfg.variant == Variant::LocalGradients ? 1 : cfg.r;
        std::vector<double> hinge(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double xi = x.x[static_cast<std::size_t>(i)];
            hinge[static_cast<std::size_t>(i)] =
                std::pow(std::max(0.0, xi - 0.37), r) / cfg.R(xi);
        }
        out.push_back(hinge);
        break;
    }
    }
    return out;
}

}  // namespace oracle
