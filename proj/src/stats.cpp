#include "shapetest/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "shapetest/parallel.hpp"
#include "shapetest/rng.hpp"

namespace shapetest::stats {

namespace {

// Acklam's rational approximation to the standard normal quantile,
// relative error < 1.15e-9 before refinement.
double norm_quantile_acklam(double p) {
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;

    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / 1.4142135623730950488016887242097);
}

}  // namespace

double normal_upper_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw std::invalid_argument("normal_upper_quantile: u must lie in ]0,1[");
    }
    double x = norm_quantile_acklam(1.0 - u);
    // One Halley step against the exact CDF.
    const double e = norm_cdf(x) - (1.0 - u);
    const double phi = std::exp(-0.5 * x * x) / 2.5066282746310005024157652848110;
    const double w = e / phi;
    x -= w / (1.0 + 0.5 * x * w);
    return x;
}

double empirical_quantile(std::span<const double> sample, double p) {
    if (sample.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("empirical_quantile: p must lie in ]0,1[");
    }
    const std::size_t n = sample.size();
    // Guard against p*n landing a hair above an integer it should equal.
    auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-9));
    if (k < 1) k = 1;
    if (k > n) k = n;
    std::vector<double> work(sample.begin(), sample.end());
    std::nth_element(work.begin(), work.begin() + (k - 1), work.end());
    return work[k - 1];
}

double noncentral_chi2_upper_quantile_mc(int dof, double lambda, double u,
                                         int reps, std::uint64_t key) {
    if (dof < 1) throw std::invalid_argument("noncentral_chi2: dof must be >= 1");
    if (lambda < 0.0) throw std::invalid_argument("noncentral_chi2: lambda must be >= 0");
    if (reps < 1) throw std::invalid_argument("noncentral_chi2: reps must be >= 1");
    const double shift = std::sqrt(lambda);
    std::vector<double> draws(static_cast<std::size_t>(reps));
    par::run_indexed(reps, [&](std::int64_t i) {
        rng::GaussianStream g(key, static_cast<std::uint64_t>(i));
        double s = 0.0;
        // Rotation invariance: put the whole mean on the first coordinate.
        const double z0 = g.next() + shift;
        s += z0 * z0;
        for (int d = 1; d < dof; ++d) {
            const double z = g.next();
            s += z * z;
        }
        draws[static_cast<std::size_t>(i)] = s;
    });
    return empirical_quantile(draws, 1.0 - u);
}

}  // namespace shapetest::stats
