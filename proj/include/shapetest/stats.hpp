#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace shapetest::stats {

// Upper-tail standard normal quantile: returns z with P(Z > z) = u.
// Rational approximation (Acklam) refined by one Halley step on erfc;
// absolute error well below 1e-10 over u in (0,1).
double normal_upper_quantile(double u);

// k-th ascending order statistic with k = ceil(p * N), 1-based.
// Throws std::invalid_argument on an empty sample or p outside ]0,1[.
double empirical_quantile(std::span<const double> sample, double p);

// Upper-tail quantile of the noncentral chi-square with `dof` degrees of
// freedom and noncentrality `lambda` (= ||mu||^2), estimated from `reps`
// Monte-Carlo draws of ||z + mu||^2 on a deterministic stream.
double noncentral_chi2_upper_quantile_mc(int dof, double lambda, double u,
                                         int reps, std::uint64_t key);

}  // namespace shapetest::stats
