#pragma once

// Simulation lab: test functions F0..F7, the three error laws, and
// level/power estimation over scenario grids.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shapetest/calibration.hpp"
#include "shapetest/engine.hpp"

namespace shapetest::simlab {

enum class ErrorLaw { Gaussian, TypeI, Mixture };

std::string error_law_name(ErrorLaw law);
ErrorLaw error_law_from_name(const std::string& name);

// F0..F7 on [0,1].  `a` overrides the amplitude where one exists:
//   F2: slope magnitude, default 1.5*sigma
//   F3: dip depth, default 0.2
//   F7: dip depth, required
// sigma feeds only F2's default.
std::function<double(double)> test_function(const std::string& name, std::optional<double> a,
                                            double sigma);

// Deterministic i.i.d. draws with mean 0 and variance 1 on stream
// (key, stream).  TypeI standardizes a Gumbel by its mean (Euler constant)
// and sd pi/sqrt(6); the mixture uses component variances 2.43s and 25s
// with s = 1/4.687 and a Bernoulli(0.9) selector.
void sample_errors(ErrorLaw law, std::span<double> out, std::uint64_t key,
                   std::uint64_t stream);
std::vector<double> sample_errors(ErrorLaw law, int n, std::uint64_t key,
                                  std::uint64_t stream = 0);

struct ScenarioConfig {
    std::string function;       // F0..F7
    std::optional<double> a;    // amplitude override
    double sigma2 = 0.01;
    ErrorLaw law = ErrorLaw::Gaussian;
    int n = 100;                // design rule x_i = i/(n+1)
    int ell_n = 25;
    std::string test = "mono-lm";
    double alpha = 0.05;
    int n_rep = 1000;

    VariantConfig variant_config() const;
    // Identifier of the noise process: scenarios differing only in the test
    // or ell_n share replicate noise, so comparisons are paired.
    std::uint64_t noise_id() const;
};

struct SimulationResult {
    double rate = 0.0;
    double std_error = 0.0;  // sqrt(p(1-p)/N)
    int n_rep = 0;
    double runtime_ms = 0.0;
};

// Simulates Y_i = F(x_i) + sigma eps_i per replicate on the stream
// (study_seed, noise_id, replicate) and counts rejections.  The engine and
// calibration must match the scenario.
SimulationResult estimate_rejection_rate(const ScenarioConfig& cfg,
                                         const StatisticEngine& engine,
                                         const NullCalibration& cal,
                                         std::uint64_t study_seed);

// The sigma^2 registry of the study (F0..F6).
double study_sigma2(const std::string& function);

}  // namespace shapetest::simlab
