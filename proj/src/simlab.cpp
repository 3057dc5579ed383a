#include "shapetest/simlab.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "shapetest/parallel.hpp"
#include "shapetest/rng.hpp"

namespace shapetest::simlab {

std::string error_law_name(ErrorLaw law) {
    switch (law) {
    case ErrorLaw::Gaussian: return "gaussian";
    case ErrorLaw::TypeI:    return "type-i";
    case ErrorLaw::Mixture:  return "mixture";
    }
    throw std::logic_error("error_law_name: unreachable");
}

ErrorLaw error_law_from_name(const std::string& name) {
    if (name == "gaussian") return ErrorLaw::Gaussian;
    if (name == "type-i" || name == "typei" || name == "type1") return ErrorLaw::TypeI;
    if (name == "mixture") return ErrorLaw::Mixture;
    throw std::invalid_argument("unknown error law '" + name + "' (gaussian|type-i|mixture)");
}

std::function<double(double)> test_function(const std::string& name, std::optional<double> a,
                                            double sigma) {
    if (name == "F0") return [](double) { return 0.0; };
    if (name == "F1") {
        return [](double x) {
            const double c = x - 0.5;
            const double cube = x <= 0.5 ? 15.0 * c * c * c : 0.0;
            return cube + 0.3 * c - std::exp(-250.0 * (x - 0.25) * (x - 0.25));
        };
    }
    if (name == "F2") {
        const double slope = a.value_or(1.5 * sigma);
        return [slope](double x) { return -slope * x; };
    }
    if (name == "F3") {
        const double depth = a.value_or(0.2);
        return [depth](double x) { return -depth * std::exp(-50.0 * (x - 0.5) * (x - 0.5)); };
    }
    if (name == "F4") return [](double x) { return 0.1 * std::cos(6.0 * 3.14159265358979323846 * x); };
    if (name == "F5") {
        const auto f3 = test_function("F3", a, sigma);
        return [f3](double x) { return 0.2 * x + f3(x); };
    }
    if (name == "F6") {
        const auto f4 = test_function("F4", std::nullopt, sigma);
        return [f4](double x) { return 0.2 * x + f4(x); };
    }
    if (name == "F7") {
        if (!a.has_value()) throw std::invalid_argument("test_function: F7 requires amplitude a");
        const double depth = *a;
        return [depth](double x) {
            return 1.0 + x - depth * std::exp(-50.0 * (x - 0.5) * (x - 0.5));
        };
    }
    throw std::invalid_argument("test_function: unknown function '" + name + "' (F0..F7)");
}

namespace {

// Type I standardization: mean and sd of the Gumbel density exp(-x-exp(-x)).
constexpr double kEulerGamma = 0.57721566490153286;
const double kGumbelSd = 3.14159265358979323846 / std::sqrt(6.0);

// Mixture scale: 0.9 * 2.43 s + 0.1 * 25 s = 1.
constexpr double kMixtureS = 1.0 / 4.687;

}  // namespace

void sample_errors(ErrorLaw law, std::span<double> out, std::uint64_t key,
                   std::uint64_t stream) {
    switch (law) {
    case ErrorLaw::Gaussian: {
        rng::GaussianStream g(key, stream);
        g.fill(out.data(), static_cast<int>(out.size()));
        return;
    }
    case ErrorLaw::TypeI: {
        rng::Philox4x32 p(key, stream);
        for (double& v : out) {
            const double u = p.next_unit();
            const double gumbel = -std::log(-std::log(u));
            v = (gumbel - kEulerGamma) / kGumbelSd;
        }
        return;
    }
    case ErrorLaw::Mixture: {
        const double sd_narrow = std::sqrt(2.43 * kMixtureS);
        const double sd_wide = std::sqrt(25.0 * kMixtureS);
        rng::Philox4x32 p(key, stream);
        // Three uniforms per draw: Bernoulli(0.9) selector, Box-Muller pair.
        for (double& v : out) {
            const double pick = p.next_unit();
            const double u1 = p.next_unit();
            const double u2 = p.next_unit();
            const double z = std::sqrt(-2.0 * std::log(u1)) *
                             std::cos(6.283185307179586476925286766559 * u2);
            v = z * (pick < 0.9 ? sd_narrow : sd_wide);
        }
        return;
    }
    }
    throw std::logic_error("sample_errors: unreachable");
}

std::vector<double> sample_errors(ErrorLaw law, int n, std::uint64_t key, std::uint64_t stream) {
    std::vector<double> out(static_cast<std::size_t>(n));
    sample_errors(law, out, key, stream);
    return out;
}

VariantConfig ScenarioConfig::variant_config() const {
    const Variant v = variant_from_name(test);
    switch (v) {
    case Variant::Positivity:     return VariantConfig::positivity(n, ell_n);
    case Variant::LocalMeans:     return VariantConfig::local_means(n, ell_n);
    case Variant::Convexity:      return VariantConfig::convexity(n, ell_n);
    case Variant::LocalGradients: return VariantConfig::local_gradients(n, ell_n);
    case Variant::DiffIneq:
        throw std::invalid_argument("ScenarioConfig: diffineq scenarios need explicit r/R; "
                                    "use the library API");
    }
    throw std::logic_error("variant_config: unreachable");
}

std::uint64_t ScenarioConfig::noise_id() const {
    // FNV-1a over the noise-defining fields only (not test/ell_n/alpha).
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](const std::string& s) {
        for (const unsigned char c : s) {
            h ^= c;
            h *= 0x100000001B3ULL;
        }
        h ^= '|';
        h *= 0x100000001B3ULL;
    };
    mix(function);
    if (a.has_value()) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", *a);
        mix(buf);
    }
    mix(error_law_name(law));
    mix(std::to_string(n));
    return h;
}

SimulationResult estimate_rejection_rate(const ScenarioConfig& cfg,
                                         const StatisticEngine& engine,
                                         const NullCalibration& cal,
                                         std::uint64_t study_seed) {
    if (cfg.n_rep < 1) throw std::invalid_argument("estimate_rejection_rate: n_rep must be >= 1");
    cal.require_matches(engine.config(), engine.design());
    const auto t0 = std::chrono::steady_clock::now();

    const DesignGrid& x = engine.design();
    const double sigma = std::sqrt(cfg.sigma2);
    const auto F = test_function(cfg.function, cfg.a, sigma);
    std::vector<double> mean(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) {
        mean[static_cast<std::size_t>(i)] = F(x.x[static_cast<std::size_t>(i)]);
    }

    // Per-scale q(ell, u_alpha) lookup in scale order.
    std::vector<double> q(cal.scales.size());
    for (std::size_t s = 0; s < cal.scales.size(); ++s) q[s] = cal.q_at_u_alpha(cal.scales[s]);

    const std::uint64_t key =
        rng::derive_key(study_seed ^ cfg.noise_id(), rng::purpose::kSimulation);
    std::vector<signed char> rejected(static_cast<std::size_t>(cfg.n_rep), 0);
    par::run_chunked(cfg.n_rep, [&](std::int64_t begin, std::int64_t end) {
        StatisticEngine::Workspace ws = engine.make_workspace();
        StatisticEngine::Eval ev;
        std::vector<double> y(static_cast<std::size_t>(cfg.n));
        for (std::int64_t rep = begin; rep < end; ++rep) {
            sample_errors(cfg.law, y, key, static_cast<std::uint64_t>(rep));
            for (int i = 0; i < cfg.n; ++i) {
                y[static_cast<std::size_t>(i)] =
                    mean[static_cast<std::size_t>(i)] + sigma * y[static_cast<std::size_t>(i)];
            }
            engine.evaluate(y, ev, ws);
            bool rej = false;
            for (std::size_t s = 0; s < q.size(); ++s) {
                if (ev.value[s] - q[s] > 0.0) { rej = true; break; }
            }
            rejected[static_cast<std::size_t>(rep)] = rej ? 1 : 0;
        }
    });

    int count = 0;
    for (const signed char r : rejected) count += r;
    SimulationResult res;
    res.n_rep = cfg.n_rep;
    res.rate = static_cast<double>(count) / cfg.n_rep;
    res.std_error = std::sqrt(res.rate * (1.0 - res.rate) / cfg.n_rep);
    res.runtime_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0).count();
    return res;
}

double study_sigma2(const std::string& function) {
    if (function == "F0" || function == "F1" || function == "F2" || function == "F3" ||
        function == "F4") {
        return 0.01;
    }
    if (function == "F5") return 0.004;
    if (function == "F6") return 0.006;
    throw std::invalid_argument("study_sigma2: no registry value for '" + function + "'");
}

}  // namespace shapetest::simlab
