#include "shapetest/testkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "shapetest/rng.hpp"
#include "shapetest/stats.hpp"

namespace shapetest {

std::string TestReport::to_json(int indent) const {
    nlohmann::json j;
    j["variant"] = variant;
    j["n"] = n;
    j["alpha"] = alpha;
    j["u_alpha"] = u_alpha;
    j["statistic"] = statistic;
    j["sigma_hat"] = sigma_hat;
    j["decision"] = reject ? "reject" : "accept";
    nlohmann::json w;
    w["scale"] = witness.scale;
    w["blocks"] = std::vector<int>(witness.blocks.begin(),
                                   witness.blocks.begin() + witness.tag_size);
    w["x_lo"] = witness.x_lo;
    w["x_hi"] = witness.x_hi;
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& s : witness.block_spans) spans.push_back({s[0], s[1]});
    w["block_spans"] = spans;
    j["witness"] = w;
    nlohmann::json rows = nlohmann::json::array();
    for (const PerScaleRow& r : per_scale) {
        rows.push_back({{"scale", r.scale},
                        {"t_value", r.t_value},
                        {"q", r.q},
                        {"exceedance", r.exceedance}});
    }
    j["per_scale"] = rows;
    return j.dump(indent);
}

std::map<int, double> statistic_per_scale(std::span<const double> scores,
                                          const DirectionSet& dirs) {
    if (scores.size() != dirs.dirs.size()) {
        throw std::invalid_argument("statistic_per_scale: scores/directions size mismatch");
    }
    std::map<int, double> out;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int ell = dirs.dirs[i].scale;
        auto it = out.find(ell);
        if (it == out.end()) {
            out.emplace(ell, scores[i]);
        } else if (scores[i] > it->second) {
            it->second = scores[i];
        }
    }
    for (const int ell : dirs.scales) {
        if (out.find(ell) == out.end()) {
            throw std::invalid_argument("statistic_per_scale: scale " + std::to_string(ell) +
                                        " carries no direction");
        }
    }
    return out;
}

TestReport evaluate_test(std::span<const double> y, const StatisticEngine& engine,
                         const NullCalibration& cal) {
    if (!(cal.alpha > 0.0 && cal.alpha < 0.5)) {
        throw std::invalid_argument("evaluate_test: calibration alpha must lie in ]0,1/2[");
    }
    cal.require_matches(engine.config(), engine.design());
    if (static_cast<int>(y.size()) != engine.n()) {
        throw std::invalid_argument("evaluate_test: y has length " + std::to_string(y.size()) +
                                    ", calibration expects n=" + std::to_string(cal.n));
    }
    if (cal.scales != engine.scales()) {
        throw std::invalid_argument("evaluate_test: calibration scale set mismatch");
    }

    const StatisticEngine::Eval ev = engine.evaluate(y);

    TestReport rep;
    rep.variant = cal.variant;
    rep.n = cal.n;
    rep.alpha = cal.alpha;
    rep.u_alpha = cal.u_alpha;
    rep.sigma_hat = ev.sigma_hat;
    rep.per_scale.reserve(cal.scales.size());

    int best_si = -1;
    double best = 0.0;
    for (std::size_t si = 0; si < cal.scales.size(); ++si) {
        const int ell = cal.scales[si];
        const double q = cal.q_at_u_alpha(ell);
        const double exc = ev.value[si] - q;
        rep.per_scale.push_back({ell, ev.value[si], q, exc});
        if (best_si < 0 || exc > best) {
            best = exc;
            best_si = static_cast<int>(si);
        }
    }
    rep.statistic = best;
    rep.reject = best > 0.0;

    const std::array<int, 3> tag = engine.tag_at(best_si, ev.argmax[static_cast<std::size_t>(best_si)]);
    WitnessInfo w;
    w.scale = cal.scales[static_cast<std::size_t>(best_si)];
    w.blocks = tag;
    w.tag_size = engine.tag_size();
    const Partition& part = engine.family().at(w.scale);
    for (int t = 0; t < w.tag_size; ++t) {
        const Block& b = part.blocks[static_cast<std::size_t>(tag[static_cast<std::size_t>(t)] - 1)];
        const double lo = engine.design().x[static_cast<std::size_t>(b.lo - 1)];
        const double hi = engine.design().x[static_cast<std::size_t>(b.hi - 1)];
        w.block_spans.push_back({lo, hi});
    }
    w.x_lo = w.block_spans.front()[0];
    w.x_hi = w.block_spans.back()[1];
    rep.witness = w;
    return rep;
}

CombinedMonotonicityReport combined_monotonicity_test(std::span<const double> y,
                                                      const DesignGrid& x,
                                                      const NullCalibration& cal_lm,
                                                      const NullCalibration& cal_lg) {
    if (cal_lm.variant != "mono-lm" || cal_lg.variant != "mono-lg") {
        throw std::invalid_argument("combined_monotonicity_test: calibrations must be mono-lm and mono-lg");
    }
    if (cal_lm.n != cal_lg.n || cal_lm.ell_n != cal_lg.ell_n || cal_lm.alpha != cal_lg.alpha) {
        throw std::invalid_argument(
            "combined_monotonicity_test: calibrations must share (n, ell_n, alpha)");
    }
    const StatisticEngine lm(VariantConfig::local_means(cal_lm.n, cal_lm.ell_n), x);
    const StatisticEngine lg(VariantConfig::local_gradients(cal_lg.n, cal_lg.ell_n), x);
    CombinedMonotonicityReport rep;
    rep.local_means = evaluate_test(y, lm, cal_lm);
    rep.local_gradients = evaluate_test(y, lg, cal_lg);
    rep.reject = rep.local_means.reject || rep.local_gradients.reject;
    rep.level = 2.0 * cal_lm.alpha;
    return rep;
}

SmoothnessReport smoothness_test(std::span<const double> y, const DesignGrid& x, int r,
                                 double L, const NullCalibration& cal) {
    if (r < 1) throw std::invalid_argument("smoothness_test: r must be >= 1");
    if (!(L > 0.0)) throw std::invalid_argument("smoothness_test: L must be positive");
    if (cal.variant != "diffineq" || cal.r != r || cal.rfun != "const1") {
        throw std::invalid_argument(
            "smoothness_test: calibration must be diffineq with matching order and R = 1");
    }
    const StatisticEngine engine(cal.variant_config(), x);
    double rfact = 1.0;
    for (int k = 2; k <= r; ++k) rfact *= k;

    std::vector<double> upper(y.size()), lower(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double shift = L * std::pow(x.x[i], r) / rfact;
        upper[i] = -y[i] + shift;
        lower[i] = y[i] + shift;
    }
    SmoothnessReport rep;
    rep.r = r;
    rep.bound = L;
    rep.upper = evaluate_test(upper, engine, cal);
    rep.lower = evaluate_test(lower, engine, cal);
    rep.reject = rep.upper.reject || rep.lower.reject;
    rep.level = 2.0 * cal.alpha;
    return rep;
}

double power_witness_bound(std::span<const double> f, double sigma, double beta,
                           const Direction& dir, const NullCalibration& cal,
                           const NuisanceSpace& V, int mc_reps, std::uint64_t seed) {
    if (!(beta > 0.0 && beta < 1.0)) {
        throw std::invalid_argument("power_witness_bound: beta must lie in ]0,1[");
    }
    if (!(sigma > 0.0)) throw std::invalid_argument("power_witness_bound: sigma must be positive");
    const int dof = V.n() - V.dim();
    const double rnorm = V.residual_norm(f);
    const double lambda = (rnorm * rnorm) / (sigma * sigma);
    const double q_t = cal.q_at_u_alpha(dir.scale);
    const double chi_q = stats::noncentral_chi2_upper_quantile_mc(
        dof, lambda, beta / 2.0, mc_reps, rng::derive_key(seed, rng::purpose::kChi2));
    const double gauss_q = stats::normal_upper_quantile(beta / 2.0);
    return (q_t * std::sqrt(chi_q) / std::sqrt(static_cast<double>(dof)) + gauss_q) * sigma;
}

}  // namespace shapetest
