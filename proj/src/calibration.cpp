#include "shapetest/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "shapetest/errors.hpp"
#include "shapetest/parallel.hpp"
#include "shapetest/rng.hpp"

namespace shapetest {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

NullScoreMatrix simulate_null_scores(const StatisticEngine& engine, int n_sim,
                                     std::uint64_t key) {
    if (n_sim < 1) throw std::invalid_argument("simulate_null_scores: n_sim must be >= 1");
    NullScoreMatrix m;
    m.scales = engine.scales();
    m.rows = n_sim;
    m.data.resize(static_cast<std::size_t>(n_sim) * m.scales.size());
    const int n = engine.n();
    const std::size_t ns = m.scales.size();

    std::vector<signed char> failed(static_cast<std::size_t>(n_sim), 0);
    par::run_chunked(n_sim, [&](std::int64_t begin, std::int64_t end) {
        StatisticEngine::Workspace ws = engine.make_workspace();
        StatisticEngine::Eval ev;
        std::vector<double> eps(static_cast<std::size_t>(n));
        for (std::int64_t row = begin; row < end; ++row) {
            rng::GaussianStream g(key, static_cast<std::uint64_t>(row));
            g.fill(eps.data(), n);
            try {
                engine.evaluate(eps, ev, ws);
            } catch (const ZeroResidualError&) {
                failed[static_cast<std::size_t>(row)] = 1;
                continue;
            }
            double* dst = m.data.data() + static_cast<std::size_t>(row) * ns;
            std::copy(ev.value.begin(), ev.value.end(), dst);
        }
    });
    for (std::size_t row = 0; row < failed.size(); ++row) {
        if (failed[row]) {
            // Probability-zero for continuous draws; abort with a diagnostic.
            throw CalibrationError("simulate_null_scores: degenerate residual in null draw " +
                                   std::to_string(row));
        }
    }
    return m;
}

std::vector<double> make_u_grid(double alpha, int ell_n, int points) {
    if (!(alpha > 0.0 && alpha < 0.5)) {
        throw std::invalid_argument("make_u_grid: alpha must lie in ]0,1/2[");
    }
    if (ell_n < 1 || points < 1) throw std::invalid_argument("make_u_grid: bad arguments");
    std::vector<double> grid(static_cast<std::size_t>(points));
    if (points == 1 || ell_n == 1) {
        std::fill(grid.begin(), grid.end(), alpha);
        return grid;
    }
    const double log_ratio = -std::log(static_cast<double>(ell_n));
    for (int i = 0; i < points; ++i) {
        grid[static_cast<std::size_t>(i)] =
            alpha * std::exp(log_ratio * static_cast<double>(i) / (points - 1));
    }
    grid.back() = alpha / ell_n;  // exact endpoints
    grid.front() = alpha;
    return grid;
}

QuantileTable estimate_quantile_table(const NullScoreMatrix& scores,
                                      std::vector<double> u_grid) {
    if (u_grid.empty()) throw std::invalid_argument("estimate_quantile_table: empty u grid");
    const double u_min = *std::min_element(u_grid.begin(), u_grid.end());
    if (static_cast<double>(scores.rows) < 1.0 / u_min) {
        std::cerr << "[shapetest] warning: " << scores.rows
                  << " null rows resolve tail probabilities only down to "
                  << fmt17(1.0 / scores.rows) << "; smallest grid u is " << fmt17(u_min) << "\n";
    }
    QuantileTable t;
    t.scales = scores.scales;
    t.u_grid = std::move(u_grid);
    t.q.resize(t.scales.size() * t.u_grid.size());
    std::vector<double> col(static_cast<std::size_t>(scores.rows));
    for (std::size_t s = 0; s < t.scales.size(); ++s) {
        for (int r = 0; r < scores.rows; ++r) {
            col[static_cast<std::size_t>(r)] = scores.at(r, static_cast<int>(s));
        }
        std::sort(col.begin(), col.end());
        for (std::size_t ui = 0; ui < t.u_grid.size(); ++ui) {
            const double p = 1.0 - t.u_grid[ui];
            auto k = static_cast<std::size_t>(
                std::ceil(p * static_cast<double>(scores.rows) - 1e-9));
            if (k < 1) k = 1;
            if (k > static_cast<std::size_t>(scores.rows)) k = static_cast<std::size_t>(scores.rows);
            t.q[s * t.u_grid.size() + ui] = col[k - 1];
        }
    }
    return t;
}

UAlphaChoice calibrate_u_alpha(const QuantileTable& table, double alpha,
                               const NullScoreMatrix& independent) {
    if (independent.scales != table.scales) {
        throw std::invalid_argument("calibrate_u_alpha: scale sets differ");
    }
    const std::size_t ns = table.scales.size();
    const std::size_t nu = table.u_grid.size();
    // Exceedance counts per grid point in one pass over the rows.
    std::vector<int> count(nu, 0);
    for (int r = 0; r < independent.rows; ++r) {
        for (std::size_t ui = 0; ui < nu; ++ui) {
            for (std::size_t s = 0; s < ns; ++s) {
                if (independent.at(r, static_cast<int>(s)) > table.at(static_cast<int>(s),
                                                                      static_cast<int>(ui))) {
                    ++count[ui];
                    break;
                }
            }
        }
    }
    // Grid is descending: the first admissible index is the largest u.
    for (std::size_t ui = 0; ui < nu; ++ui) {
        const double p = static_cast<double>(count[ui]) / independent.rows;
        if (p <= alpha) {
            return UAlphaChoice{table.u_grid[ui], static_cast<int>(ui), p};
        }
    }
    throw CalibrationError(
        "calibrate_u_alpha: no grid point satisfies p_hat <= alpha (smallest p_hat " +
        fmt17(static_cast<double>(count[nu - 1]) / independent.rows) + " at u " +
        fmt17(table.u_grid[nu - 1]) + "); Monte-Carlo pathology, refusing the floor");
}

// ---------------------------------------------------------------------------
// NullCalibration
// ---------------------------------------------------------------------------

std::string NullCalibration::content_hash() const {
    std::string id = variant;
    if (variant == "diffineq") {
        id += ":r=" + std::to_string(r) + ":R=" + rfun;
        if (rfun != "const1") id += ":a=" + fmt17(rfun_a);
    }
    const std::string canon = "v" + std::to_string(format_version) + "|" + id + "|" +
                              std::to_string(n) + "|" + std::to_string(ell_n) + "|" +
                              (design_dependent ? "1" : "0") + "|" + std::to_string(seed) + "|" +
                              std::to_string(table_key) + "|" + std::to_string(search_key) + "|" +
                              std::to_string(n_sim_table) + "|" + std::to_string(n_sim_search);
    return hex64(fnv1a64(canon));
}

double NullCalibration::q_at(int scale, int u_index) const {
    const auto it = std::find(scales.begin(), scales.end(), scale);
    if (it == scales.end()) throw std::invalid_argument("NullCalibration: unknown scale");
    const std::size_t s = static_cast<std::size_t>(it - scales.begin());
    return q_table[s * u_grid.size() + static_cast<std::size_t>(u_index)];
}

double NullCalibration::q_at_u_alpha(int scale) const { return q_at(scale, u_alpha_index); }

VariantConfig NullCalibration::variant_config() const {
    const Variant v = variant_from_name(variant);
    switch (v) {
    case Variant::Positivity:     return VariantConfig::positivity(n, ell_n);
    case Variant::LocalMeans:     return VariantConfig::local_means(n, ell_n);
    case Variant::Convexity:      return VariantConfig::convexity(n, ell_n);
    case Variant::LocalGradients: return VariantConfig::local_gradients(n, ell_n);
    case Variant::DiffIneq:
        return VariantConfig::diff_ineq(n, ell_n, r, make_rfunction(rfun, rfun_a));
    }
    throw std::logic_error("variant_config: unreachable");
}

void NullCalibration::save(const std::string& path) const {
    if (n_sim_table < 1000 || n_sim_search < 1000) {
        throw std::invalid_argument("NullCalibration::save: refusing to persist a calibration "
                                    "with fewer than 1000 rows per batch");
    }
    std::ostringstream os;
    os << "{\n";
    os << "  \"format_version\": " << format_version << ",\n";
    os << "  \"variant\": \"" << variant << "\",\n";
    os << "  \"n\": " << n << ",\n";
    os << "  \"ell_n\": " << ell_n << ",\n";
    os << "  \"alpha\": " << fmt17(alpha) << ",\n";
    if (variant == "diffineq") {
        os << "  \"r\": " << r << ",\n";
        os << "  \"rfun\": \"" << rfun << "\",\n";
        os << "  \"rfun_a\": " << fmt17(rfun_a) << ",\n";
    }
    os << "  \"design_dependent\": " << (design_dependent ? "true" : "false") << ",\n";
    if (design_dependent) {
        os << "  \"design\": [";
        for (std::size_t i = 0; i < design.size(); ++i) {
            if (i) os << ", ";
            os << fmt17(design[i]);
        }
        os << "],\n";
    }
    os << "  \"seed\": " << seed << ",\n";
    os << "  \"table_key\": " << table_key << ",\n";
    os << "  \"search_key\": " << search_key << ",\n";
    os << "  \"n_sim_table\": " << n_sim_table << ",\n";
    os << "  \"n_sim_search\": " << n_sim_search << ",\n";
    os << "  \"content_hash\": \"" << content_hash() << "\",\n";
    os << "  \"scales\": [";
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (i) os << ", ";
        os << scales[i];
    }
    os << "],\n";
    os << "  \"u_grid\": [";
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
        if (i) os << ", ";
        os << fmt17(u_grid[i]);
    }
    os << "],\n";
    os << "  \"q_table\": [\n";
    for (std::size_t s = 0; s < scales.size(); ++s) {
        os << "    [";
        for (std::size_t ui = 0; ui < u_grid.size(); ++ui) {
            if (ui) os << ", ";
            os << fmt17(q_table[s * u_grid.size() + ui]);
        }
        os << (s + 1 < scales.size() ? "],\n" : "]\n");
    }
    os << "  ],\n";
    os << "  \"u_alpha\": " << fmt17(u_alpha) << ",\n";
    os << "  \"u_alpha_index\": " << u_alpha_index << ",\n";
    os << "  \"p_hat\": " << fmt17(p_hat) << "\n";
    os << "}\n";

    // Atomic write: temp file then rename, so concurrent readers never see a
    // partial document.
    const std::string tmp = path + ".tmp." + std::to_string(rng::mix64(seed ^ table_key));
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("NullCalibration::save: cannot open " + tmp);
        const std::string body = os.str();
        f.write(body.data(), static_cast<std::streamsize>(body.size()));
        if (!f) throw std::runtime_error("NullCalibration::save: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

NullCalibration NullCalibration::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("NullCalibration::load: cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("NullCalibration::load: " + path + " is not valid JSON: " +
                                 e.what());
    }
    NullCalibration c;
    try {
        c.format_version = j.at("format_version").get<int>();
        c.variant = j.at("variant").get<std::string>();
        c.n = j.at("n").get<int>();
        c.ell_n = j.at("ell_n").get<int>();
        c.alpha = j.at("alpha").get<double>();
        if (c.variant == "diffineq") {
            c.r = j.at("r").get<int>();
            c.rfun = j.at("rfun").get<std::string>();
            c.rfun_a = j.at("rfun_a").get<double>();
        }
        c.design_dependent = j.at("design_dependent").get<bool>();
        if (c.design_dependent) c.design = j.at("design").get<std::vector<double>>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.table_key = j.at("table_key").get<std::uint64_t>();
        c.search_key = j.at("search_key").get<std::uint64_t>();
        c.n_sim_table = j.at("n_sim_table").get<int>();
        c.n_sim_search = j.at("n_sim_search").get<int>();
        c.scales = j.at("scales").get<std::vector<int>>();
        c.u_grid = j.at("u_grid").get<std::vector<double>>();
        for (const auto& row : j.at("q_table")) {
            for (const auto& v : row) c.q_table.push_back(v.get<double>());
        }
        c.u_alpha = j.at("u_alpha").get<double>();
        c.u_alpha_index = j.at("u_alpha_index").get<int>();
        c.p_hat = j.at("p_hat").get<double>();
        const std::string recorded = j.at("content_hash").get<std::string>();
        if (recorded != c.content_hash()) {
            throw std::runtime_error("content hash mismatch (file edited or corrupted)");
        }
        if (c.q_table.size() != c.scales.size() * c.u_grid.size()) {
            throw std::runtime_error("q_table shape does not match scales x u_grid");
        }
    } catch (const std::exception& e) {
        throw std::runtime_error("NullCalibration::load: " + path + ": " + e.what());
    }
    return c;
}

void NullCalibration::require_matches(const VariantConfig& cfg, const DesignGrid& x) const {
    if (cfg.id() != variant_config().id()) {
        throw std::invalid_argument("calibration mismatch: file is for " + variant_config().id() +
                                    ", requested " + cfg.id());
    }
    if (cfg.n != n || cfg.ell_n != ell_n) {
        throw std::invalid_argument("calibration mismatch: file is for n=" + std::to_string(n) +
                                    ", ell_n=" + std::to_string(ell_n) + "; data has n=" +
                                    std::to_string(cfg.n) + ", ell_n=" + std::to_string(cfg.ell_n));
    }
    if (design_dependent) {
        if (x.n() != static_cast<int>(design.size())) {
            throw std::invalid_argument("calibration mismatch: stored design length differs");
        }
        for (std::size_t i = 0; i < design.size(); ++i) {
            if (std::abs(design[i] - x.x[i]) > 1e-9) {
                throw std::invalid_argument(
                    "calibration mismatch: design point " + std::to_string(i + 1) +
                    " differs from the calibrated design (this variant's null law depends on x)");
            }
        }
    }
}

NullCalibration calibrate(const VariantConfig& cfg, const DesignGrid& x,
                          const CalibrationConfig& cc) {
    if (!(cc.alpha > 0.0 && cc.alpha < 0.5)) {
        throw std::invalid_argument("calibrate: alpha must lie in ]0,1/2[");
    }
    const StatisticEngine engine(cfg, x);
    const std::uint64_t table_key = rng::derive_key(cc.seed, rng::purpose::kTableBatch);
    const std::uint64_t search_key = rng::derive_key(cc.seed, rng::purpose::kSearchBatch);

    const NullScoreMatrix table_batch = simulate_null_scores(engine, cc.n_sim_table, table_key);
    QuantileTable qt =
        estimate_quantile_table(table_batch, make_u_grid(cc.alpha, cfg.ell_n, cc.u_grid_points));
    const NullScoreMatrix search_batch = simulate_null_scores(engine, cc.n_sim_search, search_key);
    const UAlphaChoice choice = calibrate_u_alpha(qt, cc.alpha, search_batch);

    NullCalibration cal;
    cal.variant = variant_name(cfg.variant);
    cal.n = cfg.n;
    cal.ell_n = cfg.ell_n;
    cal.alpha = cc.alpha;
    if (cfg.variant == Variant::DiffIneq) {
        cal.r = cfg.r;
        cal.rfun = cfg.R.name;
        cal.rfun_a = cfg.R.a;
    }
    cal.design_dependent = cfg.design_dependent();
    if (cal.design_dependent) cal.design = x.x;
    cal.seed = cc.seed;
    cal.table_key = table_key;
    cal.search_key = search_key;
    cal.n_sim_table = cc.n_sim_table;
    cal.n_sim_search = cc.n_sim_search;
    cal.scales = qt.scales;
    cal.u_grid = qt.u_grid;
    cal.q_table = qt.q;
    cal.u_alpha = choice.u_alpha;
    cal.u_alpha_index = choice.index;
    cal.p_hat = choice.p_hat;
    return cal;
}

}  // namespace shapetest
