#include "shapetest/simio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "shapetest/cones.hpp"
#include "shapetest/rng.hpp"

namespace shapetest::simio {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_fixed(double v, int digits) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
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

bool known_function(const std::string& f) {
    return f == "F0" || f == "F1" || f == "F2" || f == "F3" || f == "F4" || f == "F5" ||
           f == "F6" || f == "F7";
}

}  // namespace

StudySpec parse_study_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("study spec: invalid JSON: ") + e.what());
    }
    StudySpec spec;
    std::vector<std::string> errors;
    if (!j.is_object()) {
        throw std::invalid_argument("study spec: top level must be an object");
    }
    spec.seed = j.value("seed", std::uint64_t{0});
    if (!j.contains("scenarios") || !j["scenarios"].is_array()) {
        throw std::invalid_argument("study spec: missing 'scenarios' array");
    }
    int idx = 0;
    for (const auto& row : j["scenarios"]) {
        ++idx;
        const std::string where = "scenario " + std::to_string(idx) + ": ";
        try {
            StudyRow out;
            const std::string kind = row.value("kind", std::string("rejection"));
            const std::string function = row.at("function").get<std::string>();
            if (!known_function(function)) {
                throw std::invalid_argument("unknown function '" + function + "'");
            }
            std::optional<double> a;
            if (row.contains("a")) a = row["a"].get<double>();
            const int n = row.value("n", 100);
            if (n < 1) throw std::invalid_argument("n must be positive");
            double sigma2;
            if (row.contains("sigma2")) {
                sigma2 = row["sigma2"].get<double>();
            } else if (function != "F7") {
                sigma2 = simlab::study_sigma2(function);
            } else {
                throw std::invalid_argument("F7 rows need an explicit sigma2");
            }
            if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
            if (function == "F7" && !a.has_value()) {
                throw std::invalid_argument("F7 rows need an amplitude 'a'");
            }

            if (kind == "distance") {
                out.kind = StudyRow::Kind::Distance;
                out.function = function;
                out.a = a;
                out.sigma2 = sigma2;
                out.n = n;
            } else if (kind == "rejection") {
                out.kind = StudyRow::Kind::Rejection;
                simlab::ScenarioConfig sc;
                sc.function = function;
                sc.a = a;
                sc.sigma2 = sigma2;
                sc.law = simlab::error_law_from_name(row.value("law", std::string("gaussian")));
                sc.n = n;
                sc.ell_n = row.at("ln").get<int>();
                sc.test = row.at("test").get<std::string>();
                (void)variant_from_name(sc.test);
                sc.alpha = row.value("alpha", 0.05);
                if (!(sc.alpha > 0.0 && sc.alpha < 0.5)) {
                    throw std::invalid_argument("alpha must lie in ]0,1/2[");
                }
                sc.n_rep = row.value("nrep", 1000);
                if (sc.n_rep < 1) throw std::invalid_argument("nrep must be >= 1");
                out.scenario = sc;
            } else {
                throw std::invalid_argument("unknown kind '" + kind + "'");
            }
            spec.rows.push_back(std::move(out));
        } catch (const std::exception& e) {
            errors.push_back(where + e.what());
        }
    }
    if (!errors.empty()) {
        std::string msg = "study spec: " + std::to_string(errors.size()) + " invalid row(s):";
        for (const auto& e : errors) msg += "\n  " + e;
        throw std::invalid_argument(msg);
    }
    return spec;
}

StudySpec load_study(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open study spec " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return parse_study_json(os.str());
}

std::vector<RowResult> run_study(const StudySpec& spec, std::optional<int> reps_override,
                                 std::optional<std::uint64_t> seed_override,
                                 int cal_sims) {
    const std::uint64_t seed = seed_override.value_or(spec.seed);
    struct CachedTest {
        StatisticEngine engine;
        NullCalibration cal;
    };
    std::map<std::string, CachedTest> cache;
    std::vector<RowResult> out;
    out.reserve(spec.rows.size());

    for (const StudyRow& row : spec.rows) {
        RowResult rr;
        rr.row = row;
        if (row.kind == StudyRow::Kind::Distance) {
            const DesignGrid x = equispaced_design(row.n);
            const auto F = simlab::test_function(row.function, row.a, std::sqrt(row.sigma2));
            std::vector<double> f(static_cast<std::size_t>(row.n));
            for (int i = 0; i < row.n; ++i) f[static_cast<std::size_t>(i)] = F(x.x[static_cast<std::size_t>(i)]);
            rr.value = dist_sup_to_monotone(f);
            rr.std_error = 0.0;
            out.push_back(std::move(rr));
            continue;
        }

        simlab::ScenarioConfig sc = row.scenario;
        if (reps_override.has_value()) sc.n_rep = *reps_override;
        rr.row.scenario = sc;
        const std::string cal_id = sc.test + "|" + std::to_string(sc.n) + "|" +
                                   std::to_string(sc.ell_n) + "|" + fmt17(sc.alpha);
        auto it = cache.find(cal_id);
        if (it == cache.end()) {
            const VariantConfig vc = sc.variant_config();
            const DesignGrid x = equispaced_design(sc.n);
            CalibrationConfig cc;
            cc.alpha = sc.alpha;
            cc.n_sim_table = cal_sims;
            cc.n_sim_search = cal_sims;
            cc.seed = rng::mix64(seed ^ fnv1a64(cal_id));
            StatisticEngine engine(vc, x);
            NullCalibration cal = calibrate(vc, x, cc);
            it = cache.emplace(cal_id, CachedTest{std::move(engine), std::move(cal)}).first;
        }
        const simlab::SimulationResult res =
            simlab::estimate_rejection_rate(sc, it->second.engine, it->second.cal, seed);
        rr.value = res.rate;
        rr.std_error = res.std_error;
        rr.runtime_ms = res.runtime_ms;
        rr.low_precision = sc.n_rep < 100;
        out.push_back(std::move(rr));
    }
    return out;
}

std::string results_to_csv(const std::vector<RowResult>& results, bool with_timings) {
    std::ostringstream os;
    os << "scenario,kind,function,a,sigma2,law,test,ell_n,alpha,n_rep,value,std_error,"
          "runtime_ms,note\n";
    int idx = 0;
    for (const RowResult& r : results) {
        ++idx;
        os << idx << ",";
        if (r.row.kind == StudyRow::Kind::Distance) {
            os << "distance," << r.row.function << ",";
            if (r.row.a.has_value()) os << fmt17(*r.row.a);
            os << "," << fmt17(r.row.sigma2) << ",,,,,," << fmt17(r.value) << ",0,";
            os << ",\n";
            continue;
        }
        const simlab::ScenarioConfig& sc = r.row.scenario;
        os << "rejection," << sc.function << ",";
        if (sc.a.has_value()) os << fmt17(*sc.a);
        os << "," << fmt17(sc.sigma2) << "," << simlab::error_law_name(sc.law) << "," << sc.test
           << "," << sc.ell_n << "," << fmt17(sc.alpha) << "," << sc.n_rep << ","
           << fmt17(r.value) << "," << fmt17(r.std_error) << ",";
        if (with_timings) os << fmt_fixed(r.runtime_ms, 3);
        os << "," << (r.low_precision ? "low-precision" : "") << "\n";
    }
    return os.str();
}

std::string render_table1(int n) {
    const DesignGrid x = equispaced_design(n);
    std::ostringstream os;
    os << "Simulated functions: sigma^2 and sup-norm distance to the nondecreasing cone\n";
    os << "(distance computed over the design points x_i = i/(n+1), n = " << n << ")\n\n";
    os << "F     sigma^2   d_inf\n";
    static const char* names[] = {"F0", "F1", "F2", "F3", "F4", "F5", "F6"};
    for (const char* name : names) {
        const double s2 = simlab::study_sigma2(name);
        const auto F = simlab::test_function(name, std::nullopt, std::sqrt(s2));
        std::vector<double> f(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = F(x.x[static_cast<std::size_t>(i)]);
        os << name << "    " << fmt_fixed(s2, 3) << "     " << fmt_fixed(dist_sup_to_monotone(f), 3)
           << "\n";
    }
    return os.str();
}

namespace {

struct CellKey {
    std::string row;  // law (levels) or function (powers)
    int ell_n;
    std::string test;
    bool operator<(const CellKey& o) const {
        return std::tie(row, ell_n, test) < std::tie(o.row, o.ell_n, o.test);
    }
};

}  // namespace

std::string render_tables23(const std::vector<RowResult>& results) {
    std::map<CellKey, const RowResult*> level_cells, power_cells;
    std::vector<std::string> laws, functions;
    for (const RowResult& r : results) {
        if (r.row.kind != StudyRow::Kind::Rejection) continue;
        const simlab::ScenarioConfig& sc = r.row.scenario;
        if (sc.function == "F0") {
            const std::string law = simlab::error_law_name(sc.law);
            if (std::find(laws.begin(), laws.end(), law) == laws.end()) laws.push_back(law);
            level_cells[{law, sc.ell_n, sc.test}] = &r;
        } else if (sc.law == simlab::ErrorLaw::Gaussian) {
            if (std::find(functions.begin(), functions.end(), sc.function) == functions.end()) {
                functions.push_back(sc.function);
            }
            power_cells[{sc.function, sc.ell_n, sc.test}] = &r;
        }
    }

    auto cell = [](const std::map<CellKey, const RowResult*>& cells, const CellKey& k,
                   int digits) -> std::string {
        const auto it = cells.find(k);
        if (it == cells.end()) return "      -      ";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%-13s",
                      (fmt_fixed(it->second->value, digits) + " (" +
                       fmt_fixed(it->second->std_error, 3) + ")").c_str());
        return buf;
    };

    std::ostringstream os;
    os << "Levels of the monotonicity tests (estimated rate, MC standard error)\n\n";
    os << "errors      ell_n=15 LM     ell_n=15 LG     ell_n=25 LM     ell_n=25 LG\n";
    for (const std::string& law : laws) {
        os << law;
        for (std::size_t pad = law.size(); pad < 12; ++pad) os << ' ';
        os << cell(level_cells, {law, 15, "mono-lm"}, 3) << "   "
           << cell(level_cells, {law, 15, "mono-lg"}, 3) << "   "
           << cell(level_cells, {law, 25, "mono-lm"}, 3) << "   "
           << cell(level_cells, {law, 25, "mono-lg"}, 3) << "\n";
    }
    os << "\nPowers under Gaussian errors (estimated rate, MC standard error)\n\n";
    os << "F           ell_n=15 LM     ell_n=15 LG     ell_n=25 LM     ell_n=25 LG\n";
    for (const std::string& fn : functions) {
        os << fn;
        for (std::size_t pad = fn.size(); pad < 12; ++pad) os << ' ';
        os << cell(power_cells, {fn, 15, "mono-lm"}, 2) << "   "
           << cell(power_cells, {fn, 15, "mono-lg"}, 2) << "   "
           << cell(power_cells, {fn, 25, "mono-lm"}, 2) << "   "
           << cell(power_cells, {fn, 25, "mono-lg"}, 2) << "\n";
    }
    return os.str();
}

StudySpec builtin_table1_study() {
    StudySpec spec;
    spec.seed = 0;
    static const char* names[] = {"F0", "F1", "F2", "F3", "F4", "F5", "F6"};
    for (const char* name : names) {
        StudyRow row;
        row.kind = StudyRow::Kind::Distance;
        row.function = name;
        row.sigma2 = simlab::study_sigma2(name);
        row.n = 100;
        spec.rows.push_back(row);
    }
    return spec;
}

StudySpec builtin_tables23_study(std::uint64_t seed, int n_rep) {
    StudySpec spec;
    spec.seed = seed;
    const std::vector<simlab::ErrorLaw> laws = {simlab::ErrorLaw::Gaussian,
                                                simlab::ErrorLaw::TypeI,
                                                simlab::ErrorLaw::Mixture};
    const std::vector<int> ells = {15, 25};
    const std::vector<std::string> tests = {"mono-lm", "mono-lg"};
    for (const auto law : laws) {
        for (const int ell : ells) {
            for (const auto& test : tests) {
                StudyRow row;
                simlab::ScenarioConfig sc;
                sc.function = "F0";
                sc.sigma2 = 0.01;
                sc.law = law;
                sc.n = 100;
                sc.ell_n = ell;
                sc.test = test;
                sc.alpha = 0.05;
                sc.n_rep = n_rep;
                row.scenario = sc;
                spec.rows.push_back(row);
            }
        }
    }
    static const char* powers[] = {"F1", "F2", "F3", "F4", "F5", "F6"};
    for (const char* fn : powers) {
        for (const int ell : ells) {
            for (const auto& test : tests) {
                StudyRow row;
                simlab::ScenarioConfig sc;
                sc.function = fn;
                sc.sigma2 = simlab::study_sigma2(fn);
                sc.law = simlab::ErrorLaw::Gaussian;
                sc.n = 100;
                sc.ell_n = ell;
                sc.test = test;
                sc.alpha = 0.05;
                sc.n_rep = n_rep;
                row.scenario = sc;
                spec.rows.push_back(row);
            }
        }
    }
    return spec;
}

DataFile parse_data_csv(const std::string& text) {
    std::vector<std::pair<double, double>> rows;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    bool header_allowed = true;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        if (line[start] == '#') continue;

        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            if (header_allowed && rows.empty()) { header_allowed = false; continue; }
            throw std::invalid_argument("data file line " + std::to_string(lineno) +
                                        ": expected two comma-separated columns");
        }
        const std::string c1 = line.substr(0, comma);
        const std::string c2 = line.substr(comma + 1);
        char* end1 = nullptr;
        char* end2 = nullptr;
        const double xv = std::strtod(c1.c_str(), &end1);
        const double yv = std::strtod(c2.c_str(), &end2);
        auto fully_parsed = [](const std::string& s, const char* end) {
            while (*end == ' ' || *end == '\t') ++end;
            return end == s.c_str() + s.size() && end != s.c_str();
        };
        if (!fully_parsed(c1, end1) || !fully_parsed(c2, end2)) {
            if (header_allowed && rows.empty()) { header_allowed = false; continue; }
            throw std::invalid_argument("data file line " + std::to_string(lineno) +
                                        ": cannot parse '" + line + "' as x,y");
        }
        header_allowed = false;
        if (!std::isfinite(xv) || !std::isfinite(yv)) {
            throw std::invalid_argument("data file line " + std::to_string(lineno) +
                                        ": NaN/Inf values are not allowed");
        }
        rows.emplace_back(xv, yv);
    }
    if (rows.empty()) throw std::invalid_argument("data file: no data rows");

    std::vector<int> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[static_cast<std::size_t>(i)] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&rows](int a, int b) { return rows[static_cast<std::size_t>(a)].first <
                                                    rows[static_cast<std::size_t>(b)].first; });
    std::vector<double> xs, ys;
    xs.reserve(rows.size());
    ys.reserve(rows.size());
    for (const int i : order) {
        xs.push_back(rows[static_cast<std::size_t>(i)].first);
        ys.push_back(rows[static_cast<std::size_t>(i)].second);
    }
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (!(xs[i] > xs[i - 1])) {
            throw std::invalid_argument("data file: duplicate design point x=" + fmt17(xs[i]));
        }
    }
    DataFile out{DesignGrid(std::move(xs)), std::move(ys), std::move(order)};
    return out;
}

DataFile load_data_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open data file " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return parse_data_csv(os.str());
}

}  // namespace shapetest::simio
