// shapetest: calibrate and run shape tests, drive simulation studies, and
// regenerate the study tables.
//
// Exit codes for `test`: 0 accept, 1 reject, 2 usage/data error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "shapetest/calibration.hpp"
#include "shapetest/engine.hpp"
#include "shapetest/simio.hpp"
#include "shapetest/testkit.hpp"

namespace {

using namespace shapetest;

void write_file(const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!f) throw std::runtime_error("write failed for " + path);
}

VariantConfig make_variant(const std::string& test, int n, int ell_n, int order,
                           const std::string& rfun, double rfun_a) {
    const Variant v = variant_from_name(test);
    switch (v) {
    case Variant::Positivity:     return VariantConfig::positivity(n, ell_n);
    case Variant::LocalMeans:     return VariantConfig::local_means(n, ell_n);
    case Variant::Convexity:      return VariantConfig::convexity(n, ell_n);
    case Variant::LocalGradients: return VariantConfig::local_gradients(n, ell_n);
    case Variant::DiffIneq:
        if (order < 1) {
            throw CLI::ValidationError("--order", "diffineq requires --order r >= 1");
        }
        return VariantConfig::diff_ineq(n, ell_n, order, make_rfunction(rfun, rfun_a));
    }
    throw std::logic_error("make_variant: unreachable");
}

int cmd_calibrate(const std::string& test, int n, int ell_n_arg, double alpha, int sims,
                  std::uint64_t seed, int order, const std::string& rfun, double rfun_a,
                  const std::string& out) {
    int ell_n = ell_n_arg;
    if (ell_n <= 0) {
        if (test == "diffineq") {
            ell_n = default_ell_n_diff_ineq(n, order);
            std::cerr << "[shapetest] using ell_n = " << ell_n << " (= floor(n/(2(r+1))))\n";
        } else {
            throw CLI::ValidationError("--ln", "required for " + test);
        }
    }
    const VariantConfig cfg = make_variant(test, n, ell_n, order, rfun, rfun_a);
    const DesignGrid x = equispaced_design(n);
    CalibrationConfig cc;
    cc.alpha = alpha;
    cc.n_sim_table = sims;
    cc.n_sim_search = sims;
    cc.seed = seed;
    const NullCalibration cal = calibrate(cfg, x, cc);
    cal.save(out);
    std::cout << "calibrated " << cfg.id() << " n=" << n << " ell_n=" << ell_n
              << " alpha=" << alpha << "\n";
    std::cout << "u_alpha = " << cal.u_alpha << "  (p_hat = " << cal.p_hat << ")\n";
    std::cout << "per-scale quantiles q(ell, u_alpha):\n";
    for (const int ell : cal.scales) {
        std::cout << "  ell=" << ell << "  q=" << cal.q_at_u_alpha(ell) << "\n";
    }
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_test(const std::string& data_path, const std::string& cal_path,
             const std::string& json_out) {
    const NullCalibration cal = NullCalibration::load(cal_path);
    const simio::DataFile data = simio::load_data_csv(data_path);
    if (data.x.n() != cal.n) {
        throw std::invalid_argument("data has n=" + std::to_string(data.x.n()) +
                                    " rows but the calibration is for n=" + std::to_string(cal.n));
    }
    const StatisticEngine engine(cal.variant_config(), data.x);
    const TestReport rep = evaluate_test(data.y, engine, cal);

    std::cout << (rep.reject ? "REJECT" : "ACCEPT") << "  (" << rep.variant
              << ", alpha=" << rep.alpha << ")\n";
    std::cout << "T_alpha   = " << rep.statistic << "\n";
    std::cout << "sigma_hat = " << rep.sigma_hat << "\n";
    std::cout << "witness   : scale " << rep.witness.scale << ", blocks [";
    for (int t = 0; t < rep.witness.tag_size; ++t) {
        if (t) std::cout << ",";
        std::cout << rep.witness.blocks[static_cast<std::size_t>(t)];
    }
    std::cout << "], x in [" << rep.witness.x_lo << ", " << rep.witness.x_hi << "]\n";
    if (!json_out.empty()) {
        write_file(json_out, rep.to_json() + "\n");
        std::cout << "wrote " << json_out << "\n";
    }
    return rep.reject ? 1 : 0;
}

int cmd_simulate(const std::string& spec_path, const std::string& out,
                 std::optional<int> reps, std::optional<std::uint64_t> seed,
                 bool timings, int cal_sims) {
    const simio::StudySpec spec = simio::load_study(spec_path);
    const auto results = simio::run_study(spec, reps, seed, cal_sims);
    for (const auto& r : results) {
        if (r.low_precision) {
            std::cerr << "[shapetest] warning: scenario with n_rep < 100 flagged low-precision\n";
            break;
        }
    }
    write_file(out, simio::results_to_csv(results, timings));
    std::cout << "ran " << results.size() << " scenario(s); wrote " << out << "\n";
    return 0;
}

int cmd_tables(const std::string& which, const std::string& out, int reps,
               std::uint64_t seed, const std::string& csv_out, int cal_sims) {
    std::string body;
    if (which == "1") {
        body = simio::render_table1(100);
    } else if (which == "23" || which == "2" || which == "3") {
        const simio::StudySpec spec = simio::builtin_tables23_study(seed, reps);
        const auto results = simio::run_study(spec, std::nullopt, std::nullopt, cal_sims);
        body = simio::render_tables23(results);
        if (!csv_out.empty()) write_file(csv_out, simio::results_to_csv(results, false));
    } else {
        throw CLI::ValidationError("--which", "expected 1 or 23");
    }
    if (out.empty()) {
        std::cout << body;
    } else {
        write_file(out, body);
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shape-constraint tests for Gaussian regression with Monte-Carlo "
                 "calibrated critical values"};
    app.require_subcommand(1);

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "simulate null quantiles and persist them");
    std::string test, rfun = "const1", out;
    int n = 100, ell_n = 0, sims = 10000, order = 0;
    double alpha = 0.05, rfun_a = 1.0;
    std::uint64_t seed = 20050214;
    cal->add_option("--test", test, "positivity|mono-lm|mono-lg|convexity|diffineq")->required();
    cal->add_option("--n", n, "number of observations")->required();
    cal->add_option("--ln", ell_n, "base partition size ell_n (diffineq default: n/(2(r+1)))");
    cal->add_option("--alpha", alpha, "level, in ]0,1/2[");
    cal->add_option("--sims", sims, "Monte-Carlo rows per batch (two batches)");
    cal->add_option("--seed", seed, "RNG seed");
    cal->add_option("--order", order, "diffineq derivative order r");
    cal->add_option("--rfun", rfun, "diffineq weight R: const1|exp|neg-exp");
    cal->add_option("--rfun-a", rfun_a, "parameter a of the R function");
    cal->add_option("--out", out, "output calibration JSON")->required();

    // test
    auto* tst = app.add_subcommand("test", "run a shape test on a data file");
    std::string data_path, cal_path, json_out;
    tst->add_option("--data", data_path, "CSV with columns x,y")->required();
    tst->add_option("--cal", cal_path, "calibration JSON")->required();
    tst->add_option("--json", json_out, "write the full report as JSON");

    // simulate
    auto* sim = app.add_subcommand("simulate", "run a study spec and write results CSV");
    std::string spec_path, results_out;
    int reps_override = 0;
    std::uint64_t sim_seed = 0;
    bool sim_seed_set = false, timings = false;
    int cal_sims = 10000;
    sim->add_option("--spec", spec_path, "study spec JSON")->required();
    sim->add_option("--out", results_out, "results CSV path")->required();
    sim->add_option("--reps", reps_override, "override n_rep for every scenario");
    sim->add_option("--seed", sim_seed, "override the study seed")
        ->each([&](const std::string&) { sim_seed_set = true; });
    sim->add_flag("--timings", timings, "fill the runtime_ms column (non-deterministic)");
    sim->add_option("--cal-sims", cal_sims, "Monte-Carlo rows per calibration batch");

    // tables
    auto* tab = app.add_subcommand("tables", "regenerate the study tables");
    std::string which = "23", tab_out, tab_csv;
    int tab_reps = 1000;
    std::uint64_t tab_seed = 20050214;
    int tab_cal_sims = 10000;
    tab->add_option("--which", which, "1 (deterministic) or 23 (level/power study)");
    tab->add_option("--reps", tab_reps, "replicates per scenario (study default 4000)");
    tab->add_option("--seed", tab_seed, "study seed");
    tab->add_option("--out", tab_out, "write the rendered table here (default stdout)");
    tab->add_option("--csv", tab_csv, "also write the raw results CSV");
    tab->add_option("--cal-sims", tab_cal_sims, "Monte-Carlo rows per calibration batch");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (cal->parsed()) {
            return cmd_calibrate(test, n, ell_n, alpha, sims, seed, order, rfun, rfun_a, out);
        }
        if (tst->parsed()) {
            return cmd_test(data_path, cal_path, json_out);
        }
        if (sim->parsed()) {
            return cmd_simulate(spec_path, results_out,
                                reps_override > 0 ? std::optional<int>(reps_override) : std::nullopt,
                                sim_seed_set ? std::optional<std::uint64_t>(sim_seed) : std::nullopt,
                                timings, cal_sims);
        }
        if (tab->parsed()) {
            return cmd_tables(which, tab_out, tab_reps, tab_seed, tab_csv, tab_cal_sims);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
