// Benchmark: OpenMP row simulation vs the serial reference, and the
// block-sum statistic kernel vs the direction-based reference path.
//
//   ./shapetest-bench [rows]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "shapetest/calibration.hpp"
#include "shapetest/directions.hpp"
#include "shapetest/engine.hpp"
#include "shapetest/parallel.hpp"
#include "shapetest/rng.hpp"
#include "shapetest/testkit.hpp"

using namespace shapetest;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch()).count();
}

struct RowKernel {
    const StatisticEngine& engine;
    std::uint64_t key;
    std::vector<double>* out;  // rows x scales

    void operator()(std::int64_t begin, std::int64_t end) const {
        StatisticEngine::Workspace ws = engine.make_workspace();
        StatisticEngine::Eval ev;
        std::vector<double> eps(static_cast<std::size_t>(engine.n()));
        const std::size_t ns = engine.scales().size();
        for (std::int64_t row = begin; row < end; ++row) {
            rng::GaussianStream g(key, static_cast<std::uint64_t>(row));
            g.fill(eps.data(), engine.n());
            engine.evaluate(eps, ev, ws);
            std::copy(ev.value.begin(), ev.value.end(),
                      out->data() + static_cast<std::size_t>(row) * ns);
        }
    }
};

void bench_rows(const char* label, const StatisticEngine& engine, int rows) {
    std::vector<double> out_serial(static_cast<std::size_t>(rows) * engine.scales().size());
    std::vector<double> out_par(out_serial.size());

    const RowKernel serial_kernel{engine, 42, &out_serial};
    const double t0 = now_ms();
    par::run_chunked_serial(rows, serial_kernel);
    const double serial_ms = now_ms() - t0;

    const RowKernel par_kernel{engine, 42, &out_par};
    const double t1 = now_ms();
    par::run_chunked(rows, par_kernel);
    const double par_ms = now_ms() - t1;

    bool identical = out_serial == out_par;
    std::printf("%-28s rows=%-6d serial %8.1f ms   omp %8.1f ms   speedup %5.2fx   %s\n",
                label, rows, serial_ms, par_ms, serial_ms / par_ms,
                identical ? "bitwise-equal" : "MISMATCH");
}

void bench_kernel_vs_reference(const char* label, const VariantConfig& cfg,
                               const DesignGrid& x, int rows) {
    const StatisticEngine engine(cfg, x);
    const PartitionFamily fam = partition_family(cfg.n, cfg.ell_n);
    const NuisanceSpace V = build_nuisance_space(cfg, fam, x);
    const DirectionSet dirs = build_directions(cfg, fam, x);

    std::vector<std::vector<double>> ys;
    for (int i = 0; i < rows; ++i) {
        std::vector<double> y(static_cast<std::size_t>(cfg.n));
        rng::GaussianStream g(7, static_cast<std::uint64_t>(i));
        g.fill(y.data(), cfg.n);
        ys.push_back(std::move(y));
    }

    StatisticEngine::Workspace ws = engine.make_workspace();
    StatisticEngine::Eval ev;
    double sink = 0.0;
    const double t0 = now_ms();
    for (const auto& y : ys) {
        engine.evaluate(y, ev, ws);
        sink += ev.value[0];
    }
    const double fast_ms = now_ms() - t0;

    const double t1 = now_ms();
    for (const auto& y : ys) {
        const auto scores = studentized_scores(y, dirs, V);
        const auto per_scale = statistic_per_scale(scores, dirs);
        sink += per_scale.begin()->second;
    }
    const double ref_ms = now_ms() - t1;

    std::printf("%-28s rows=%-6d kernel %8.1f ms   reference %8.1f ms   speedup %5.2fx"
                "   (sink %.3g)\n",
                label, rows, fast_ms, ref_ms, ref_ms / fast_ms, sink);
}

}  // namespace

int main(int argc, char** argv) {
    const int rows = argc > 1 ? std::atoi(argv[1]) : 4000;
    const DesignGrid x = equispaced_design(100);

    std::printf("-- null-score row simulation: serial reference vs OpenMP --\n");
    bench_rows("mono-lm  ell_n=25", StatisticEngine(VariantConfig::local_means(100, 25), x), rows);
    bench_rows("mono-lg  ell_n=25", StatisticEngine(VariantConfig::local_gradients(100, 25), x), rows);
    bench_rows("convexity ell_n=25", StatisticEngine(VariantConfig::convexity(100, 25), x), rows);

    std::printf("\n-- per-row statistic: block-sum kernel vs direction reference --\n");
    bench_kernel_vs_reference("mono-lm  ell_n=25", VariantConfig::local_means(100, 25), x, 400);
    bench_kernel_vs_reference("convexity ell_n=25", VariantConfig::convexity(100, 25), x, 100);
    return 0;
}
