#pragma once

// File formats of the simulation lab and the CLI: study specs (JSON),
// results (CSV), data files (CSV), and the study table renderings.

#include <optional>
#include <string>
#include <vector>

#include "shapetest/design.hpp"
#include "shapetest/simlab.hpp"

namespace shapetest::simio {

// A study row is either a Monte-Carlo rejection scenario or a deterministic
// distance row (sigma^2 and sup-norm distance to the monotone cone).
struct StudyRow {
    enum class Kind { Rejection, Distance } kind = Kind::Rejection;
    simlab::ScenarioConfig scenario;  // Rejection
    std::string function;             // Distance
    std::optional<double> a;
    double sigma2 = 0.0;
    int n = 100;
};

struct StudySpec {
    std::uint64_t seed = 0;
    std::vector<StudyRow> rows;
};

// Parses a study document.  All schema violations are collected and thrown
// together, each prefixed with its scenario number.
StudySpec parse_study_json(const std::string& text);
StudySpec load_study(const std::string& path);

struct RowResult {
    StudyRow row;
    double value = 0.0;      // rejection rate or distance
    double std_error = 0.0;  // 0 for distance rows
    double runtime_ms = 0.0;
    bool low_precision = false;
};

// Runs every row; calibrations are computed once per (test, n, ell_n,
// alpha) and reused.  reps_override replaces each scenario's n_rep.
std::vector<RowResult> run_study(const StudySpec& spec, std::optional<int> reps_override,
                                 std::optional<std::uint64_t> seed_override,
                                 int cal_sims = 10000);

// One row per study row.  Doubles carry 17 significant digits; the
// runtime_ms column is left empty unless with_timings is set, keeping the
// default output byte-identical across runs and worker counts.
std::string results_to_csv(const std::vector<RowResult>& results, bool with_timings);

// Paper-shaped renderings.
std::string render_table1(int n);  // deterministic: sigma^2 and d_inf rows
std::string render_tables23(const std::vector<RowResult>& results);

// Built-in studies mirroring the shipped spec documents.
StudySpec builtin_table1_study();
StudySpec builtin_tables23_study(std::uint64_t seed, int n_rep);

// Data files: two columns x,y; comma delimiter; '#' comments; optional
// header.  Rows are sorted by x (original order returned) and validated.
struct DataFile {
    DesignGrid x;
    std::vector<double> y;
    std::vector<int> original_order;  // position in the file, 0-based
};
DataFile parse_data_csv(const std::string& text);
DataFile load_data_csv(const std::string& path);

}  // namespace shapetest::simio
