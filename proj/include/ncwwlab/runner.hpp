#pragma once

#include <string>
#include <vector>

#include "ncwwlab/scenario.hpp"

namespace ncwwlab {

struct ReportRow {
    std::string experiment;
    std::string weight;
    std::uint64_t n;
    double residual_cauchy_2;
    double residual_cauchy_inf;
    double residual_to_limit_2;
    double trunc_tau_perp;
    double trunc_residual_inf;
};

struct ExperimentReport {
    std::string scenario_hash;
    std::uint64_t seed;
    std::vector<ReportRow> rows;           // sorted by (experiment, weight, n)
    nlohmann::ordered_json summary;        // header + per-experiment details

    std::string rows_csv() const;          // exact bytes, LF line endings
    std::string summary_json() const;
};

// Runs every experiment of the scenario; deterministic for a fixed scenario
// and seed regardless of the thread count.
ExperimentReport execute_scenario(const Scenario& sc, int threads);

struct RunResult {
    int exit_code;
    std::string rows_path;
    std::string summary_path;
};

// Parses, executes, writes <out>/rows.csv and <out>/summary.json.
RunResult run_scenario_file(const std::string& path, const Overrides& ov);

std::string describe_scenario_file(const std::string& path, const Overrides& ov = {});

int resolve_thread_count(const Overrides& ov);

}  // namespace ncwwlab
