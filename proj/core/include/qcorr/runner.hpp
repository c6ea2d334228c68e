#pragma once

#include "qcorr/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace qcorr::runner {

/// One acceptance-style verdict attached to a run or a report.
struct Verdict {
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
};

/// Columnar result of one scenario run.
struct RunResult {
    std::string scenario_id;
    dynamics::Regime regime = dynamics::Regime::vacuum;
    PathKind path = PathKind::numeric;

    std::vector<double> t;
    std::vector<double> sigma2;
    std::vector<double> r;
    std::vector<double> r_sigma4;
    std::vector<double> energy;
    std::vector<double> invariant_drift;
    std::vector<double> oracle_deviation;

    dynamics::SolverStats stats;
    std::vector<std::string> warnings;
    std::map<std::string, Verdict> verdicts;

    // Derived pair quantities, NaN when not applicable.
    double sigma2_0 = 0.0;
    double r0 = 0.0;
    double tau1 = 0.0;
    double tau2 = 0.0;
    double tau3 = 0.0;

    std::uint64_t seed = 0;
};

/// Executes a scenario in memory.
RunResult run_scenario(const Scenario& sc, std::uint64_t seed = 0);

/// Executes a scenario and writes series.csv + summary.json into out_dir
/// (write-then-rename; no partial files on failure).
RunResult run_to_dir(const Scenario& sc, const std::filesystem::path& out_dir,
                     std::uint64_t seed = 0);

/// One sweep axis: a dotted JSON path into the scenario document and the
/// values it takes (each token parsed as a JSON scalar).
struct SweepParam {
    std::string path;
    std::vector<std::string> values;
};

struct SweepSpec {
    std::vector<SweepParam> params; ///< Cartesian product, row-major order
    int workers = 1;
};

struct SweepRunInfo {
    std::string id;
    std::map<std::string, std::string> params;
    bool ok = false;
    std::string error;
};

struct SweepResult {
    std::vector<SweepRunInfo> runs;
    std::filesystem::path index_file;
    bool all_ok = false;
};

/// Runs the Cartesian sweep over a base scenario document. Each grid point
/// gets its own directory out_dir/<id>/ with the materialized scenario; a
/// failed point is recorded in the index without aborting the rest.
SweepResult sweep(const std::filesystem::path& scenario_file, const SweepSpec& spec,
                  const std::filesystem::path& out_dir, std::uint64_t seed = 0);

struct ReportResult {
    std::filesystem::path collapse_csv;
    std::filesystem::path report_json;
    bool all_pass = false;
};

/// Aggregates a run or sweep directory: per-criterion verdicts plus the
/// plot-ready dimensionless curves (sigma2/sigma2_0 and r/r0 against t/tau1
/// for vacuum series and t/tau2 for friction/overdamped series).
ReportResult report(const std::filesystem::path& results_dir,
                    const std::filesystem::path& out_dir);

} // namespace qcorr::runner
