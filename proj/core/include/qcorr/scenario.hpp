#pragma once

#include "qcorr/cov_matrix.hpp"
#include "qcorr/dynamics.hpp"
#include "qcorr/phys_consts.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qcorr::runner {

enum class GridSpacing { linear, log };

/// Output time grid: either an explicit list or {t_end, n_steps, spacing}.
/// Grids always start at 0. Log spacing inserts 0 followed by n_steps
/// log-spaced points on [t_start, t_end].
struct TimeGridSpec {
    std::vector<double> explicit_times;
    double t_end = 0.0;
    double t_start = 0.0; ///< first positive point for log spacing; 0 = t_end/1000
    int n_steps = 0;
    GridSpacing spacing = GridSpacing::linear;

    bool is_explicit() const noexcept { return !explicit_times.empty(); }
    std::vector<double> materialize() const; ///< throws ValidationError
};

/// Which pipeline produces the series: closed forms evaluated on the grid,
/// or numerical integration with oracle deviations attached.
enum class PathKind { analytic, numeric };

/// Parsed scenario document. The on-disk surface syntax is JSON; see the
/// repository README for the schema.
struct Scenario {
    int schema_version = 1;
    std::string id;
    PhysConsts consts;

    std::optional<PairStats> initial_pair;       ///< exactly one of the two
    std::optional<Eigen::MatrixXd> initial_matrix;

    dynamics::Regime regime = dynamics::Regime::vacuum;
    std::optional<PathKind> path; ///< empty = regime default
    TimeGridSpec grid;
    dynamics::SolverConfig solver;
    std::vector<std::string> outputs; ///< empty = all standard columns

    /// Regime default: vacuum/friction/thermo integrate, overdamped and
    /// classical evaluate their closed forms.
    PathKind effective_path() const;

    CovMatrix initial_covariance() const;

    /// Semantic checks (regime/constants compatibility, grid shape,
    /// output names). Throws ValidationError.
    void validate() const;

    static Scenario from_json_text(const std::string& text);
    static Scenario load(const std::filesystem::path& file);
    std::string to_json_text() const;
};

/// Standard series column names, in the fixed CSV order (after t).
const std::vector<std::string>& standard_output_columns();

} // namespace qcorr::runner
