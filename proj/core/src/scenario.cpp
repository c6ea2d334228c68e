#include "qcorr/scenario.hpp"

#include "qcorr/version.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qcorr::runner {

using nlohmann::json;

namespace {

dynamics::Regime regime_from_string(const std::string& s) {
    if (s == "vacuum") return dynamics::Regime::vacuum;
    if (s == "friction") return dynamics::Regime::friction;
    if (s == "overdamped") return dynamics::Regime::overdamped;
    if (s == "thermo") return dynamics::Regime::thermo;
    if (s == "classical") return dynamics::Regime::classical;
    throw ValidationError("unknown regime '" + s + "'");
}

double number_field(const json& j, const char* key, double fallback, bool required = false) {
    if (!j.contains(key)) {
        if (required)
            throw ValidationError(std::string("missing required field '") + key + "'");
        return fallback;
    }
    if (!j.at(key).is_number())
        throw ValidationError(std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ValidationError("unknown field '" + it.key() + "' in " + where);
}

} // namespace

std::vector<double> TimeGridSpec::materialize() const {
    std::vector<double> out;
    if (is_explicit()) {
        out = explicit_times;
        if (out.empty())
            throw ValidationError("time_grid: empty explicit grid");
        if (out.front() != 0.0)
            throw ValidationError("time_grid: explicit grid must start at 0");
        for (std::size_t i = 1; i < out.size(); ++i)
            if (!(out[i] > out[i - 1]))
                throw ValidationError("time_grid: times must be strictly increasing");
        return out;
    }
    if (!(t_end > 0.0) || !std::isfinite(t_end))
        throw ValidationError("time_grid: t_end must be finite and > 0");
    if (n_steps < 1)
        throw ValidationError("time_grid: n_steps must be >= 1");
    out.reserve(static_cast<std::size_t>(n_steps) + 1);
    if (spacing == GridSpacing::linear) {
        for (int k = 0; k <= n_steps; ++k)
            out.push_back(t_end * static_cast<double>(k) / static_cast<double>(n_steps));
    } else {
        const double start = t_start > 0.0 ? t_start : t_end / 1000.0;
        if (!(start < t_end))
            throw ValidationError("time_grid: t_start must be < t_end");
        out.push_back(0.0);
        const double lg0 = std::log10(start), lg1 = std::log10(t_end);
        for (int k = 0; k < n_steps; ++k) {
            const double u = n_steps == 1
                                 ? lg1
                                 : lg0 + (lg1 - lg0) * static_cast<double>(k) /
                                             static_cast<double>(n_steps - 1);
            out.push_back(std::pow(10.0, u));
        }
        out.back() = t_end; // avoid pow round-off at the endpoint
        for (std::size_t i = 1; i < out.size(); ++i)
            if (!(out[i] > out[i - 1]))
                throw ValidationError("time_grid: log grid degenerated; widen the range");
    }
    return out;
}

PathKind Scenario::effective_path() const {
    if (path)
        return *path;
    switch (regime) {
    case dynamics::Regime::overdamped:
    case dynamics::Regime::classical:
        return PathKind::analytic;
    default:
        return PathKind::numeric;
    }
}

CovMatrix Scenario::initial_covariance() const {
    if (initial_pair)
        return pair_covariance(*initial_pair);
    if (initial_matrix)
        return validate_spd(*initial_matrix, solver.spd_tol);
    throw ValidationError("scenario has no initial covariance");
}

void Scenario::validate() const {
    if (schema_version != kSchemaVersion)
        throw ValidationError("unsupported schema_version");
    try {
        consts.validate();
    } catch (const DomainError& e) {
        throw ValidationError(e.what());
    }
    if (!initial_pair && !initial_matrix)
        throw ValidationError("initial: either 'pair' or 'matrix' is required");
    if (initial_pair && initial_matrix)
        throw ValidationError("initial: 'pair' and 'matrix' are mutually exclusive");

    using dynamics::Regime;
    switch (regime) {
    case Regime::vacuum:
        if (consts.gamma != 0.0)
            throw ValidationError("vacuum regime requires gamma = 0");
        if (!(consts.hbar > 0.0))
            throw ValidationError("vacuum regime requires hbar > 0");
        break;
    case Regime::friction:
    case Regime::overdamped:
        if (!(consts.gamma > 0.0))
            throw ValidationError(dynamics::to_string(regime) + " regime requires gamma > 0");
        if (!(consts.hbar > 0.0))
            throw ValidationError(dynamics::to_string(regime) + " regime requires hbar > 0");
        break;
    case Regime::thermo:
        if (!(consts.gamma > 0.0))
            throw ValidationError("thermo regime requires gamma > 0");
        break;
    case Regime::classical:
        if (!(consts.gamma > 0.0) || !(consts.kbt > 0.0))
            throw ValidationError("classical regime requires gamma > 0 and kbt > 0");
        break;
    }

    try {
        (void)initial_covariance();
        (void)grid.materialize();
        solver.validate();
    } catch (const ValidationError&) {
        throw;
    } catch (const Error& e) {
        throw ValidationError(e.what());
    }

    const auto& known = standard_output_columns();
    for (const auto& name : outputs)
        if (std::find(known.begin(), known.end(), name) == known.end())
            throw ValidationError("unknown output '" + name + "'");
}

const std::vector<std::string>& standard_output_columns() {
    static const std::vector<std::string> cols = {
        "sigma2", "r", "r_sigma4", "energy", "invariant_drift", "oracle_deviation"};
    return cols;
}

Scenario Scenario::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario parse error: ") + e.what());
    }
    if (!doc.is_object())
        throw ParseError("scenario document must be a JSON object");

    Scenario sc;
    try {
        reject_unknown_keys(doc,
                            {"schema_version", "id", "consts", "initial", "regime", "path",
                             "time_grid", "solver", "outputs"},
                            "scenario");

        sc.schema_version = doc.contains("schema_version")
                                ? doc.at("schema_version").get<int>()
                                : kSchemaVersion;
        if (doc.contains("id"))
            sc.id = doc.at("id").get<std::string>();

        if (doc.contains("consts")) {
            const auto& c = doc.at("consts");
            reject_unknown_keys(c, {"hbar", "mass", "gamma", "kbt"}, "consts");
            sc.consts.hbar = number_field(c, "hbar", 1.0);
            sc.consts.mass = number_field(c, "mass", 1.0);
            sc.consts.gamma = number_field(c, "gamma", 0.0);
            sc.consts.kbt = number_field(c, "kbt", 0.0);
        }

        const auto& init = doc.at("initial");
        reject_unknown_keys(init, {"pair", "matrix"}, "initial");
        if (init.contains("pair")) {
            const auto& p = init.at("pair");
            reject_unknown_keys(p, {"sigma2", "r"}, "initial.pair");
            sc.initial_pair =
                PairStats{number_field(p, "sigma2", 0.0, true), number_field(p, "r", 0.0, true)};
        }
        if (init.contains("matrix")) {
            const auto& rows = init.at("matrix");
            if (!rows.is_array() || rows.empty())
                throw ValidationError("initial.matrix must be a non-empty array of rows");
            const auto d = static_cast<Eigen::Index>(rows.size());
            Eigen::MatrixXd m(d, d);
            for (Eigen::Index i = 0; i < d; ++i) {
                const auto& row = rows.at(static_cast<std::size_t>(i));
                if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d)
                    throw ValidationError("initial.matrix must be square");
                for (Eigen::Index j = 0; j < d; ++j)
                    m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
            }
            sc.initial_matrix = std::move(m);
        }

        sc.regime = regime_from_string(doc.at("regime").get<std::string>());

        if (doc.contains("path")) {
            const auto p = doc.at("path").get<std::string>();
            if (p == "analytic")
                sc.path = PathKind::analytic;
            else if (p == "numeric")
                sc.path = PathKind::numeric;
            else
                throw ValidationError("path must be 'analytic' or 'numeric'");
        }

        const auto& tg = doc.at("time_grid");
        reject_unknown_keys(tg, {"times", "t_end", "t_start", "n_steps", "spacing"},
                            "time_grid");
        if (tg.contains("times")) {
            sc.grid.explicit_times = tg.at("times").get<std::vector<double>>();
        } else {
            sc.grid.t_end = number_field(tg, "t_end", 0.0, true);
            sc.grid.t_start = number_field(tg, "t_start", 0.0);
            sc.grid.n_steps = static_cast<int>(number_field(tg, "n_steps", 0.0, true));
            if (tg.contains("spacing")) {
                const auto s = tg.at("spacing").get<std::string>();
                if (s == "linear")
                    sc.grid.spacing = GridSpacing::linear;
                else if (s == "log")
                    sc.grid.spacing = GridSpacing::log;
                else
                    throw ValidationError("time_grid.spacing must be 'linear' or 'log'");
            }
        }

        if (doc.contains("solver")) {
            const auto& sv = doc.at("solver");
            reject_unknown_keys(
                sv, {"rel_tol", "abs_tol", "max_step", "min_step", "spd_check_every_step"},
                "solver");
            sc.solver.rel_tol = number_field(sv, "rel_tol", sc.solver.rel_tol);
            sc.solver.abs_tol = number_field(sv, "abs_tol", sc.solver.abs_tol);
            sc.solver.max_step = number_field(sv, "max_step", sc.solver.max_step);
            sc.solver.min_step = number_field(sv, "min_step", sc.solver.min_step);
            if (sv.contains("spd_check_every_step"))
                sc.solver.spd_check_every_step = sv.at("spd_check_every_step").get<bool>();
        }

        if (doc.contains("outputs"))
            sc.outputs = doc.at("outputs").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("scenario field error: ") + e.what());
    }

    sc.validate();
    return sc;
}

Scenario Scenario::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in)
        throw ParseError("cannot open scenario file " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    Scenario sc = from_json_text(buf.str());
    if (sc.id.empty())
        sc.id = file.stem().string();
    return sc;
}

std::string Scenario::to_json_text() const {
    json doc;
    doc["schema_version"] = schema_version;
    if (!id.empty())
        doc["id"] = id;
    doc["consts"] = {{"hbar", consts.hbar},
                     {"mass", consts.mass},
                     {"gamma", consts.gamma},
                     {"kbt", consts.kbt}};
    if (initial_pair)
        doc["initial"] = {{"pair", {{"sigma2", initial_pair->sigma2}, {"r", initial_pair->r}}}};
    if (initial_matrix) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < initial_matrix->rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < initial_matrix->cols(); ++j)
                row.push_back((*initial_matrix)(i, j));
            rows.push_back(row);
        }
        doc["initial"] = {{"matrix", rows}};
    }
    doc["regime"] = dynamics::to_string(regime);
    if (path)
        doc["path"] = *path == PathKind::analytic ? "analytic" : "numeric";
    if (grid.is_explicit()) {
        doc["time_grid"] = {{"times", grid.explicit_times}};
    } else {
        doc["time_grid"] = {{"t_end", grid.t_end},
                            {"n_steps", grid.n_steps},
                            {"spacing", grid.spacing == GridSpacing::log ? "log" : "linear"}};
        if (grid.t_start > 0.0)
            doc["time_grid"]["t_start"] = grid.t_start;
    }
    doc["solver"] = {{"rel_tol", solver.rel_tol},
                     {"abs_tol", solver.abs_tol},
                     {"max_step", solver.max_step},
                     {"min_step", solver.min_step},
                     {"spd_check_every_step", solver.spd_check_every_step}};
    if (!outputs.empty())
        doc["outputs"] = outputs;
    return doc.dump(2) + "\n";
}

} // namespace qcorr::runner
