#include "qcorr/runner.hpp"

#include "qcorr/analytic.hpp"
#include "qcorr/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace qcorr::runner {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file_atomic(const fs::path& target, const std::string& content) {
    fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + tmp.string());
        out << content;
        if (!out.good())
            throw Error("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

double rel_matrix_dev(const Eigen::MatrixXd& got, const Eigen::MatrixXd& expected) {
    return max_abs(got - expected) / max_abs(expected);
}

struct Row {
    double sigma2 = kNaN, r = kNaN, r_sigma4 = kNaN, energy = kNaN;
};

Row row_of(const Eigen::MatrixXd& sigma, const PhysConsts& c) {
    Row row;
    row.sigma2 = sigma.diagonal().mean();
    if (sigma.rows() == 2) {
        row.r = sigma(0, 1) / std::sqrt(sigma(0, 0) * sigma(1, 1));
        row.r_sigma4 = row.r * row.sigma2 * row.sigma2;
    }
    row.energy = c.hbar * c.hbar / (2.0 * c.mass * row.sigma2);
    return row;
}

void add_verdict(RunResult& res, const std::string& name, double value, double threshold) {
    res.verdicts[name] = Verdict{value <= threshold, value, threshold};
}

// Closed-form covariance of the regime at time t (the analytic pipeline).
CovMatrix closed_form(const Scenario& sc, const CovMatrix& sigma0, double t) {
    using dynamics::Regime;
    switch (sc.regime) {
    case Regime::vacuum: return analytic::vacuum_covariance(sigma0, t, sc.consts);
    case Regime::overdamped: return analytic::overdamped_covariance(sigma0, t, sc.consts);
    case Regime::classical: return analytic::classical_covariance(sigma0, t, sc.consts);
    default:
        throw ValidationError("regime '" + dynamics::to_string(sc.regime) +
                              "' has no closed form; use the numeric path");
    }
}

// Oracle covariance for a numeric run, when one exists.
std::optional<CovMatrix> oracle_for(const Scenario& sc, const CovMatrix& sigma0, double t) {
    using dynamics::Regime;
    switch (sc.regime) {
    case Regime::vacuum: return analytic::vacuum_covariance(sigma0, t, sc.consts);
    case Regime::overdamped: return analytic::overdamped_covariance(sigma0, t, sc.consts);
    case Regime::classical: return analytic::classical_covariance(sigma0, t, sc.consts);
    case Regime::thermo:
        if (sc.consts.kbt == 0.0)
            return analytic::overdamped_covariance(sigma0, t, sc.consts);
        if (sc.consts.hbar == 0.0)
            return analytic::classical_covariance(sigma0, t, sc.consts);
        return std::nullopt;
    case Regime::friction: return std::nullopt;
    }
    return std::nullopt;
}

void fill_derived(RunResult& res, const Scenario& sc, const CovMatrix& sigma0) {
    res.sigma2_0 = kNaN;
    res.r0 = kNaN;
    res.tau1 = kNaN;
    res.tau2 = kNaN;
    res.tau3 = kNaN;
    if (sigma0.dim() != 2)
        return;
    const PairStats p0 = extract_pair_stats(sigma0);
    res.sigma2_0 = p0.sigma2;
    res.r0 = p0.r;
    if (sc.consts.hbar > 0.0) {
        res.tau1 = analytic::tau1(p0, sc.consts);
        if (sc.consts.gamma > 0.0)
            res.tau2 = analytic::tau2(p0, sc.consts);
    }
    if (sc.consts.gamma > 0.0 && sc.consts.kbt > 0.0)
        res.tau3 = analytic::tau3(p0, sc.consts);
}

void compute_verdicts(RunResult& res, const Scenario& sc) {
    using dynamics::Regime;
    const bool analytic_path = res.path == PathKind::analytic;
    const std::size_t n = res.t.size();
    const bool is_pair = std::isfinite(res.sigma2_0);

    if (sc.regime == Regime::vacuum && is_pair && std::isfinite(res.tau1)) {
        // Collapse onto the dimensionless vacuum laws.
        double collapse = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double u = res.t[k] / res.tau1;
            collapse = std::max(
                collapse, std::abs(res.sigma2[k] / res.sigma2_0 - (1.0 + u * u)));
            if (res.r0 != 0.0)
                collapse = std::max(collapse,
                                    std::abs(res.r[k] / res.r0 -
                                             (1.0 - u * u) / (1.0 + u * u)));
        }
        add_verdict(res, "vacuum_collapse_max_dev", collapse,
                    analytic_path ? 1e-10 : 1e-6);

        // |r| at the grid point closest to tau1, when tau1 is on the grid.
        std::size_t best = 0;
        for (std::size_t k = 1; k < n; ++k)
            if (std::abs(res.t[k] - res.tau1) < std::abs(res.t[best] - res.tau1))
                best = k;
        if (std::abs(res.t[best] - res.tau1) <= 1e-9 * res.tau1)
            add_verdict(res, "r_zero_at_tau1", std::abs(res.r[best]),
                        analytic_path ? 1e-10 : 1e-6);
    }

    if ((sc.regime == Regime::overdamped ||
         (sc.regime == Regime::thermo && sc.consts.kbt == 0.0)) &&
        is_pair && res.r0 != 0.0) {
        double drift = 0.0;
        const double ref = res.r_sigma4.front();
        for (std::size_t k = 0; k < n; ++k)
            drift = std::max(drift, std::abs(res.r_sigma4[k] - ref) / std::abs(ref));
        add_verdict(res, "r_sigma4_drift_max", drift, analytic_path ? 1e-10 : 1e-7);
    }

    if (sc.regime == Regime::classical && is_pair && res.r0 != 0.0) {
        double dev = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double law = 1.0 / (1.0 + res.t[k] / res.tau3);
            dev = std::max(dev, std::abs(res.r[k] / res.r0 - law));
            dev = std::max(dev, std::abs(res.sigma2_0 / res.sigma2[k] - law));
        }
        add_verdict(res, "classical_law_max_dev", dev, analytic_path ? 1e-12 : 1e-8);
    }

    if (!analytic_path) {
        bool has_oracle = false;
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            if (std::isfinite(res.oracle_deviation[k])) {
                has_oracle = true;
                worst = std::max(worst, res.oracle_deviation[k]);
            }
        if (has_oracle)
            add_verdict(res, "oracle_deviation_max", worst, 1e-6);
    }
}

} // namespace

RunResult run_scenario(const Scenario& sc, std::uint64_t seed) {
    sc.validate();

    RunResult res;
    res.scenario_id = sc.id.empty() ? "scenario" : sc.id;
    res.regime = sc.regime;
    res.path = sc.effective_path();
    res.seed = seed;

    const CovMatrix sigma0 = sc.initial_covariance();
    if (sigma0.condition() > 1e12) {
        std::ostringstream os;
        os << "initial covariance condition number " << sigma0.condition() << " exceeds 1e12";
        res.warnings.push_back(os.str());
    }
    fill_derived(res, sc, sigma0);

    const std::vector<double> grid = sc.grid.materialize();
    const std::size_t n = grid.size();
    res.t = grid;
    res.sigma2.assign(n, kNaN);
    res.r.assign(n, kNaN);
    res.r_sigma4.assign(n, kNaN);
    res.energy.assign(n, kNaN);
    res.invariant_drift.assign(n, kNaN);
    res.oracle_deviation.assign(n, kNaN);

    using dynamics::Regime;

    if (res.path == PathKind::analytic) {
        std::vector<Eigen::MatrixXd> sigmas;
        sigmas.reserve(n);
        for (double t : grid)
            sigmas.push_back(closed_form(sc, sigma0, t).entries());

        for (std::size_t k = 0; k < n; ++k) {
            const Row row = row_of(sigmas[k], sc.consts);
            res.sigma2[k] = row.sigma2;
            res.r[k] = row.r;
            res.r_sigma4[k] = row.r_sigma4;
            res.energy[k] = row.energy;
            res.oracle_deviation[k] = 0.0;
        }

        // Regime invariant, evaluated on the closed-form series itself.
        if (sc.regime == Regime::vacuum) {
            for (std::size_t k = 0; k < n; ++k)
                res.invariant_drift[k] = 0.0;
        } else if (sc.regime == Regime::overdamped && sigma0.dim() == 2) {
            const double ref = res.r_sigma4.front();
            for (std::size_t k = 0; k < n; ++k)
                res.invariant_drift[k] =
                    ref != 0.0 ? std::abs(res.r_sigma4[k] - ref) / std::abs(ref)
                               : std::abs(res.r_sigma4[k]);
        } else if (sc.regime == Regime::classical) {
            const double scale = max_abs(sigma0.entries());
            for (std::size_t k = 0; k < n; ++k) {
                Eigen::MatrixXd diff = sigmas[k] - sigma0.entries();
                diff.diagonal().setZero();
                res.invariant_drift[k] = max_abs(diff) / scale;
            }
        }
    } else {
        dynamics::Trajectory traj;
        if (sc.regime == Regime::vacuum || sc.regime == Regime::friction) {
            traj = dynamics::integrate_eq_covariance(GaussianState::at_rest(sigma0),
                                                     sc.consts, grid, sc.solver);
        } else {
            traj = dynamics::integrate_thermo_moments(sigma0, sc.consts, grid, sc.solver);
        }
        res.stats = traj.stats;
        res.sigma2 = traj.sigma2;
        res.r = traj.r;
        res.r_sigma4 = traj.r_sigma4;
        res.energy = traj.energy;

        for (std::size_t k = 0; k < n; ++k) {
            const auto oracle = oracle_for(sc, sigma0, grid[k]);
            if (oracle)
                res.oracle_deviation[k] =
                    rel_matrix_dev(traj.states[k].sigma().entries(), oracle->entries());
        }

        switch (traj.regime) {
        case Regime::vacuum:
            res.invariant_drift = res.oracle_deviation; // free-spreading residual
            break;
        case Regime::overdamped:
            if (sigma0.dim() == 2) {
                const double ref = res.r_sigma4.front();
                for (std::size_t k = 0; k < n; ++k)
                    res.invariant_drift[k] =
                        ref != 0.0 ? std::abs(res.r_sigma4[k] - ref) / std::abs(ref)
                                   : std::abs(res.r_sigma4[k]);
            }
            break;
        case Regime::classical: {
            const double scale = max_abs(sigma0.entries());
            for (std::size_t k = 0; k < n; ++k) {
                Eigen::MatrixXd diff = traj.states[k].sigma().entries() - sigma0.entries();
                diff.diagonal().setZero();
                res.invariant_drift[k] = max_abs(diff) / scale;
            }
            break;
        }
        default:
            break; // friction / thermo(kbt>0): no invariant column
        }
    }

    compute_verdicts(res, sc);
    return res;
}

namespace {

std::string series_csv(const RunResult& res, const Scenario& sc) {
    const auto& wanted = sc.outputs;
    auto enabled = [&](const char* name) {
        return wanted.empty() ||
               std::find(wanted.begin(), wanted.end(), name) != wanted.end();
    };
    const bool c_sigma2 = enabled("sigma2"), c_r = enabled("r"),
               c_rs4 = enabled("r_sigma4"), c_energy = enabled("energy"),
               c_inv = enabled("invariant_drift"), c_dev = enabled("oracle_deviation");

    std::ostringstream os;
    os << "t,sigma2,r,r_sigma4,energy,invariant_drift,oracle_deviation\n";
    for (std::size_t k = 0; k < res.t.size(); ++k) {
        os << fmt17(res.t[k]) << ',' << fmt17(c_sigma2 ? res.sigma2[k] : kNaN) << ','
           << fmt17(c_r ? res.r[k] : kNaN) << ',' << fmt17(c_rs4 ? res.r_sigma4[k] : kNaN)
           << ',' << fmt17(c_energy ? res.energy[k] : kNaN) << ','
           << fmt17(c_inv ? res.invariant_drift[k] : kNaN) << ','
           << fmt17(c_dev ? res.oracle_deviation[k] : kNaN) << '\n';
    }
    return os.str();
}

json summary_json(const RunResult& res, const Scenario& sc) {
    json meta;
    meta["schema_version"] = kSchemaVersion;
    meta["scenario_id"] = res.scenario_id;
    meta["regime"] = dynamics::to_string(res.regime);
    meta["path"] = res.path == PathKind::analytic ? "analytic" : "numeric";
    meta["consts"] = {{"hbar", sc.consts.hbar},
                      {"mass", sc.consts.mass},
                      {"gamma", sc.consts.gamma},
                      {"kbt", sc.consts.kbt}};
    json derived;
    if (std::isfinite(res.sigma2_0)) {
        derived["sigma2_0"] = res.sigma2_0;
        derived["r0"] = res.r0;
        if (std::isfinite(res.tau1))
            derived["tau1"] = res.tau1;
        if (std::isfinite(res.tau2))
            derived["tau2"] = res.tau2;
        if (std::isfinite(res.tau3))
            derived["tau3"] = res.tau3;
    }
    meta["derived"] = derived;
    meta["solver_stats"] = {{"accepted_steps", res.stats.n_accepted},
                            {"rejected_steps", res.stats.n_rejected},
                            {"rhs_evaluations", res.stats.n_rhs},
                            {"max_symmetry_defect", res.stats.max_sym_defect},
                            {"max_ode_residual", res.stats.max_ode_residual}};
    meta["warnings"] = res.warnings;
    json verdicts;
    for (const auto& [name, v] : res.verdicts)
        verdicts[name] = {{"pass", v.pass}, {"value", v.value}, {"threshold", v.threshold}};
    meta["verdicts"] = verdicts;
    meta["versions"] = {{"qcorr", kVersionString}, {"schema", kSchemaVersion}};
    meta["seed"] = res.seed;
    meta["series"] = "series.csv";
    meta["timestamp"] = utc_timestamp();
    return meta;
}

} // namespace

RunResult run_to_dir(const Scenario& sc, const fs::path& out_dir, std::uint64_t seed) {
    RunResult res = run_scenario(sc, seed);
    fs::create_directories(out_dir);
    write_file_atomic(out_dir / "series.csv", series_csv(res, sc));
    write_file_atomic(out_dir / "summary.json", summary_json(res, sc).dump(2) + "\n");
    return res;
}

namespace {

json parse_value_token(const std::string& token) {
    try {
        return json::parse(token);
    } catch (const json::exception&) {
        return json(token); // plain string value
    }
}

json::json_pointer pointer_of(const std::string& dotted) {
    std::string p = "/";
    for (char c : dotted)
        p += (c == '.') ? '/' : c;
    return json::json_pointer(p);
}

} // namespace

SweepResult sweep(const fs::path& scenario_file, const SweepSpec& spec,
                  const fs::path& out_dir, std::uint64_t seed) {
    if (spec.params.empty())
        throw ValidationError("sweep: at least one --param is required");
    for (const auto& p : spec.params) {
        if (p.path.empty())
            throw ValidationError("sweep: parameter name must be non-empty");
        if (p.values.empty())
            throw ValidationError("sweep: parameter '" + p.path + "' has an empty value list");
    }
    const int workers = std::max(1, spec.workers);

    std::ifstream in(scenario_file);
    if (!in)
        throw ParseError("cannot open scenario file " + scenario_file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    json base;
    try {
        base = json::parse(buf.str());
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario parse error: ") + e.what());
    }

    std::size_t total = 1;
    for (const auto& p : spec.params)
        total *= p.values.size();

    struct Task {
        std::string id;
        json doc;
        std::map<std::string, std::string> params;
    };
    std::vector<Task> tasks;
    tasks.reserve(total);
    std::vector<std::size_t> idx(spec.params.size(), 0);
    for (std::size_t k = 0; k < total; ++k) {
        Task task;
        char name[32];
        std::snprintf(name, sizeof(name), "run_%04zu", k);
        task.id = name;
        task.doc = base;
        task.doc["id"] = task.id;
        for (std::size_t p = 0; p < spec.params.size(); ++p) {
            const auto& sp = spec.params[p];
            const std::string& raw = sp.values[idx[p]];
            task.doc[pointer_of(sp.path)] = parse_value_token(raw);
            task.params[sp.path] = raw;
        }
        tasks.push_back(std::move(task));
        // Row-major increment: the last parameter varies fastest.
        for (std::size_t p = spec.params.size(); p-- > 0;) {
            if (++idx[p] < spec.params[p].values.size())
                break;
            idx[p] = 0;
        }
    }

    fs::create_directories(out_dir);
    std::vector<SweepRunInfo> infos(total);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= tasks.size())
                return;
            SweepRunInfo& info = infos[k];
            info.id = tasks[k].id;
            info.params = tasks[k].params;
            try {
                const fs::path dir = out_dir / tasks[k].id;
                fs::create_directories(dir);
                write_file_atomic(dir / "scenario.json", tasks[k].doc.dump(2) + "\n");
                Scenario sc = Scenario::from_json_text(tasks[k].doc.dump());
                if (sc.id.empty())
                    sc.id = tasks[k].id;
                run_to_dir(sc, dir, seed);
                info.ok = true;
            } catch (const std::exception& e) {
                info.ok = false;
                info.error = e.what();
            }
        }
    };

    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }

    json index;
    index["schema_version"] = kSchemaVersion;
    index["scenario"] = scenario_file.filename().string();
    json jparams = json::array();
    for (const auto& p : spec.params)
        jparams.push_back({{"name", p.path}, {"values", p.values}});
    index["params"] = jparams;
    json jruns = json::array();
    bool all_ok = true;
    for (const auto& info : infos) {
        json jr = {{"id", info.id}, {"params", info.params}, {"ok", info.ok}};
        if (!info.ok) {
            jr["error"] = info.error;
            all_ok = false;
        }
        jruns.push_back(jr);
    }
    index["runs"] = jruns;
    index["timestamp"] = utc_timestamp();

    SweepResult result;
    result.runs = std::move(infos);
    result.index_file = out_dir / "index.json";
    result.all_ok = all_ok;
    write_file_atomic(result.index_file, index.dump(2) + "\n");
    return result;
}

namespace {

struct LoadedRun {
    std::string id;
    std::string regime;
    std::string path;
    double gamma = kNaN;
    double kbt = kNaN;
    double sigma2_0 = kNaN, r0 = kNaN, tau1 = kNaN, tau2 = kNaN, tau3 = kNaN;
    std::vector<double> t, sigma2, r, r_sigma4;
};

std::vector<double> parse_csv_line(const std::string& line) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        const std::size_t comma = line.find(',', pos);
        const std::string cell =
            line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        out.push_back(std::strtod(cell.c_str(), nullptr));
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    return out;
}

LoadedRun load_run_dir(const fs::path& dir) {
    std::ifstream meta_in(dir / "summary.json");
    if (!meta_in)
        throw ValidationError("missing summary.json in " + dir.string());
    json meta;
    try {
        meta = json::parse(meta_in);
    } catch (const json::exception& e) {
        throw ParseError("corrupt summary.json in " + dir.string() + ": " + e.what());
    }

    LoadedRun run;
    run.id = meta.value("scenario_id", dir.filename().string());
    run.regime = meta.value("regime", "");
    run.path = meta.value("path", "");
    if (meta.contains("consts")) {
        run.gamma = meta["consts"].value("gamma", kNaN);
        run.kbt = meta["consts"].value("kbt", kNaN);
    }
    if (meta.contains("derived")) {
        const auto& d = meta["derived"];
        run.sigma2_0 = d.value("sigma2_0", kNaN);
        run.r0 = d.value("r0", kNaN);
        run.tau1 = d.value("tau1", kNaN);
        run.tau2 = d.value("tau2", kNaN);
        run.tau3 = d.value("tau3", kNaN);
    }

    std::ifstream csv(dir / "series.csv");
    if (!csv)
        throw ValidationError("missing series.csv in " + dir.string());
    std::string line;
    std::getline(csv, line); // header
    while (std::getline(csv, line)) {
        if (line.empty())
            continue;
        const auto cells = parse_csv_line(line);
        if (cells.size() < 7)
            throw ParseError("corrupt series.csv in " + dir.string());
        run.t.push_back(cells[0]);
        run.sigma2.push_back(cells[1]);
        run.r.push_back(cells[2]);
        run.r_sigma4.push_back(cells[3]);
    }
    return run;
}

} // namespace

ReportResult report(const fs::path& results_dir, const fs::path& out_dir) {
    if (!fs::exists(results_dir))
        throw ValidationError("results directory does not exist: " + results_dir.string());

    std::vector<LoadedRun> runs;
    if (fs::exists(results_dir / "index.json")) {
        std::ifstream in(results_dir / "index.json");
        json index;
        try {
            index = json::parse(in);
        } catch (const json::exception& e) {
            throw ParseError(std::string("corrupt index.json: ") + e.what());
        }
        if (!index.contains("runs") || !index["runs"].is_array())
            throw ParseError("corrupt index.json: missing runs array");
        for (const auto& jr : index["runs"]) {
            if (!jr.value("ok", false))
                continue;
            runs.push_back(load_run_dir(results_dir / jr.at("id").get<std::string>()));
        }
    } else if (fs::exists(results_dir / "summary.json")) {
        runs.push_back(load_run_dir(results_dir));
    } else {
        throw ValidationError("no results found in " + results_dir.string() +
                              " (expected index.json or summary.json)");
    }
    if (runs.empty())
        throw ValidationError("results directory contains no successful runs");

    // Plot-ready long-format curves in the dimensionless variables.
    std::ostringstream csv;
    csv << "run_id,regime,r0,u,sigma2_ratio,r_ratio,sigma2_law,r_law,sigma2_dev,r_dev\n";

    double vacuum_collapse = 0.0;
    bool any_vacuum = false;
    double weak_worst = 0.0;
    bool any_weak = false;
    double rs4_worst_analytic = 0.0, rs4_worst_numeric = 0.0;
    bool any_rs4_analytic = false, any_rs4_numeric = false;

    struct FrictionDev {
        double gamma;
        double dev;
    };
    std::vector<FrictionDev> friction_devs;

    for (const auto& run : runs) {
        const bool vacuum = run.regime == "vacuum";
        const bool overdamped_like =
            run.regime == "overdamped" || run.regime == "friction" ||
            (run.regime == "thermo" && run.kbt == 0.0);
        const bool classical = run.regime == "classical";
        const double tau = vacuum ? run.tau1 : (classical ? run.tau3 : run.tau2);
        if (!std::isfinite(tau) || !std::isfinite(run.r0))
            continue;

        double run_friction_dev = 0.0;
        for (std::size_t k = 0; k < run.t.size(); ++k) {
            const double u = run.t[k] / tau;
            const double s_ratio = run.sigma2[k] / run.sigma2_0;
            const double r_ratio = run.r0 != 0.0 ? run.r[k] / run.r0 : kNaN;
            double s_law = kNaN, r_law = kNaN;
            if (vacuum) {
                s_law = 1.0 + u * u;
                r_law = (1.0 - u * u) / (1.0 + u * u);
            } else if (overdamped_like) {
                s_law = std::sqrt(1.0 + u); // weak-correlation reference
                r_law = 1.0 / (1.0 + u);
            } else if (classical) {
                s_law = 1.0 + u;
                r_law = 1.0 / (1.0 + u);
            }
            const double s_dev = std::abs(s_ratio - s_law);
            const double r_dev = std::isfinite(r_ratio) ? std::abs(r_ratio - r_law) : kNaN;

            csv << run.id << ',' << run.regime << ',' << fmt17(run.r0) << ',' << fmt17(u)
                << ',' << fmt17(s_ratio) << ',' << fmt17(r_ratio) << ',' << fmt17(s_law)
                << ',' << fmt17(r_law) << ',' << fmt17(s_dev) << ',' << fmt17(r_dev) << '\n';

            if (vacuum) {
                any_vacuum = true;
                vacuum_collapse = std::max(vacuum_collapse, s_dev);
                if (std::isfinite(r_dev))
                    vacuum_collapse = std::max(vacuum_collapse, r_dev);
            }
            if (overdamped_like && std::abs(run.r0) <= 0.1 + 1e-12 && run.r0 != 0.0 &&
                run.regime == "overdamped") {
                any_weak = true;
                weak_worst = std::max(weak_worst, std::abs(r_ratio - r_law) / r_law);
            }
            if (run.regime == "friction" && std::isfinite(run.tau2) &&
                run.t[k] >= 10.0 / run.gamma) {
                // The friction series carries no oracle column; compare
                // against the strong-friction pair laws directly.
                const double s04 = run.sigma2_0 * run.sigma2_0;
                const double rr = analytic::overdamped_pair_r(run.r0, run.t[k], run.tau2);
                const double s4 =
                    (s04 * (1.0 + run.r0 * run.r0) + s04 * run.t[k] / run.tau2) /
                    (1.0 + rr * rr);
                const double s2 = std::sqrt(s4);
                run_friction_dev = std::max(
                    run_friction_dev, std::abs(run.sigma2[k] - s2) / s2);
                if (run.r0 != 0.0)
                    run_friction_dev = std::max(
                        run_friction_dev, std::abs(run.r[k] - rr) / std::abs(run.r0));
            }
        }
        if (run.regime == "friction" && std::isfinite(run.gamma))
            friction_devs.push_back({run.gamma, run_friction_dev});

        if ((run.regime == "overdamped" ||
             (run.regime == "thermo" && run.kbt == 0.0)) &&
            run.r0 != 0.0 && !run.r_sigma4.empty()) {
            const double ref = run.r_sigma4.front();
            double drift = 0.0;
            for (double v : run.r_sigma4)
                drift = std::max(drift, std::abs(v - ref) / std::abs(ref));
            if (run.path == "analytic") {
                any_rs4_analytic = true;
                rs4_worst_analytic = std::max(rs4_worst_analytic, drift);
            } else {
                any_rs4_numeric = true;
                rs4_worst_numeric = std::max(rs4_worst_numeric, drift);
            }
        }
    }

    json verdicts;
    bool all_pass = true;
    auto record = [&](const std::string& name, double value, double threshold) {
        const bool pass = value <= threshold;
        verdicts[name] = {{"pass", pass}, {"value", value}, {"threshold", threshold}};
        all_pass = all_pass && pass;
    };
    if (any_vacuum)
        record("vacuum_collapse_max_dev", vacuum_collapse, 1e-6);
    if (any_weak)
        record("overdamped_weak_correlation_rel_dev", weak_worst, 0.01);
    if (any_rs4_analytic)
        record("r_sigma4_drift_analytic", rs4_worst_analytic, 1e-10);
    if (any_rs4_numeric)
        record("r_sigma4_drift_numeric", rs4_worst_numeric, 1e-7);
    if (friction_devs.size() >= 2) {
        std::sort(friction_devs.begin(), friction_devs.end(),
                  [](const FrictionDev& a, const FrictionDev& b) { return a.gamma < b.gamma; });
        bool monotone = true;
        for (std::size_t i = 1; i < friction_devs.size(); ++i)
            monotone = monotone && friction_devs[i].dev <= friction_devs[i - 1].dev;
        verdicts["overdamped_limit_monotone_in_gamma"] = {
            {"pass", monotone},
            {"value", friction_devs.back().dev},
            {"threshold", friction_devs.front().dev}};
        all_pass = all_pass && monotone;
        json per_gamma = json::array();
        for (const auto& fd : friction_devs)
            per_gamma.push_back({{"gamma", fd.gamma}, {"deviation", fd.dev}});
        verdicts["overdamped_limit_deviation_per_gamma"] = per_gamma;
    }

    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["results_dir"] = results_dir.string();
    doc["n_runs"] = runs.size();
    doc["verdicts"] = verdicts;
    doc["all_pass"] = all_pass;
    doc["timestamp"] = utc_timestamp();

    ReportResult out;
    out.collapse_csv = out_dir / "collapse.csv";
    out.report_json = out_dir / "report.json";
    out.all_pass = all_pass;
    fs::create_directories(out_dir);
    write_file_atomic(out.collapse_csv, csv.str());
    write_file_atomic(out.report_json, doc.dump(2) + "\n");
    return out;
}

} // namespace qcorr::runner
