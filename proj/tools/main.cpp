// Scenario runner CLI: run / sweep / report over covariance-dynamics
// scenario files. Exit codes: 0 success, 2 scenario parse error,
// 3 validation error, 4 solver failure.

#include "qcorr/errors.hpp"
#include "qcorr/runner.hpp"
#include "qcorr/version.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

qcorr::runner::SweepParam parse_param_spec(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0)
        throw qcorr::ValidationError("--param must look like name=v1,v2,... (got '" + spec +
                                     "')");
    qcorr::runner::SweepParam param;
    param.path = spec.substr(0, eq);
    std::string rest = spec.substr(eq + 1);
    std::size_t pos = 0;
    while (pos <= rest.size() && !rest.empty()) {
        const auto comma = rest.find(',', pos);
        const std::string tok =
            rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!tok.empty())
            param.values.push_back(tok);
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    if (param.values.empty())
        throw qcorr::ValidationError("--param '" + param.path + "' has an empty value list");
    return param;
}

void print_verdicts(const std::map<std::string, qcorr::runner::Verdict>& verdicts) {
    for (const auto& [name, v] : verdicts)
        std::cout << "  " << (v.pass ? "PASS" : "FAIL") << "  " << name << " = " << v.value
                  << " (threshold " << v.threshold << ")\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qcorr: Gaussian covariance dynamics of free quantum particles"};
    app.set_version_flag("--version", std::string(qcorr::kVersionString));
    app.require_subcommand(1);

    std::string out_dir;
    int workers = 1;
    std::uint64_t seed = 0;
    app.add_option("--out", out_dir, "Output directory")->envname("QCORR_OUT");
    app.add_option("--workers", workers, "Concurrent sweep workers")
        ->envname("QCORR_WORKERS");
    app.add_option("--seed", seed, "Seed recorded in run metadata")->envname("QCORR_SEED");

    std::string run_file;
    auto* run_cmd = app.add_subcommand("run", "Execute one scenario file");
    run_cmd->add_option("scenario", run_file, "Scenario JSON file")->required();
    run_cmd->fallthrough();

    std::string sweep_file;
    std::vector<std::string> param_specs;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep over a scenario");
    sweep_cmd->add_option("scenario", sweep_file, "Scenario JSON file")->required();
    sweep_cmd->add_option("--param", param_specs, "Sweep axis, name=v1,v2,...")
        ->required()
        ->take_all();
    sweep_cmd->fallthrough();

    std::string report_dir;
    auto* report_cmd = app.add_subcommand("report", "Aggregate a run or sweep directory");
    report_cmd->add_option("results", report_dir, "Directory produced by run/sweep")
        ->required();
    report_cmd->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (run_cmd->parsed()) {
            qcorr::runner::Scenario sc = qcorr::runner::Scenario::load(run_file);
            const fs::path out =
                out_dir.empty() ? fs::path("qcorr_out") / sc.id : fs::path(out_dir);
            const auto res = qcorr::runner::run_to_dir(sc, out, seed);
            std::cout << "wrote " << (out / "series.csv").string() << "\n";
            std::cout << "wrote " << (out / "summary.json").string() << "\n";
            print_verdicts(res.verdicts);
            return 0;
        }
        if (sweep_cmd->parsed()) {
            qcorr::runner::SweepSpec spec;
            spec.workers = workers;
            for (const auto& s : param_specs)
                spec.params.push_back(parse_param_spec(s));
            const fs::path base = fs::path(sweep_file).stem();
            const fs::path out = out_dir.empty()
                                     ? fs::path("qcorr_out") / (base.string() + "_sweep")
                                     : fs::path(out_dir);
            const auto res = qcorr::runner::sweep(sweep_file, spec, out, seed);
            std::size_t ok = 0;
            for (const auto& r : res.runs)
                if (r.ok)
                    ++ok;
            std::cout << "wrote " << res.index_file.string() << " (" << ok << "/"
                      << res.runs.size() << " runs ok)\n";
            for (const auto& r : res.runs)
                if (!r.ok)
                    std::cerr << "  failed " << r.id << ": " << r.error << "\n";
            return 0;
        }
        if (report_cmd->parsed()) {
            const fs::path results(report_dir);
            const fs::path out = out_dir.empty() ? results / "report" : fs::path(out_dir);
            const auto res = qcorr::runner::report(results, out);
            std::cout << "wrote " << res.collapse_csv.string() << "\n";
            std::cout << "wrote " << res.report_json.string() << "\n";
            std::cout << (res.all_pass ? "all verdicts pass" : "some verdicts FAILED")
                      << "\n";
            return 0;
        }
    } catch (const qcorr::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const qcorr::SolverError& e) {
        std::cerr << "solver failure at t = " << e.time() << ": " << e.what() << "\n";
        return 4;
    } catch (const qcorr::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 3;
    } catch (const qcorr::Error& e) {
        // Domain / SPD errors raised while building the scenario's objects.
        std::cerr << "validation error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
