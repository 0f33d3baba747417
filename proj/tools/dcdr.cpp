// Command-line front end: baseline, optimize, sweep and verify runs driven by
// a JSON config, with a few overrides on the command line.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dcdr/error.hpp"
#include "dcdr/experiment.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kInfeasible = 3, kNotConverged = 4 };

struct Overrides {
    std::string config;
    std::string trace;
    std::string wind;
    std::string mode;
    std::optional<int> dmax;
    std::string out;
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
};

dcdr::ExperimentConfig configure(const Overrides& o) {
    dcdr::ExperimentConfig c = o.config.empty() ? dcdr::ExperimentConfig{} : dcdr::load_config(o.config);
    if (!o.trace.empty()) c.trace_path = o.trace;
    if (!o.wind.empty()) c.wind_path = o.wind;
    if (!o.mode.empty()) {
        try {
            c.modes = {dcdr::parse_mode(o.mode)};
        } catch (const dcdr::InvalidArgument& e) {
            throw dcdr::ConfigError(e.what());
        }
    }
    if (!o.out.empty()) c.output_path = o.out;
    if (o.tol) {
        if (!(*o.tol > 0.0)) throw dcdr::ConfigError("--tol must be positive");
        c.tolerances.optimality = *o.tol;
        c.verify_tolerance = std::max(c.verify_tolerance, *o.tol);
    }
    if (o.seed) c.seed = *o.seed;
    if (o.dmax && *o.dmax < 0) throw dcdr::ConfigError("--dmax must be >= 0");
    return c;
}

void write(const dcdr::ExperimentReport& report, const dcdr::ExperimentConfig& c) {
    if (c.output_path) {
        dcdr::export_report(report, *c.output_path);
    } else {
        dcdr::export_report(report, std::cout);
    }
}

int status_exit(const dcdr::ExperimentReport& report) {
    int code = kOk;
    for (const auto& r : report.runs) {
        if (r.status == dcdr::RunStatus::ok) continue;
        std::cerr << r.mode << " D=" << r.max_deferral << ": " << r.message << "\n";
        const int c = r.status == dcdr::RunStatus::infeasible ? kInfeasible : kNotConverged;
        code = std::max(code, c);
    }
    return code;
}

int cmd_baseline(const Overrides& o) {
    auto c = configure(o);
    c.modes.clear();
    const auto inputs = dcdr::prepare_inputs(c);
    dcdr::ExperimentReport report;
    report.baseline = dcdr::baseline_record(inputs);
    write(report, c);
    return kOk;
}

// One run per selected mode at the largest horizon (or --dmax).
int cmd_optimize(const Overrides& o) {
    auto c = configure(o);
    const int d = o.dmax ? *o.dmax
                         : (c.deferrals.empty() ? 0 : *std::max_element(c.deferrals.begin(), c.deferrals.end()));
    c.deferrals = {d};
    if (o.mode.empty() && c.modes.size() > 1) c.modes.resize(1);
    const auto report = dcdr::run_experiment(c);
    write(report, c);
    return status_exit(report);
}

int cmd_sweep(const Overrides& o) {
    auto c = configure(o);
    if (o.dmax) {
        std::erase_if(c.deferrals, [&](int d) { return d > *o.dmax; });
        if (std::find(c.deferrals.begin(), c.deferrals.end(), *o.dmax) == c.deferrals.end()) {
            c.deferrals.push_back(*o.dmax);
        }
    }
    const auto report = dcdr::run_experiment(c);
    write(report, c);
    return status_exit(report);
}

int cmd_verify(const Overrides& o) {
    auto c = configure(o);
    if (o.dmax) c.deferrals = {*o.dmax};
    const auto report = dcdr::run_experiment(c);
    int code = kOk;
    for (const auto& r : report.runs) {
        std::cout << r.mode << " D=" << r.max_deferral << ": " << dcdr::to_string(r.status) << "\n";
        if (r.residuals) {
            std::istringstream lines(r.residuals->describe());
            for (std::string line; std::getline(lines, line);) std::cout << "  " << line << "\n";
        }
        if (!r.message.empty()) std::cout << "  " << r.message << "\n";
        if (r.status == dcdr::RunStatus::infeasible) code = std::max<int>(code, kInfeasible);
        if (r.status == dcdr::RunStatus::not_converged || r.status == dcdr::RunStatus::failed_verification) {
            code = std::max<int>(code, kNotConverged);
        }
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Incentive-based demand response for a data center: cost-minimizing request deferral"};
    app.require_subcommand(1);

    Overrides o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
        sub->add_option("--trace", o.trace, "request trace CSV (slot,requests)");
        sub->add_option("--wind", o.wind, "wind speed CSV (slot,wind_mps)");
        sub->add_option("--mode", o.mode, "base, shutdown or renewable")
            ->check(CLI::IsMember({"base", "shutdown", "renewable"}));
        sub->add_option("--dmax", o.dmax, "largest deferral horizon in slots");
        sub->add_option("--out", o.out, "report CSV path (default: stdout)");
        sub->add_option("--tol", o.tol, "solver optimality tolerance");
        sub->add_option("--seed", o.seed, "seed of the synthetic demand trace");
    };

    int code = kOk;
    auto* baseline = app.add_subcommand("baseline", "bill with every request served on arrival");
    auto* optimize = app.add_subcommand("optimize", "solve one mode at the largest horizon");
    auto* sweep = app.add_subcommand("sweep", "every configured mode and horizon");
    auto* verify = app.add_subcommand("verify", "solve and print constraint residuals");
    for (auto* sub : {baseline, optimize, sweep, verify}) common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*baseline) code = cmd_baseline(o);
        if (*optimize) code = cmd_optimize(o);
        if (*sweep) code = cmd_sweep(o);
        if (*verify) code = cmd_verify(o);
    } catch (const dcdr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const dcdr::TraceError& e) {
        std::cerr << "trace error: " << e.what() << "\n";
        return kConfig;
    } catch (const dcdr::InfeasibleError& e) {
        std::cerr << e.what() << "\n";
        return kInfeasible;
    } catch (const dcdr::ConvergenceError& e) {
        std::cerr << e.what() << "\n";
        return kNotConverged;
    } catch (const dcdr::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    }
    return code;
}
