#pragma once

// Batch runs: baseline against optimized schedules for a list of modes and
// deferral horizons, reported relative to the baseline.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dcdr/core_model.hpp"
#include "dcdr/optimizer.hpp"
#include "dcdr/program.hpp"
#include "dcdr/trace_io.hpp"

namespace dcdr {

struct SyntheticDemand {
    double base = 2000.0;
    double amplitude = 1500.0;
    double period = 24.0;
    double noise = 0.05;  // fraction of base
};

struct ExperimentConfig {
    std::size_t slots = 168;
    double slot_hours = 1.0;

    // Tariff. One window over the whole cycle unless `windows` is set;
    // window slots are 1-based as in the config file.
    Series energy_price{0.05207};  // one value, or one per slot
    double demand_price = 15.59;
    std::vector<std::pair<std::vector<std::size_t>, double>> windows;

    // Fleet. servers == 0 sizes the fleet so the baseline peak sits at
    // target_utilization of N nu.
    int servers = 0;
    double target_utilization = 0.9;
    double idle_kw = 0.1;
    double active_kw = 0.1;
    double requests_per_server = 20.0;
    Series pue{1.2};  // one value, or one per slot

    // Demand: a request trace if set, else the synthetic diurnal curve.
    std::optional<std::string> trace_path;
    double trace_scale = 1.0;
    SyntheticDemand synthetic;
    double elastic_fraction = 0.5;
    double loss_lower = 1e-3;
    double loss_upper = 1e-2;

    std::vector<Mode> modes{Mode::base};
    std::vector<int> deferrals{0, 1, 2, 5, 10, 15};

    // Shutdown mode. Unset initial_servers means every server starts on.
    std::optional<double> initial_servers;
    double toggle_kwh = 0.01;
    double wear_usd = 0.01;
    bool pin_toggles = false;

    // Renewable mode.
    std::optional<std::string> wind_path;
    TurbineCurve turbine;

    std::optional<std::string> output_path;
    Tolerances tolerances;
    double verify_tolerance = 1e-6;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: one per hardware thread
    bool record_timing = false;
};

// Reads the JSON config at `path`. Relative trace paths are resolved against
// the directory of the file. Throws ConfigError.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir = ".");

// Models built from a config, shared by every run of an experiment.
struct ExperimentInputs {
    DemandInput demand;
    FleetModel fleet;
    BillingModel billing;
    ShutdownParams shutdown;
    std::optional<RenewableProfile> renewable;
};

// Throws ConfigError (bad values, wrong trace length, load above capacity)
// or TraceError.
ExperimentInputs prepare_inputs(const ExperimentConfig& config);

enum class RunStatus { ok, infeasible, not_converged, failed_verification };

const char* to_string(RunStatus status);

struct RunRecord {
    std::string mode;  // "baseline" for the reference row
    int max_deferral = 0;
    double peak_kw = 0.0;
    double peak_norm = 0.0;
    double cost_usd = 0.0;
    double cost_norm = 0.0;
    double reward_usd = 0.0;
    double wear_usd = 0.0;
    double profit_delta_usd = 0.0;
    double solve_ms = 0.0;

    RunStatus status = RunStatus::ok;
    std::string message;
    std::optional<ResidualReport> residuals;
};

struct ExperimentReport {
    RunRecord baseline;
    std::vector<RunRecord> runs;  // sorted by mode, then deferral horizon
};

// Solves, verifies and records each (mode, D) pair. A failing run is kept
// with its status and message and NaN in every measured column.
ExperimentReport run_experiment(const ExperimentConfig& config);
ExperimentReport run_experiment(const ExperimentConfig& config, const ExperimentInputs& inputs);

// Baseline row only.
RunRecord baseline_record(const ExperimentInputs& inputs);

inline constexpr const char* kReportHeader =
    "mode,D,peak_kw,peak_norm,cost_usd,cost_norm,reward_usd,wear_usd,profit_delta_usd,solve_ms";

void export_report(const ExperimentReport& report, std::ostream& out);
// Throws Error when the file cannot be written.
void export_report(const ExperimentReport& report, const std::string& path);

// Reads a report written by export_report. Rows after the first are runs;
// statuses are not stored, a row with NaN cost reads back as failed.
ExperimentReport parse_report(std::istream& in);

}  // namespace dcdr
