#include "dcdr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dcdr/error.hpp"

namespace dcdr {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Rejects keys the schema does not know, so typos do not pass silently.
void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [k, v] : obj.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* key) { return k == key; })) {
            throw ConfigError("unknown key '" + where + "." + k + "'");
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("'" + where + "." + key + "' has the wrong type");
    }
}

// A number or an array of numbers.
void read_series(const json& obj, const char* key, const std::string& where, Series& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (v.is_number()) {
        out = {v.get<double>()};
    } else {
        read(obj, key, where, out);
    }
}

std::string resolve(const std::string& path, const std::string& base_dir) {
    const fs::path p(path);
    return p.is_absolute() ? path : (fs::path(base_dir) / p).lexically_normal().string();
}

Series expand(const Series& values, std::size_t slots, const char* name) {
    if (values.size() == 1) return Series(slots, values[0]);
    if (values.size() != slots) {
        throw ConfigError(std::string(name) + " has " + std::to_string(values.size()) +
                          " entries, expected 1 or " + std::to_string(slots));
    }
    return values;
}

double ratio(double value, double reference) {
    if (reference != 0.0) return value / reference;
    return value == 0.0 ? 1.0 : kNaN;
}

RunRecord failed(Mode mode, int d, RunStatus status, std::string message) {
    RunRecord r;
    r.mode = to_string(mode);
    r.max_deferral = d;
    r.peak_kw = r.peak_norm = r.cost_usd = r.cost_norm = kNaN;
    r.reward_usd = r.wear_usd = r.profit_delta_usd = r.solve_ms = kNaN;
    r.status = status;
    r.message = std::move(message);
    return r;
}

RunRecord run_one(const ExperimentConfig& config, const ExperimentInputs& in, const RunRecord& base,
                  Mode mode, int d) {
    const auto started = std::chrono::steady_clock::now();
    try {
        const ProgramSpec program = [&] {
            switch (mode) {
                case Mode::shutdown:
                    return build_shutdown_program(in.demand, in.fleet, in.billing, d, in.shutdown);
                case Mode::renewable:
                    return build_renewable_program(in.demand, in.fleet, in.billing, d, *in.renewable);
                case Mode::base:
                    break;
            }
            return build_base_program(in.demand, in.fleet, in.billing, d);
        }();
        const Solution sol = solve(program, config.tolerances);
        ResidualReport check = verify_solution(sol, program);
        if (!check.passed(config.verify_tolerance)) {
            const auto& w = check.worst();
            std::ostringstream os;
            os << "verification failed: " << to_string(w.family) << " residual " << w.max_violation;
            RunRecord r = failed(mode, d, RunStatus::failed_verification, os.str());
            r.residuals = std::move(check);
            return r;
        }
        RunRecord r;
        r.mode = to_string(mode);
        r.max_deferral = d;
        r.peak_kw = sol.peak_kw;
        r.peak_norm = ratio(sol.peak_kw, base.peak_kw);
        r.cost_usd = sol.cost.total;
        r.cost_norm = ratio(sol.cost.total, base.cost_usd);
        r.reward_usd = sol.cost.reward;
        r.wear_usd = sol.cost.wear;
        r.profit_delta_usd = sol.cost.profit_delta;
        r.solve_ms = config.record_timing
                         ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count()
                         : 0.0;
        r.residuals = std::move(check);
        return r;
    } catch (const InfeasibleError& e) {
        return failed(mode, d, RunStatus::infeasible, e.what());
    } catch (const Error& e) {
        return failed(mode, d, RunStatus::not_converged, e.what());
    }
}

bool parse_double(std::string_view text, double& out) {
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && end == text.data() + text.size();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir) {
    json root;
    try {
        root = json::parse(json_text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    allow_keys(root, "config",
               {"slots", "slot_hours", "billing", "fleet", "demand", "modes", "deferrals",
                "shutdown", "renewable", "output", "tolerances", "seed", "threads", "record_timing"});

    ExperimentConfig c;
    read(root, "slots", "config", c.slots);
    read(root, "slot_hours", "config", c.slot_hours);
    read(root, "seed", "config", c.seed);
    read(root, "threads", "config", c.threads);
    read(root, "record_timing", "config", c.record_timing);

    if (root.contains("billing")) {
        const json& b = root.at("billing");
        allow_keys(b, "billing", {"energy_price", "demand_price", "windows"});
        read_series(b, "energy_price", "billing", c.energy_price);
        read(b, "demand_price", "billing", c.demand_price);
        if (b.contains("windows")) {
            if (!b.at("windows").is_array()) throw ConfigError("billing.windows must be an array");
            for (const json& w : b.at("windows")) {
                allow_keys(w, "billing.windows[]", {"slots", "first", "last", "price"});
                std::vector<std::size_t> slots;
                if (w.contains("slots")) {
                    read(w, "slots", "billing.windows[]", slots);
                } else {
                    std::size_t first = 1, last = c.slots;
                    read(w, "first", "billing.windows[]", first);
                    read(w, "last", "billing.windows[]", last);
                    if (first == 0 || last < first) throw ConfigError("billing.windows[]: need 1 <= first <= last");
                    for (std::size_t s = first; s <= last; ++s) slots.push_back(s);
                }
                double price = c.demand_price;
                read(w, "price", "billing.windows[]", price);
                c.windows.emplace_back(std::move(slots), price);
            }
        }
    }

    if (root.contains("fleet")) {
        const json& f = root.at("fleet");
        allow_keys(f, "fleet", {"servers", "target_utilization", "idle_kw", "active_kw",
                                "requests_per_server", "pue"});
        if (f.contains("servers")) {
            if (f.at("servers").is_string()) {
                if (f.at("servers").get<std::string>() != "auto") {
                    throw ConfigError("fleet.servers must be a count or \"auto\"");
                }
                c.servers = 0;
            } else {
                read(f, "servers", "fleet", c.servers);
                if (c.servers <= 0) throw ConfigError("fleet.servers must be positive");
            }
        }
        read(f, "target_utilization", "fleet", c.target_utilization);
        read(f, "idle_kw", "fleet", c.idle_kw);
        read(f, "active_kw", "fleet", c.active_kw);
        read(f, "requests_per_server", "fleet", c.requests_per_server);
        read_series(f, "pue", "fleet", c.pue);
    }

    if (root.contains("demand")) {
        const json& d = root.at("demand");
        allow_keys(d, "demand", {"trace", "scale", "synthetic", "elastic_fraction", "loss_lower",
                                 "loss_upper"});
        if (d.contains("trace") && !d.at("trace").is_null()) {
            std::string path;
            read(d, "trace", "demand", path);
            c.trace_path = resolve(path, base_dir);
        }
        read(d, "scale", "demand", c.trace_scale);
        if (d.contains("synthetic")) {
            const json& s = d.at("synthetic");
            allow_keys(s, "demand.synthetic", {"base", "amplitude", "period", "noise"});
            read(s, "base", "demand.synthetic", c.synthetic.base);
            read(s, "amplitude", "demand.synthetic", c.synthetic.amplitude);
            read(s, "period", "demand.synthetic", c.synthetic.period);
            read(s, "noise", "demand.synthetic", c.synthetic.noise);
        }
        read(d, "elastic_fraction", "demand", c.elastic_fraction);
        read(d, "loss_lower", "demand", c.loss_lower);
        read(d, "loss_upper", "demand", c.loss_upper);
    }

    if (root.contains("modes")) {
        std::vector<std::string> names;
        read(root, "modes", "config", names);
        c.modes.clear();
        for (const auto& n : names) {
            try {
                c.modes.push_back(parse_mode(n));
            } catch (const InvalidArgument& e) {
                throw ConfigError(std::string("modes: ") + e.what());
            }
        }
    }
    read(root, "deferrals", "config", c.deferrals);

    if (root.contains("shutdown")) {
        const json& s = root.at("shutdown");
        allow_keys(s, "shutdown", {"initial_servers", "toggle_kwh", "wear_usd", "pin_toggles"});
        if (s.contains("initial_servers")) {
            if (s.at("initial_servers").is_string()) {
                if (s.at("initial_servers").get<std::string>() != "all") {
                    throw ConfigError("shutdown.initial_servers must be a number or \"all\"");
                }
            } else {
                double m0 = 0.0;
                read(s, "initial_servers", "shutdown", m0);
                c.initial_servers = m0;
            }
        }
        read(s, "toggle_kwh", "shutdown", c.toggle_kwh);
        read(s, "wear_usd", "shutdown", c.wear_usd);
        read(s, "pin_toggles", "shutdown", c.pin_toggles);
    }

    if (root.contains("renewable")) {
        const json& r = root.at("renewable");
        allow_keys(r, "renewable", {"wind_trace", "turbine"});
        if (r.contains("wind_trace") && !r.at("wind_trace").is_null()) {
            std::string path;
            read(r, "wind_trace", "renewable", path);
            c.wind_path = resolve(path, base_dir);
        }
        if (r.contains("turbine")) {
            const json& t = r.at("turbine");
            allow_keys(t, "renewable.turbine", {"cut_in", "rated_speed", "cut_out", "rated_kw", "turbines"});
            read(t, "cut_in", "renewable.turbine", c.turbine.cut_in);
            read(t, "rated_speed", "renewable.turbine", c.turbine.rated_speed);
            read(t, "cut_out", "renewable.turbine", c.turbine.cut_out);
            read(t, "rated_kw", "renewable.turbine", c.turbine.rated_kw);
            read(t, "turbines", "renewable.turbine", c.turbine.turbines);
        }
    }

    if (root.contains("output") && !root.at("output").is_null()) {
        std::string path;
        read(root, "output", "config", path);
        c.output_path = resolve(path, base_dir);
    }

    if (root.contains("tolerances")) {
        const json& t = root.at("tolerances");
        allow_keys(t, "tolerances", {"optimality", "feasibility", "max_iterations", "verify"});
        read(t, "optimality", "tolerances", c.tolerances.optimality);
        read(t, "feasibility", "tolerances", c.tolerances.feasibility);
        read(t, "max_iterations", "tolerances", c.tolerances.max_iterations);
        read(t, "verify", "tolerances", c.verify_tolerance);
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path);
    std::ostringstream text;
    text << in.rdbuf();
    const auto dir = fs::path(path).parent_path();
    return parse_config(text.str(), dir.empty() ? "." : dir.string());
}

ExperimentInputs prepare_inputs(const ExperimentConfig& c) {
    const std::size_t tau = c.slots;
    if (tau == 0) throw ConfigError("slots must be positive");
    if (!(c.target_utilization > 0.0 && c.target_utilization <= 1.0)) {
        throw ConfigError("fleet.target_utilization must lie in (0, 1]");
    }
    for (int d : c.deferrals) {
        if (d < 0) throw ConfigError("deferrals must be >= 0");
    }

    Series lambda;
    if (c.trace_path) {
        lambda = load_request_trace(*c.trace_path, c.trace_scale);
        require_length(lambda, tau, *c.trace_path);
    } else {
        try {
            lambda = synth_diurnal_trace(tau, c.synthetic.base, c.synthetic.amplitude,
                                         c.synthetic.period, c.seed, c.synthetic.noise);
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("demand.synthetic: ") + e.what());
        }
    }

    try {
        int servers = c.servers;
        if (servers == 0) {
            const double peak = *std::max_element(lambda.begin(), lambda.end());
            servers = std::max(1, static_cast<int>(std::ceil(
                                      peak / (c.requests_per_server * c.target_utilization) - 1e-9)));
        }
        FleetModel fleet(servers, c.idle_kw, c.active_kw, c.requests_per_server,
                         expand(c.pue, tau, "fleet.pue"));

        std::vector<DemandWindow> windows;
        if (c.windows.empty()) {
            DemandWindow all;
            for (std::size_t t = 0; t < tau; ++t) all.slots.push_back(t);
            all.price = c.demand_price;
            windows.push_back(std::move(all));
        }
        for (const auto& [slots, price] : c.windows) {
            DemandWindow w;
            for (auto s : slots) {
                if (s == 0 || s > tau) throw ConfigError("demand window slot " + std::to_string(s) + " is outside the cycle");
                w.slots.push_back(s - 1);
            }
            w.price = price;
            windows.push_back(std::move(w));
        }
        BillingModel billing(tau, c.slot_hours, expand(c.energy_price, tau, "billing.energy_price"),
                             std::move(windows));
        DemandInput demand(lambda, c.elastic_fraction, c.loss_lower, c.loss_upper);
        (void)utilization(demand.requests(), fleet);

        ShutdownParams sp{c.initial_servers.value_or(static_cast<double>(fleet.servers())),
                          c.toggle_kwh, c.wear_usd, c.pin_toggles};
        sp.validate(fleet);

        std::optional<RenewableProfile> green;
        const bool renewable = std::find(c.modes.begin(), c.modes.end(), Mode::renewable) != c.modes.end();
        if (c.wind_path) {
            Series speeds = load_wind_trace(*c.wind_path);
            require_length(speeds, tau, *c.wind_path);
            green = wind_to_power(speeds, c.turbine, c.slot_hours);
        } else if (renewable) {
            throw ConfigError("renewable mode needs renewable.wind_trace");
        }
        return ExperimentInputs{std::move(demand), std::move(fleet), std::move(billing), sp, std::move(green)};
    } catch (const CapacityError& e) {
        throw ConfigError(std::string("demand exceeds the fleet: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    } catch (const DimensionError& e) {
        throw ConfigError(e.what());
    }
}

const char* to_string(RunStatus status) {
    switch (status) {
        case RunStatus::ok: return "ok";
        case RunStatus::infeasible: return "infeasible";
        case RunStatus::not_converged: return "not_converged";
        case RunStatus::failed_verification: return "failed_verification";
    }
    return "unknown";
}

RunRecord baseline_record(const ExperimentInputs& in) {
    const PowerProfile p = power_profile(in.demand.requests(), in.fleet);
    RunRecord r;
    r.mode = "baseline";
    r.peak_kw = *std::max_element(p.kw.begin(), p.kw.end());
    r.peak_norm = 1.0;
    r.cost_usd = electricity_cost(p, in.billing).total;
    r.cost_norm = 1.0;
    return r;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    return run_experiment(config, prepare_inputs(config));
}

ExperimentReport run_experiment(const ExperimentConfig& config, const ExperimentInputs& inputs) {
    ExperimentReport report;
    report.baseline = baseline_record(inputs);

    const std::set<Mode> modes(config.modes.begin(), config.modes.end());
    const std::set<int> horizons(config.deferrals.begin(), config.deferrals.end());
    std::vector<std::pair<Mode, int>> tasks;
    for (Mode m : modes) {
        if (m == Mode::renewable && !inputs.renewable) throw ConfigError("renewable mode needs a wind trace");
        for (int d : horizons) {
            if (d < 0) throw ConfigError("deferrals must be >= 0");
            tasks.emplace_back(m, d);
        }
    }

    report.runs.resize(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            report.runs[i] = run_one(config, inputs, report.baseline, tasks[i].first, tasks[i].second);
        }
    };
    unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                          : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(tasks.size(), 1)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    return report;
}

void export_report(const ExperimentReport& report, std::ostream& out) {
    out << kReportHeader << "\n";
    auto row = [&](const RunRecord& r) {
        out << r.mode << "," << r.max_deferral << "," << format_shortest(r.peak_kw) << ","
            << format_shortest(r.peak_norm) << "," << format_shortest(r.cost_usd) << ","
            << format_shortest(r.cost_norm) << "," << format_shortest(r.reward_usd) << ","
            << format_shortest(r.wear_usd) << "," << format_shortest(r.profit_delta_usd) << ","
            << format_shortest(r.solve_ms) << "\n";
    };
    row(report.baseline);
    for (const auto& r : report.runs) row(r);
}

void export_report(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write report " + path);
    export_report(report, out);
    out.flush();
    if (!out) throw Error("write failed for report " + path);
}

ExperimentReport parse_report(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("empty report");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kReportHeader) throw Error("unexpected report header: " + line);

    ExperimentReport report;
    bool first = true;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string_view> f;
        std::string_view rest = line;
        for (;;) {
            const auto comma = rest.find(',');
            f.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (f.size() != 10) throw Error("report line " + std::to_string(lineno) + ": expected 10 fields");
        RunRecord r;
        r.mode = std::string(f[0]);
        const auto [end, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), r.max_deferral);
        bool ok = ec == std::errc{} && end == f[1].data() + f[1].size();
        double* dst[] = {&r.peak_kw, &r.peak_norm, &r.cost_usd, &r.cost_norm, &r.reward_usd,
                         &r.wear_usd, &r.profit_delta_usd, &r.solve_ms};
        for (std::size_t i = 0; i < 8; ++i) ok = ok && parse_double(f[i + 2], *dst[i]);
        if (!ok) throw Error("report line " + std::to_string(lineno) + ": malformed number");
        if (std::isnan(r.cost_usd)) r.status = RunStatus::not_converged;
        if (first) {
            report.baseline = std::move(r);
            first = false;
        } else {
            report.runs.push_back(std::move(r));
        }
    }
    if (first) throw Error("report has no baseline row");
    return report;
}

}  // namespace dcdr
