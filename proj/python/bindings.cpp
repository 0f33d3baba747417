#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dcdr/error.hpp"
#include "dcdr/experiment.hpp"
#include "dcdr/incentive.hpp"
#include "dcdr/optimizer.hpp"
#include "dcdr/oracle.hpp"
#include "dcdr/trace_io.hpp"

namespace py = pybind11;
using namespace dcdr;

namespace {

py::list schedule_rows(const DeferralSchedule& s) {
    py::list rows;
    for (int d = 0; d <= s.max_deferral(); ++d) {
        Series row(s.slot_count());
        for (std::size_t t = 0; t < s.slot_count(); ++t) row[t] = s.at(d, t);
        rows.append(py::cast(row));
    }
    return rows;
}

DeferralSchedule schedule_from_rows(const std::vector<Series>& rows) {
    if (rows.empty()) throw InvalidArgument("schedule needs at least the d = 0 row");
    DeferralSchedule s(static_cast<int>(rows.size()) - 1, rows[0].size());
    for (std::size_t d = 0; d < rows.size(); ++d) {
        if (rows[d].size() != rows[0].size()) throw DimensionError("schedule rows differ in length");
        for (std::size_t t = 0; t < rows[d].size(); ++t) s.at(static_cast<int>(d), t) = rows[d][t];
    }
    return s;
}

py::dict cost_dict(const CostBreakdown& c) {
    py::dict d;
    d["energy"] = c.energy;
    d["demand"] = c.demand;
    d["reward"] = c.reward;
    d["wear"] = c.wear;
    d["total"] = c.total;
    d["baseline"] = c.baseline;
    d["profit_delta"] = c.profit_delta;
    return d;
}

py::dict residual_dict(const ResidualReport& r) {
    py::dict d;
    for (const auto& f : r.families) {
        d[to_string(f.family)] = py::make_tuple(f.max_violation, f.slot ? py::cast(*f.slot) : py::none());
    }
    return d;
}

py::dict record_dict(const RunRecord& r) {
    py::dict d;
    d["mode"] = r.mode;
    d["D"] = r.max_deferral;
    d["peak_kw"] = r.peak_kw;
    d["peak_norm"] = r.peak_norm;
    d["cost_usd"] = r.cost_usd;
    d["cost_norm"] = r.cost_norm;
    d["reward_usd"] = r.reward_usd;
    d["wear_usd"] = r.wear_usd;
    d["profit_delta_usd"] = r.profit_delta_usd;
    d["solve_ms"] = r.solve_ms;
    d["status"] = to_string(r.status);
    d["message"] = r.message;
    return d;
}

}  // namespace

PYBIND11_MODULE(_dcdr, m) {
    m.doc() = "Reward-based request deferral for data-center demand response";

    auto error = py::register_exception<Error>(m, "Error");
    py::register_exception<InfeasibleError>(m, "InfeasibleError", error);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", error);
    py::register_exception<ConfigError>(m, "ConfigError", error);
    py::register_exception<TraceError>(m, "TraceError", error);
    py::register_exception<CapacityError>(m, "CapacityError", error);
    py::register_exception<InfeasibleRewardError>(m, "InfeasibleRewardError", error);
    py::register_exception<DimensionError>(m, "DimensionError", error);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", error);

    py::enum_<Mode>(m, "Mode")
        .value("base", Mode::base)
        .value("shutdown", Mode::shutdown)
        .value("renewable", Mode::renewable);

    py::class_<DemandInput>(m, "DemandInput")
        .def(py::init<Series, double, double, double>(), py::arg("requests"),
             py::arg("elastic_fraction") = 0.5, py::arg("loss_lower") = 1e-3, py::arg("loss_upper") = 1e-2)
        .def(py::init<Series, Series, Series, Series>(), py::arg("requests"), py::arg("elastic_fraction"),
             py::arg("loss_lower"), py::arg("loss_upper"))
        .def_property_readonly("requests", &DemandInput::requests)
        .def_property_readonly("slot_count", &DemandInput::slot_count);

    py::class_<FleetModel>(m, "FleetModel")
        .def(py::init<int, double, double, double, std::size_t, double>(), py::arg("servers"),
             py::arg("idle_kw"), py::arg("active_kw"), py::arg("requests_per_server"), py::arg("slot_count"),
             py::arg("pue") = 1.2)
        .def(py::init<int, double, double, double, Series>(), py::arg("servers"), py::arg("idle_kw"),
             py::arg("active_kw"), py::arg("requests_per_server"), py::arg("pue"))
        .def_property_readonly("servers", &FleetModel::servers)
        .def_property_readonly("capacity", &FleetModel::capacity);

    py::class_<BillingModel>(m, "BillingModel")
        .def_static("flat", &BillingModel::flat, py::arg("slot_count"), py::arg("slot_hours"),
                    py::arg("energy_price"), py::arg("demand_price"))
        .def(py::init([](std::size_t slots, double hours, Series price,
                         const std::vector<std::pair<std::vector<std::size_t>, double>>& windows) {
                 std::vector<DemandWindow> w;
                 for (const auto& [s, p] : windows) w.push_back(DemandWindow{s, p});
                 return BillingModel(slots, hours, std::move(price), std::move(w));
             }),
             py::arg("slot_count"), py::arg("slot_hours"), py::arg("energy_price"), py::arg("windows"));

    py::class_<ShutdownParams>(m, "ShutdownParams")
        .def(py::init<double, double, double, bool>(), py::arg("initial_servers"), py::arg("toggle_kwh") = 0.01,
             py::arg("wear_usd") = 0.01, py::arg("pin_toggles") = false)
        .def_readwrite("initial_servers", &ShutdownParams::initial_servers)
        .def_readwrite("toggle_kwh", &ShutdownParams::toggle_kwh)
        .def_readwrite("wear_usd", &ShutdownParams::wear_usd)
        .def_readwrite("pin_toggles", &ShutdownParams::pin_toggles);

    py::class_<TurbineCurve>(m, "TurbineCurve")
        .def(py::init([](double cut_in, double rated_speed, double cut_out, double rated_kw, int turbines) {
                 return TurbineCurve{cut_in, rated_speed, cut_out, rated_kw, turbines};
             }),
             py::arg("cut_in") = 3.0, py::arg("rated_speed") = 12.0, py::arg("cut_out") = 25.0,
             py::arg("rated_kw") = 10.0, py::arg("turbines") = 2)
        .def("power_kw", &TurbineCurve::power_kw);

    py::class_<Tolerances>(m, "Tolerances")
        .def(py::init([](double optimality, double feasibility, int max_iterations) {
                 return Tolerances{optimality, feasibility, max_iterations};
             }),
             py::arg("optimality") = 1e-8, py::arg("feasibility") = 1e-8, py::arg("max_iterations") = 200);

    py::class_<ProgramSpec>(m, "Program")
        .def_property_readonly("baseline", [](const ProgramSpec& p) { return p.baseline; })
        .def_property_readonly("variables", [](const ProgramSpec& p) { return p.layout.count; })
        .def_property_readonly("mode", [](const ProgramSpec& p) { return p.mode; });

    py::class_<Solution>(m, "Solution")
        .def_property_readonly("schedule", [](const Solution& s) { return schedule_rows(s.schedule); })
        .def_property_readonly("rewards", [](const Solution& s) { return s.rewards.gamma; })
        .def_property_readonly("servers", [](const Solution& s) -> py::object {
            if (!s.servers) return py::none();
            return py::cast(s.servers->on);
        })
        .def_property_readonly("billed_power", [](const Solution& s) { return s.billed_power; })
        .def_property_readonly("peak_kw", [](const Solution& s) { return s.peak_kw; })
        .def_property_readonly("cost", [](const Solution& s) { return cost_dict(s.cost); })
        .def_property_readonly("objective", [](const Solution& s) { return s.objective; })
        .def_property_readonly("iterations", [](const Solution& s) { return s.diagnostics.iterations; });

    m.def("build_base_program",
          [](const DemandInput& d, const FleetModel& f, const BillingModel& b, int D) {
              return build_base_program(d, f, b, D);
          },
          py::arg("demand"), py::arg("fleet"), py::arg("billing"), py::arg("max_deferral"));
    m.def("build_shutdown_program",
          [](const DemandInput& d, const FleetModel& f, const BillingModel& b, int D, const ShutdownParams& p) {
              return build_shutdown_program(d, f, b, D, p);
          },
          py::arg("demand"), py::arg("fleet"), py::arg("billing"), py::arg("max_deferral"), py::arg("params"));
    m.def("build_renewable_program",
          [](const DemandInput& d, const FleetModel& f, const BillingModel& b, int D, const Series& g) {
              return build_renewable_program(d, f, b, D, RenewableProfile{g});
          },
          py::arg("demand"), py::arg("fleet"), py::arg("billing"), py::arg("max_deferral"), py::arg("green_kwh"));

    m.def("solve", &solve, py::arg("program"), py::arg("tolerances") = Tolerances{},
          py::call_guard<py::gil_scoped_release>());
    m.def("verify_solution",
          [](const Solution& s, const ProgramSpec& p) { return residual_dict(verify_solution(s, p)); },
          py::arg("solution"), py::arg("program"));

    m.def("baseline_cost",
          [](const DemandInput& d, const FleetModel& f, const BillingModel& b) {
              return cost_dict(baseline_cost(d, f, b));
          },
          py::arg("demand"), py::arg("fleet"), py::arg("billing"));
    m.def("optimal_reward",
          [](const std::vector<Series>& rows, const DemandInput& d) {
              return optimal_reward(schedule_from_rows(rows), d).gamma;
          },
          py::arg("schedule"), py::arg("demand"));
    m.def("dominant_strategy",
          [](double kappa, double gamma) { return dominant_strategy(kappa, gamma) == Participation::participate; },
          py::arg("kappa"), py::arg("gamma"),
          "True when a user with utility loss kappa accepts reward gamma.");

    m.def("brute_force_oracle",
          [](const DemandInput& d, const FleetModel& f, const BillingModel& b, int D, int grid_steps) {
              const OracleResult r = brute_force_oracle(d, f, b, D, grid_steps);
              py::dict out = cost_dict(r.cost);
              out["schedule"] = schedule_rows(r.schedule);
              return out;
          },
          py::arg("demand"), py::arg("fleet"), py::arg("billing"), py::arg("max_deferral"),
          py::arg("grid_steps") = 21);

    m.def("synth_diurnal_trace", &synth_diurnal_trace, py::arg("slots"), py::arg("base"), py::arg("amplitude"),
          py::arg("period") = 24.0, py::arg("seed") = 1, py::arg("noise") = 0.05);
    m.def("load_request_trace", &load_request_trace, py::arg("path"), py::arg("scale") = 1.0);
    m.def("write_request_trace", &write_request_trace, py::arg("path"), py::arg("requests"));
    m.def("load_wind_trace", &load_wind_trace, py::arg("path"));
    m.def("wind_to_power",
          [](const Series& v, const TurbineCurve& c, double hours) { return wind_to_power(v, c, hours).kwh; },
          py::arg("speeds"), py::arg("curve") = TurbineCurve{}, py::arg("slot_hours") = 1.0);

    m.def("run_experiment",
          [](const std::string& config_path, std::optional<std::string> out) {
              ExperimentConfig c = load_config(config_path);
              ExperimentReport report;
              {
                  py::gil_scoped_release release;
                  report = run_experiment(c);
              }
              if (out) export_report(report, *out);
              py::list rows;
              rows.append(record_dict(report.baseline));
              for (const auto& r : report.runs) rows.append(record_dict(r));
              return rows;
          },
          py::arg("config"), py::arg("out") = py::none(),
          "Runs the experiment in a JSON config; returns the baseline row followed by one row per run.");
}
