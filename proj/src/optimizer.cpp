#include "dcdr/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "dcdr/error.hpp"

namespace dcdr {

namespace {

constexpr double kUnchecked = std::numeric_limits<double>::infinity();

std::string family_of(const ProgramSpec& program, const cvx::Result& r) {
    switch (r.worst_kind) {
        case cvx::RowKind::equality:
            if (r.worst_row >= 0) return to_string(program.eq_family[static_cast<std::size_t>(r.worst_row)]);
            break;
        case cvx::RowKind::inequality:
            if (r.worst_row >= 0) return to_string(program.ineq_family[static_cast<std::size_t>(r.worst_row)]);
            break;
        case cvx::RowKind::quadratic:
            return to_string(ConstraintFamily::profit);
    }
    return "unknown";
}

std::optional<std::size_t> slot_of(const ProgramSpec& program, const cvx::Result& r) {
    if (r.worst_row < 0) return std::nullopt;
    const auto row = static_cast<std::size_t>(r.worst_row);
    if (r.worst_kind == cvx::RowKind::equality) return program.eq_slot[row];
    if (r.worst_kind == cvx::RowKind::inequality) return program.ineq_slot[row];
    return std::nullopt;
}

// Bill, billed power and plan for a schedule under the program's mode.
struct Evaluation {
    CostBreakdown cost;
    Series billed;
};

Evaluation evaluate(const ProgramSpec& program, const DeferralSchedule& schedule,
                    const std::optional<ServerPlan>& plan) {
    const Series load = scheduled_load(schedule, program.demand);
    Evaluation e;
    switch (program.mode) {
        case Mode::base: {
            PowerProfile p = power_profile(load, program.fleet, kUnchecked);
            e.cost = electricity_cost(p, program.billing);
            e.billed = std::move(p.kw);
            break;
        }
        case Mode::shutdown: {
            e.cost = shutdown_cost(load, *plan, program.fleet, program.billing, *program.shutdown);
            e.billed = shutdown_billed_power(load, *plan, program.fleet, program.billing,
                                             *program.shutdown);
            break;
        }
        case Mode::renewable: {
            const PowerProfile p = power_profile(load, program.fleet, kUnchecked);
            e.cost = renewable_cost(p, *program.renewable, program.billing);
            const double T = program.billing.slot_hours();
            e.billed.resize(p.kw.size());
            for (std::size_t t = 0; t < p.kw.size(); ++t) {
                e.billed[t] = std::max(p.kw[t] - program.renewable->kwh[t] / T, 0.0);
            }
            break;
        }
    }
    return e;
}

}  // namespace

Solution solve(const ProgramSpec& program, const Tolerances& tolerances) {
    const auto started = std::chrono::steady_clock::now();

    cvx::Options opts;
    opts.tolerance = tolerances.optimality;
    opts.feasibility_tolerance = tolerances.feasibility;
    opts.max_iterations = tolerances.max_iterations;
    opts.acceptable_tolerance = std::max(tolerances.acceptable, tolerances.optimality);
    const cvx::Result r = cvx::solve(program.problem, opts);

    if (r.status == cvx::Status::infeasible) {
        std::ostringstream os;
        os << "program infeasible: " << family_of(program, r) << " rows cannot be satisfied";
        if (auto slot = slot_of(program, r)) os << " (slot " << *slot + 1 << ")";
        os << ", primal residual " << r.primal_residual;
        throw InfeasibleError(family_of(program, r), os.str());
    }
    if (r.status != cvx::Status::optimal) {
        std::ostringstream os;
        os << "solver stopped (" << cvx::to_string(r.status) << ") after " << r.iterations
           << " iterations: primal " << r.primal_residual << ", dual " << r.dual_residual
           << ", gap " << r.gap;
        throw ConvergenceError(os.str());
    }

    const auto& L = program.layout;
    const auto& demand = program.demand;
    const std::size_t tau = L.slots;
    cvx::Vector x = r.x;

    // Project onto the demand rows and the deferral cap.
    DeferralSchedule schedule(L.max_deferral, tau);
    for (std::size_t t = 0; t < tau; ++t) {
        double q = 0.0;
        for (int d = 1; d <= L.max_deferral; ++d) {
            const auto v = L.eta_at(d, t);
            if (v < 0) continue;
            schedule.at(d, t) = std::max(x[v], 0.0);
            q += schedule.at(d, t);
        }
        const double cap = demand.deferrable(t);
        if (q > cap) {
            const double shrink = cap / q;
            q = 0.0;
            for (int d = 1; d <= L.max_deferral; ++d) {
                schedule.at(d, t) *= shrink;
                q += schedule.at(d, t);
            }
        }
        schedule.at(0, t) = std::max(demand.requests()[t] - q, 0.0);
        for (int d = 0; d <= L.max_deferral; ++d) {
            const auto v = L.eta_at(d, t);
            if (v >= 0) x[v] = schedule.at(d, t);
        }
    }

    std::optional<ServerPlan> plan;
    if (program.mode == Mode::shutdown) {
        const auto& sp = *program.shutdown;
        if (sp.pin_toggles) {
            plan = ServerPlan::constant(sp.initial_servers, tau);
        } else {
            Series on(tau), off(tau);
            for (std::size_t t = 0; t < tau; ++t) {
                on[t] = std::max(x[L.turn_on[t]], 0.0);
                off[t] = std::max(x[L.turn_off[t]], 0.0);
            }
            plan = ServerPlan::from_toggles(sp.initial_servers, std::move(on), std::move(off));
            for (std::size_t t = 0; t < tau; ++t) {
                x[L.turn_on[t]] = plan->turn_on[t];
                x[L.turn_off[t]] = plan->turn_off[t];
                x[L.servers[t]] = plan->on[t];
            }
        }
        const int n = program.fleet.servers();
        plan->rounded.resize(tau);
        for (std::size_t t = 0; t < tau; ++t) {
            const double up = std::ceil(plan->on[t] - 1e-9);
            plan->rounded[t] = static_cast<int>(std::clamp(up, 0.0, static_cast<double>(n)));
        }
    }

    Evaluation e = evaluate(program, schedule, plan);

    // The tie-break weight is below the solver tolerance, so deferral that
    // does not lower the bill can survive. Serving everything on arrival is
    // always feasible outside shutdown mode and wins such ties.
    if (program.mode != Mode::shutdown && schedule.total_deferred() > 0.0) {
        DeferralSchedule none = DeferralSchedule::identity(demand, L.max_deferral);
        Evaluation e0 = evaluate(program, none, plan);
        if (e0.cost.total <= e.cost.total) {
            schedule = std::move(none);
            e = std::move(e0);
            for (std::size_t t = 0; t < tau; ++t) {
                for (int d = 0; d <= L.max_deferral; ++d) {
                    const auto v = L.eta_at(d, t);
                    if (v >= 0) x[v] = schedule.at(d, t);
                }
            }
        }
    }

    // Epigraph variables sit exactly on the peaks they bound.
    for (std::size_t j = 0; j < L.window_peak.size(); ++j) {
        double peak = 0.0;
        for (auto t : program.billing.windows()[j].slots) peak = std::max(peak, e.billed[t]);
        x[L.window_peak[j]] = peak;
    }
    if (program.mode == Mode::renewable) {
        for (std::size_t t = 0; t < tau; ++t) {
            x[L.surplus[t]] = program.billing.slot_hours() * e.billed[t];
        }
    }

    RewardSchedule rewards = optimal_reward(schedule, demand);
    CostBreakdown cost = e.cost;
    cost.reward = total_reward(schedule, rewards);
    cost.baseline = program.baseline;
    cost.profit_delta = cost.baseline - (cost.total + cost.reward + cost.wear);

    Solution sol{program.mode,
                 std::move(schedule),
                 std::move(rewards),
                 std::move(plan),
                 e.billed,
                 e.billed.empty() ? 0.0 : *std::max_element(e.billed.begin(), e.billed.end()),
                 std::move(cost),
                 program.cost_linear.dot(x) + program.cost_constant,
                 {}};
    sol.diagnostics.iterations = r.iterations;
    sol.diagnostics.primal_residual = r.primal_residual;
    sol.diagnostics.dual_residual = r.dual_residual;
    sol.diagnostics.gap = r.gap;
    sol.diagnostics.solve_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return sol;
}

bool ResidualReport::passed(double tolerance, double objective_tolerance) const {
    for (const auto& f : families) {
        const double limit = f.family == ConstraintFamily::objective ? objective_tolerance : tolerance;
        if (!(f.max_violation <= limit)) return false;
    }
    return true;
}

const FamilyResidual& ResidualReport::at(ConstraintFamily family) const {
    for (const auto& f : families) {
        if (f.family == family) return f;
    }
    throw InvalidArgument(std::string("residual report has no family ") + to_string(family));
}

const FamilyResidual& ResidualReport::worst() const {
    if (families.empty()) throw InvalidArgument("empty residual report");
    return *std::max_element(families.begin(), families.end(),
                             [](const auto& a, const auto& b) { return a.max_violation < b.max_violation; });
}

std::string ResidualReport::describe() const {
    std::ostringstream os;
    for (const auto& f : families) {
        os << to_string(f.family) << ": " << f.max_violation;
        if (f.slot) os << " (slot " << *f.slot + 1 << ")";
        os << "\n";
    }
    return os.str();
}

ResidualReport verify_solution(const Solution& solution, const ProgramSpec& program) {
    const auto& demand = program.demand;
    const auto& fleet = program.fleet;
    const auto& s = solution.schedule;
    const std::size_t tau = demand.slot_count();
    if (s.slot_count() != tau) throw DimensionError("verify_solution: horizon mismatch");

    ResidualReport report;
    // Shutdown mode holds several family references at once; no reallocation.
    report.families.reserve(static_cast<std::size_t>(ConstraintFamily::objective) + 1);
    auto family = [&](ConstraintFamily f) -> FamilyResidual& {
        report.families.push_back(FamilyResidual{f, 0.0, std::nullopt});
        return report.families.back();
    };
    auto record = [](FamilyResidual& f, double violation, std::optional<std::size_t> slot) {
        if (violation > f.max_violation || std::isnan(violation)) {
            f.max_violation = violation;
            f.slot = slot;
        }
    };

    const double capacity = fleet.capacity();
    const Series load = scheduled_load(s, demand);

    {
        auto& f = family(ConstraintFamily::boundary);
        for (std::size_t t = 0; t < tau; ++t) {
            for (int d = 0; d <= s.max_deferral(); ++d) {
                if (!s.in_horizon(d, t)) {
                    record(f, std::abs(s.at(d, t)) / std::max(1.0, demand.requests()[t]), t);
                }
            }
        }
    }
    {
        auto& f = family(ConstraintFamily::nonnegativity);
        for (std::size_t t = 0; t < tau; ++t) {
            for (int d = 0; d <= s.max_deferral(); ++d) {
                record(f, -s.at(d, t) / std::max(1.0, demand.requests()[t]), t);
            }
        }
    }
    {
        auto& f = family(ConstraintFamily::demand);
        for (std::size_t t = 0; t < tau; ++t) {
            const double lambda = demand.requests()[t];
            record(f, std::abs(s.generated(t) - lambda) / std::max(1.0, lambda), t);
        }
    }
    {
        auto& f = family(ConstraintFamily::capacity);
        for (std::size_t t = 0; t < tau; ++t) record(f, (load[t] - capacity) / capacity, t);
    }
    {
        auto& f = family(ConstraintFamily::deferral_cap);
        for (std::size_t t = 0; t < tau; ++t) {
            const double cap = demand.deferrable(t);
            record(f, (s.deferred(t) - cap) / std::max(1.0, cap), t);
        }
    }
    {
        auto& f = family(ConstraintFamily::reward_domain);
        const auto& g = solution.rewards.gamma;
        for (std::size_t t = 0; t < tau; ++t) {
            const double lb = demand.loss_lower()[t];
            const double ub = demand.loss_upper()[t];
            const double v = t < g.size() ? std::max(lb - g[t], g[t] - ub) / ub : kUnchecked;
            record(f, v, t);
        }
    }

    if (program.mode == Mode::shutdown) {
        if (!solution.servers) throw InvalidArgument("verify_solution: shutdown solution has no server plan");
        const auto& plan = *solution.servers;
        const double n = fleet.servers();
        const double nu = fleet.requests_per_server();
        auto& balance = family(ConstraintFamily::server_balance);
        auto& floor = family(ConstraintFamily::server_floor);
        auto& ceiling = family(ConstraintFamily::server_ceiling);
        auto& toggles = family(ConstraintFamily::toggle_nonnegativity);
        auto& rounding = family(ConstraintFamily::rounding);
        double prev = program.shutdown->initial_servers;
        for (std::size_t t = 0; t < tau; ++t) {
            record(balance, std::abs(plan.on[t] - prev - plan.turn_on[t] + plan.turn_off[t]) / n, t);
            prev = plan.on[t];
            record(floor, (load[t] / nu - plan.on[t]) / n, t);
            record(ceiling, (plan.on[t] - n) / n, t);
            record(toggles, std::max(-plan.turn_on[t], -plan.turn_off[t]) / n, t);
            if (t < plan.rounded.size()) record(rounding, (load[t] / nu - plan.rounded[t]) / n, t);
        }
    }

    const Evaluation e = evaluate(program, s, solution.servers);
    {
        auto& f = family(ConstraintFamily::profit);
        const double reward = total_reward(s, solution.rewards);
        const double money = program.baseline > 0.0 ? program.baseline : 1.0;
        record(f, (e.cost.total + reward + e.cost.wear - program.baseline) / money, std::nullopt);
    }
    {
        auto& f = family(ConstraintFamily::objective);
        const double scale = std::max(std::abs(e.cost.total), std::numeric_limits<double>::min());
        record(f, std::abs(solution.objective - e.cost.total) / scale, std::nullopt);
    }
    return report;
}

}  // namespace dcdr
