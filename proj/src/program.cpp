#include "dcdr/program.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dcdr/error.hpp"

namespace dcdr {

namespace {

using Index = Eigen::Index;
using Triplet = Eigen::Triplet<double>;

// Sparse row under construction: (column, coefficient) pairs.
using Row = std::vector<std::pair<Index, double>>;

void axpy(Row& row, double a, const Row& x) {
    for (const auto& [c, v] : x) row.emplace_back(c, a * v);
}

class Builder {
public:
    explicit Builder(ProgramSpec& spec) : spec_(spec) {}

    Index add_variable(double scale, double start) {
        scale_.push_back(scale);
        start_.push_back(start);
        return spec_.layout.count++;
    }

    void add_eq(const Row& row, double rhs, ConstraintFamily family, std::size_t slot) {
        for (const auto& [c, v] : row) eq_.emplace_back(eq_rhs_.size(), c, v);
        eq_rhs_.push_back(rhs);
        spec_.eq_family.push_back(family);
        spec_.eq_slot.push_back(slot);
    }

    void add_le(const Row& row, double rhs, ConstraintFamily family, std::size_t slot) {
        for (const auto& [c, v] : row) le_.emplace_back(le_rhs_.size(), c, v);
        le_rhs_.push_back(rhs);
        spec_.ineq_family.push_back(family);
        spec_.ineq_slot.push_back(slot);
    }

    void finish(const Row& cost, double cost_constant, const Row& tie_break, const Row& profit_linear,
                double profit_constant, const std::vector<Row>& reward_forms,
                const std::vector<double>& reward_weights, double money_scale) {
        const Index n = spec_.layout.count;
        auto& p = spec_.problem;

        spec_.cost_linear = cvx::Vector::Zero(n);
        for (const auto& [c, v] : cost) spec_.cost_linear[c] += v;
        spec_.cost_constant = cost_constant;

        p.objective = spec_.cost_linear;
        for (const auto& [c, v] : tie_break) p.objective[c] += v;

        p.eq_matrix.resize(static_cast<Index>(eq_rhs_.size()), n);
        p.eq_matrix.setFromTriplets(eq_.begin(), eq_.end());
        p.eq_rhs = Eigen::Map<const cvx::Vector>(eq_rhs_.data(), static_cast<Index>(eq_rhs_.size()));

        p.ineq_matrix.resize(static_cast<Index>(le_rhs_.size()), n);
        p.ineq_matrix.setFromTriplets(le_.begin(), le_.end());
        p.ineq_rhs = Eigen::Map<const cvx::Vector>(le_rhs_.data(), static_cast<Index>(le_rhs_.size()));

        cvx::QuadraticConstraint profit;
        std::vector<Triplet> ft;
        for (std::size_t k = 0; k < reward_forms.size(); ++k) {
            for (const auto& [c, v] : reward_forms[k]) ft.emplace_back(static_cast<Index>(k), c, v);
        }
        profit.forms.resize(static_cast<Index>(reward_forms.size()), n);
        profit.forms.setFromTriplets(ft.begin(), ft.end());
        profit.weights = Eigen::Map<const cvx::Vector>(reward_weights.data(),
                                                       static_cast<Index>(reward_weights.size()));
        profit.linear = cvx::Vector::Zero(n);
        for (const auto& [c, v] : profit_linear) profit.linear[c] += v;
        profit.constant = profit_constant;
        profit.scale = 1.0 / money_scale;
        p.quadratic = {std::move(profit)};

        p.variable_scale = Eigen::Map<const cvx::Vector>(scale_.data(), n);
        p.start = Eigen::Map<const cvx::Vector>(start_.data(), n);
        p.objective_scale = 1.0 / money_scale;
    }

private:
    ProgramSpec& spec_;
    std::vector<double> scale_;
    std::vector<double> start_;
    std::vector<Triplet> eq_;
    std::vector<double> eq_rhs_;
    std::vector<Triplet> le_;
    std::vector<double> le_rhs_;
};

ProgramSpec build(Mode mode, const DemandInput& demand, const FleetModel& fleet,
                  const BillingModel& billing, int max_deferral,
                  const std::optional<ShutdownParams>& shutdown,
                  const std::optional<RenewableProfile>& renewable, const BuildOptions& options) {
    if (max_deferral < 0) throw InvalidArgument("maximum deferral must be non-negative");
    check_horizon(demand, fleet, billing);
    const std::size_t tau = demand.slot_count();
    const double capacity = fleet.capacity();
    for (std::size_t t = 0; t < tau; ++t) {
        if (demand.requests()[t] > capacity * (1.0 + kCapacityTolerance)) {
            throw InfeasibleError(to_string(ConstraintFamily::capacity),
                                  CapacityError(t, demand.requests()[t], capacity).what());
        }
    }
    if (shutdown) shutdown->validate(fleet);
    if (renewable) {
        if (renewable->kwh.size() != tau) throw DimensionError("renewable profile: horizon mismatch");
        for (double g : renewable->kwh) {
            if (!(g >= 0.0) || !std::isfinite(g)) {
                throw InvalidArgument("renewable generation must be finite and non-negative");
            }
        }
    }

    const CostBreakdown base = baseline_cost(demand, fleet, billing);
    ProgramSpec spec{mode,      demand, fleet, billing, max_deferral, shutdown, renewable,
                     base.total, options, {},    {},    {},           0.0,      {},
                     {},        {},     {}};
    Builder b(spec);
    auto& L = spec.layout;
    L.max_deferral = max_deferral;
    L.slots = tau;

    const double T = billing.slot_hours();
    const double nu = fleet.requests_per_server();
    const double e0 = fleet.idle_kw();
    const double e1 = fleet.active_kw();
    const double N = fleet.servers();
    const auto& pue = fleet.pue();
    const auto& alpha = billing.energy_price();
    const auto& lambda = demand.requests();

    const double money = base.total > 0.0 ? base.total : 1.0;
    const PowerProfile base_power = power_profile(lambda, fleet);
    const double peak_ref = std::max(*std::max_element(base_power.kw.begin(), base_power.kw.end()), 1e-12);

    // Deferral variables.
    L.eta.assign(static_cast<std::size_t>(max_deferral + 1) * tau, -1);
    std::vector<std::vector<Index>> deferral_vars(tau);
    for (std::size_t t = 0; t < tau; ++t) {
        const double cap = demand.deferrable(t);
        const int horizon = static_cast<int>(std::min<std::size_t>(max_deferral, tau - 1 - t));
        const int movable = cap > 0.0 ? horizon : 0;
        const double q0 = movable > 0 ? 0.01 * cap : 0.0;
        L.eta[t] = b.add_variable(capacity, lambda[t] - q0);
        for (int d = 1; d <= movable; ++d) {
            const Index v = b.add_variable(capacity, q0 / movable);
            L.eta[static_cast<std::size_t>(d) * tau + t] = v;
            deferral_vars[t].push_back(v);
        }
    }

    // lambda_hat[t] as a row over eta.
    std::vector<Row> load(tau);
    for (std::size_t t = 0; t < tau; ++t) {
        for (int d = 0; d <= max_deferral; ++d) {
            if (t < static_cast<std::size_t>(d)) break;
            const Index v = L.eta_at(d, t - d);
            if (v >= 0) load[t].emplace_back(v, 1.0);
        }
    }

    // Demand satisfaction and non-negativity.
    for (std::size_t t = 0; t < tau; ++t) {
        Row row{{L.eta_at(0, t), 1.0}};
        for (Index v : deferral_vars[t]) row.emplace_back(v, 1.0);
        b.add_eq(row, lambda[t], ConstraintFamily::demand, t);
    }
    for (std::size_t t = 0; t < tau; ++t) {
        b.add_le({{L.eta_at(0, t), -1.0}}, 0.0, ConstraintFamily::nonnegativity, t);
        for (Index v : deferral_vars[t]) b.add_le({{v, -1.0}}, 0.0, ConstraintFamily::nonnegativity, t);
    }
    // gamma* <= Ub.
    for (std::size_t t = 0; t < tau; ++t) {
        if (deferral_vars[t].empty()) continue;
        Row row;
        for (Index v : deferral_vars[t]) row.emplace_back(v, 1.0);
        b.add_le(row, demand.deferrable(t), ConstraintFamily::deferral_cap, t);
    }

    Row cost;
    double cost_constant = 0.0;
    Row tie_break;
    Row profit_linear;

    // Window peak variables; the rows that bound them depend on the mode.
    L.window_peak.clear();
    for (std::size_t j = 0; j < billing.windows().size(); ++j) {
        double start = 0.0;
        for (auto t : billing.windows()[j].slots) start = std::max(start, base_power.kw[t]);
        L.window_peak.push_back(b.add_variable(peak_ref, 1.05 * start + 1e-3 * peak_ref));
        cost.emplace_back(L.window_peak.back(), billing.windows()[j].price);
    }

    // Per-slot billed power as (row, constant): power[t] = row . x + constant.
    std::vector<Row> power_row(tau);
    std::vector<double> power_const(tau, 0.0);

    switch (mode) {
        case Mode::base: {
            for (std::size_t t = 0; t < tau; ++t) {
                b.add_le(load[t], capacity, ConstraintFamily::capacity, t);
                axpy(power_row[t], pue[t] * e1 / nu, load[t]);
                power_const[t] = pue[t] * N * e0;
                axpy(cost, T * alpha[t], power_row[t]);
                cost_constant += T * alpha[t] * power_const[t];
            }
            break;
        }
        case Mode::shutdown: {
            const auto& sp = *shutdown;
            if (sp.pin_toggles) {
                for (std::size_t t = 0; t < tau; ++t) {
                    Row floor;
                    axpy(floor, 1.0 / nu, load[t]);
                    b.add_le(floor, sp.initial_servers, ConstraintFamily::server_floor, t);
                    axpy(power_row[t], pue[t] * e1 / nu, load[t]);
                    power_const[t] = pue[t] * sp.initial_servers * e0;
                    axpy(cost, T * alpha[t], power_row[t]);
                    cost_constant += T * alpha[t] * power_const[t];
                }
                break;
            }
            L.servers.resize(tau);
            L.turn_on.resize(tau);
            L.turn_off.resize(tau);
            for (std::size_t t = 0; t < tau; ++t) {
                L.servers[t] = b.add_variable(N, 0.5 * (N + sp.initial_servers));
                L.turn_on[t] = b.add_variable(N, 1e-3 * N);
                L.turn_off[t] = b.add_variable(N, 1e-3 * N);
            }
            const double toggle_weight = options.tie_break * money / (N * static_cast<double>(tau));
            for (std::size_t t = 0; t < tau; ++t) {
                const Index m = L.servers[t], on = L.turn_on[t], off = L.turn_off[t];
                Row balance{{m, 1.0}, {on, -1.0}, {off, 1.0}};
                if (t > 0) balance.emplace_back(L.servers[t - 1], -1.0);
                b.add_eq(balance, t == 0 ? sp.initial_servers : 0.0, ConstraintFamily::server_balance, t);

                Row floor;
                axpy(floor, 1.0 / nu, load[t]);
                floor.emplace_back(m, -1.0);
                b.add_le(floor, 0.0, ConstraintFamily::server_floor, t);
                b.add_le({{m, 1.0}}, N, ConstraintFamily::server_ceiling, t);
                b.add_le({{on, -1.0}}, 0.0, ConstraintFamily::toggle_nonnegativity, t);
                b.add_le({{off, -1.0}}, 0.0, ConstraintFamily::toggle_nonnegativity, t);

                // P_s[t] + pue P_o[t] / T
                axpy(power_row[t], pue[t] * e1 / nu, load[t]);
                power_row[t].emplace_back(m, pue[t] * e0);
                power_row[t].emplace_back(on, pue[t] * sp.toggle_kwh / T);
                power_row[t].emplace_back(off, pue[t] * sp.toggle_kwh / T);
                // alpha (T P_s + pue P_o) = alpha T (billed power)
                axpy(cost, T * alpha[t], power_row[t]);

                profit_linear.emplace_back(on, sp.wear_usd);
                tie_break.emplace_back(on, toggle_weight);
                tie_break.emplace_back(off, toggle_weight);
            }
            break;
        }
        case Mode::renewable: {
            const auto& g = renewable->kwh;
            L.surplus.resize(tau);
            for (std::size_t t = 0; t < tau; ++t) {
                const double start = std::max(T * base_power.kw[t] - g[t], 0.0) + 1e-3 * T * peak_ref;
                L.surplus[t] = b.add_variable(T * peak_ref, start);
            }
            for (std::size_t t = 0; t < tau; ++t) {
                b.add_le(load[t], capacity, ConstraintFamily::capacity, t);
                axpy(power_row[t], pue[t] * e1 / nu, load[t]);
                power_const[t] = pue[t] * N * e0 - g[t] / T;

                // s[t] >= T P[t] - G[t], s[t] >= 0
                Row srow;
                axpy(srow, T, power_row[t]);
                srow.emplace_back(L.surplus[t], -1.0);
                b.add_le(srow, -T * power_const[t], ConstraintFamily::surplus, t);
                b.add_le({{L.surplus[t], -1.0}}, 0.0, ConstraintFamily::surplus, t);
                cost.emplace_back(L.surplus[t], alpha[t]);
            }
            for (Index z : L.window_peak) b.add_le({{z, -1.0}}, 0.0, ConstraintFamily::epigraph, 0);
            break;
        }
    }

    // z_j >= billed power over the window.
    for (std::size_t j = 0; j < billing.windows().size(); ++j) {
        for (auto t : billing.windows()[j].slots) {
            Row row = power_row[t];
            row.emplace_back(L.window_peak[j], -1.0);
            b.add_le(row, -power_const[t], ConstraintFamily::epigraph, t);
        }
    }

    // Reward at gamma*, plus the tie-break on deferral volume.
    std::vector<Row> forms;
    std::vector<double> weights;
    const double total_requests = std::accumulate(lambda.begin(), lambda.end(), 0.0);
    const double defer_weight = total_requests > 0.0 ? options.tie_break * money / total_requests : 0.0;
    for (std::size_t t = 0; t < tau; ++t) {
        if (deferral_vars[t].empty()) continue;
        Row form;
        for (Index v : deferral_vars[t]) {
            form.emplace_back(v, 1.0);
            profit_linear.emplace_back(v, demand.loss_lower()[t]);
            tie_break.emplace_back(v, defer_weight);
        }
        forms.push_back(std::move(form));
        weights.push_back((demand.loss_upper()[t] - demand.loss_lower()[t]) / demand.deferrable(t));
    }

    // cost + reward + wear <= baseline (1 + slack)
    axpy(profit_linear, 1.0, cost);
    const double profit_constant =
        cost_constant - base.total - options.profit_slack * money;

    b.finish(cost, cost_constant, tie_break, profit_linear, profit_constant, forms, weights, money);
    return spec;
}

}  // namespace

const char* to_string(Mode mode) {
    switch (mode) {
        case Mode::base: return "base";
        case Mode::shutdown: return "shutdown";
        case Mode::renewable: return "renewable";
    }
    return "unknown";
}

Mode parse_mode(std::string_view name) {
    if (name == "base") return Mode::base;
    if (name == "shutdown") return Mode::shutdown;
    if (name == "renewable") return Mode::renewable;
    throw InvalidArgument("unknown mode '" + std::string(name) + "'");
}

const char* to_string(ConstraintFamily family) {
    switch (family) {
        case ConstraintFamily::boundary: return "boundary";
        case ConstraintFamily::nonnegativity: return "nonnegativity";
        case ConstraintFamily::capacity: return "capacity";
        case ConstraintFamily::demand: return "demand";
        case ConstraintFamily::deferral_cap: return "deferral_cap";
        case ConstraintFamily::reward_domain: return "reward_domain";
        case ConstraintFamily::profit: return "profit";
        case ConstraintFamily::epigraph: return "epigraph";
        case ConstraintFamily::surplus: return "surplus";
        case ConstraintFamily::server_balance: return "server_balance";
        case ConstraintFamily::server_floor: return "server_floor";
        case ConstraintFamily::server_ceiling: return "server_ceiling";
        case ConstraintFamily::toggle_nonnegativity: return "toggle_nonnegativity";
        case ConstraintFamily::rounding: return "rounding";
        case ConstraintFamily::objective: return "objective";
    }
    return "unknown";
}

void ShutdownParams::validate(const FleetModel& fleet) const {
    if (!(initial_servers >= 0.0 && initial_servers <= fleet.servers())) {
        throw InvalidArgument("initial server count must lie in [0, N]");
    }
    if (!(toggle_kwh >= 0.0) || !std::isfinite(toggle_kwh)) {
        throw InvalidArgument("toggle energy must be finite and non-negative");
    }
    if (!(wear_usd >= 0.0) || !std::isfinite(wear_usd)) {
        throw InvalidArgument("wear cost must be finite and non-negative");
    }
}

ProgramSpec build_base_program(const DemandInput& demand, const FleetModel& fleet,
                               const BillingModel& billing, int max_deferral,
                               const BuildOptions& options) {
    return build(Mode::base, demand, fleet, billing, max_deferral, std::nullopt, std::nullopt, options);
}

ProgramSpec build_shutdown_program(const DemandInput& demand, const FleetModel& fleet,
                                   const BillingModel& billing, int max_deferral,
                                   const ShutdownParams& params, const BuildOptions& options) {
    return build(Mode::shutdown, demand, fleet, billing, max_deferral, params, std::nullopt, options);
}

ProgramSpec build_renewable_program(const DemandInput& demand, const FleetModel& fleet,
                                    const BillingModel& billing, int max_deferral,
                                    const RenewableProfile& green, const BuildOptions& options) {
    return build(Mode::renewable, demand, fleet, billing, max_deferral, std::nullopt, green, options);
}

ServerPlan ServerPlan::from_toggles(double initial, Series turn_on, Series turn_off) {
    if (turn_on.size() != turn_off.size()) throw DimensionError("server plan: toggle lengths differ");
    ServerPlan plan;
    plan.on.resize(turn_on.size());
    double m = initial;
    for (std::size_t t = 0; t < turn_on.size(); ++t) {
        m += turn_on[t] - turn_off[t];
        plan.on[t] = m;
    }
    plan.turn_on = std::move(turn_on);
    plan.turn_off = std::move(turn_off);
    return plan;
}

ServerPlan ServerPlan::constant(double servers, std::size_t slots) {
    return ServerPlan{Series(slots, servers), Series(slots, 0.0), Series(slots, 0.0), {}};
}

Series shutdown_power(std::span<const double> lambda_hat, const ServerPlan& plan,
                      const FleetModel& fleet) {
    if (plan.on.size() != lambda_hat.size() || fleet.pue().size() != lambda_hat.size()) {
        throw DimensionError("shutdown power: horizon mismatch");
    }
    Series p(lambda_hat.size());
    for (std::size_t t = 0; t < p.size(); ++t) {
        p[t] = fleet.pue()[t] * (plan.on[t] * fleet.idle_kw() +
                                 lambda_hat[t] / fleet.requests_per_server() * fleet.active_kw());
    }
    return p;
}

Series shutdown_billed_power(std::span<const double> lambda_hat, const ServerPlan& plan,
                             const FleetModel& fleet, const BillingModel& billing,
                             const ShutdownParams& params) {
    Series p = shutdown_power(lambda_hat, plan, fleet);
    if (plan.turn_on.size() != p.size() || plan.turn_off.size() != p.size()) {
        throw DimensionError("shutdown power: toggle lengths differ");
    }
    for (std::size_t t = 0; t < p.size(); ++t) {
        const double overhead = params.toggle_kwh * (plan.turn_on[t] + plan.turn_off[t]);
        p[t] += fleet.pue()[t] * overhead / billing.slot_hours();
    }
    return p;
}

CostBreakdown shutdown_cost(std::span<const double> lambda_hat, const ServerPlan& plan,
                            const FleetModel& fleet, const BillingModel& billing,
                            const ShutdownParams& params) {
    const Series ps = shutdown_power(lambda_hat, plan, fleet);
    const Series billed = shutdown_billed_power(lambda_hat, plan, fleet, billing, params);
    CostBreakdown c;
    for (std::size_t t = 0; t < ps.size(); ++t) {
        const double overhead = params.toggle_kwh * (plan.turn_on[t] + plan.turn_off[t]);
        c.energy += billing.energy_price()[t] *
                    (billing.slot_hours() * ps[t] + fleet.pue()[t] * overhead);
        c.wear += params.wear_usd * plan.turn_on[t];
    }
    for (const auto& w : billing.windows()) {
        double peak = 0.0;
        for (auto t : w.slots) peak = std::max(peak, billed[t]);
        c.demand.push_back(w.price * peak);
    }
    c.total = c.energy + c.demand_total();
    return c;
}

CostBreakdown renewable_cost(const PowerProfile& power, const RenewableProfile& green,
                             const BillingModel& billing) {
    const auto tau = billing.slot_count();
    if (power.kw.size() != tau || green.kwh.size() != tau) {
        throw DimensionError("renewable cost: horizon mismatch");
    }
    const double T = billing.slot_hours();
    CostBreakdown c;
    for (std::size_t t = 0; t < tau; ++t) {
        c.energy += billing.energy_price()[t] * std::max(T * power.kw[t] - green.kwh[t], 0.0);
    }
    for (const auto& w : billing.windows()) {
        double peak = 0.0;
        for (auto t : w.slots) peak = std::max(peak, power.kw[t] - green.kwh[t] / T);
        c.demand.push_back(w.price * peak);
    }
    c.total = c.energy + c.demand_total();
    return c;
}

double reward_at_optimal_price(const DeferralSchedule& schedule, const DemandInput& demand) {
    double r = 0.0;
    for (std::size_t t = 0; t < demand.slot_count(); ++t) {
        const double q = schedule.deferred(t);
        if (q <= 0.0) continue;
        const double lb = demand.loss_lower()[t];
        const double ub = demand.loss_upper()[t];
        r += (ub - lb) / demand.deferrable(t) * q * q + lb * q;
    }
    return r;
}

}  // namespace dcdr
