#include "dcdr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dcdr/error.hpp"
#include "dcdr/incentive.hpp"

namespace dcdr {

namespace {

// Ways to spread up to `units` grid units over `parts` deferral lengths.
// Entry i of a split is the number of units deferred by i + 1 slots. Ordered
// by total, smallest first, so the identity split comes first.
std::vector<std::vector<int>> splits(int parts, int units) {
    std::vector<std::vector<int>> out;
    if (parts == 0) return {{}};
    std::vector<int> cur(static_cast<std::size_t>(parts), 0);
    auto rec = [&](auto&& self, int i, int left) -> void {
        if (i == parts - 1) {
            cur[static_cast<std::size_t>(i)] = left;
            out.push_back(cur);
            return;
        }
        for (int k = left; k >= 0; --k) {
            cur[static_cast<std::size_t>(i)] = k;
            self(self, i + 1, left - k);
        }
    };
    for (int total = 0; total <= units; ++total) rec(rec, 0, total);
    return out;
}

struct Candidate {
    CostBreakdown cost;
    std::optional<ServerPlan> servers;
};

}  // namespace

OracleResult brute_force_oracle(const DemandInput& demand, const FleetModel& fleet,
                                const BillingModel& billing, int max_deferral, int grid_steps,
                                const OracleOptions& options) {
    check_horizon(demand, fleet, billing);
    if (max_deferral < 0) throw InvalidArgument("oracle: negative deferral horizon");
    if (grid_steps < 2) throw InvalidArgument("oracle: grid_steps must be at least 2");
    if (options.mode == Mode::shutdown && !options.shutdown) {
        throw InvalidArgument("oracle: shutdown mode needs shutdown parameters");
    }
    if (options.mode == Mode::renewable && !options.renewable) {
        throw InvalidArgument("oracle: renewable mode needs a renewable profile");
    }
    if (options.shutdown) options.shutdown->validate(fleet);

    const std::size_t tau = demand.slot_count();
    const int units = grid_steps - 1;
    const auto& lambda = demand.requests();

    // Slot t defers multiples of pi lambda / (grid_steps - 1) in total.
    std::vector<std::vector<std::vector<int>>> choices(tau);
    double points = 1.0;
    for (std::size_t t = 0; t < tau; ++t) {
        const int parts = static_cast<int>(std::min<std::size_t>(
            static_cast<std::size_t>(max_deferral), tau - 1 - t));
        choices[t] = demand.deferrable(t) > 0.0 ? splits(parts, units) : splits(0, units);
        points *= static_cast<double>(choices[t].size());
    }
    const bool free_servers = options.mode == Mode::shutdown && !options.shutdown->pin_toggles;
    if (free_servers) points *= std::pow(options.server_steps + 2.0, static_cast<double>(tau));
    if (points > options.max_points) {
        throw InvalidArgument("oracle: " + std::to_string(static_cast<long long>(points)) +
                              " grid points exceed the limit of " +
                              std::to_string(static_cast<long long>(options.max_points)));
    }

    const double baseline = baseline_cost(demand, fleet, billing).total;
    const double budget = baseline * (1.0 + 1e-9) + 1e-12;
    const double capacity = fleet.capacity() * (1.0 + kCapacityTolerance);
    const double n = fleet.servers();
    const double nu = fleet.requests_per_server();

    auto schedule_of = [&](const std::vector<std::size_t>& pick) {
        DeferralSchedule s(max_deferral, tau);
        for (std::size_t t = 0; t < tau; ++t) {
            const double unit = demand.deferrable(t) / units;
            double q = 0.0;
            const auto& split = choices[t][pick[t]];
            for (std::size_t i = 0; i < split.size(); ++i) {
                s.at(static_cast<int>(i) + 1, t) = unit * split[i];
                q += unit * split[i];
            }
            s.at(0, t) = std::max(lambda[t] - q, 0.0);
        }
        return s;
    };

    // Cheapest admissible bill for a schedule, over the server grid in
    // shutdown mode. `reward` is already fixed by the schedule.
    auto best_bill = [&](const Series& load, double reward) -> std::optional<Candidate> {
        std::optional<Candidate> best;
        auto consider = [&](CostBreakdown c, std::optional<ServerPlan> plan) {
            if (c.total + reward + c.wear > budget) return;
            if (!best || c.total < best->cost.total) best = Candidate{std::move(c), std::move(plan)};
        };
        switch (options.mode) {
            case Mode::base:
                consider(electricity_cost(power_profile(load, fleet, kCapacityTolerance), billing),
                         std::nullopt);
                break;
            case Mode::renewable:
                consider(renewable_cost(power_profile(load, fleet, kCapacityTolerance),
                                        *options.renewable, billing),
                         std::nullopt);
                break;
            case Mode::shutdown: {
                const auto& sp = *options.shutdown;
                if (sp.pin_toggles) {
                    for (std::size_t t = 0; t < tau; ++t) {
                        if (load[t] / nu > sp.initial_servers * (1.0 + kCapacityTolerance)) return best;
                    }
                    ServerPlan plan = ServerPlan::constant(sp.initial_servers, tau);
                    CostBreakdown c = shutdown_cost(load, plan, fleet, billing, sp);
                    consider(std::move(c), std::move(plan));
                    break;
                }
                std::vector<Series> levels(tau);
                for (std::size_t t = 0; t < tau; ++t) {
                    const double floor = load[t] / nu;
                    levels[t].push_back(floor);
                    for (int k = 0; k <= options.server_steps; ++k) {
                        const double m = n * k / std::max(options.server_steps, 1);
                        if (m > floor) levels[t].push_back(m);
                    }
                }
                std::vector<std::size_t> at(tau, 0);
                for (;;) {
                    Series on(tau), up(tau), down(tau);
                    double prev = sp.initial_servers;
                    for (std::size_t t = 0; t < tau; ++t) {
                        on[t] = levels[t][at[t]];
                        up[t] = std::max(on[t] - prev, 0.0);
                        down[t] = std::max(prev - on[t], 0.0);
                        prev = on[t];
                    }
                    ServerPlan plan = ServerPlan::from_toggles(sp.initial_servers, up, down);
                    plan.on = std::move(on);
                    CostBreakdown c = shutdown_cost(load, plan, fleet, billing, sp);
                    consider(std::move(c), std::move(plan));
                    std::size_t t = 0;
                    while (t < tau && ++at[t] == levels[t].size()) at[t++] = 0;
                    if (t == tau) break;
                }
                break;
            }
        }
        return best;
    };

    std::optional<OracleResult> best;
    std::size_t evaluated = 0;
    std::vector<std::size_t> pick(tau, 0);
    for (;;) {
        ++evaluated;
        DeferralSchedule s = schedule_of(pick);
        const Series load = scheduled_load(s, demand);
        const bool fits = std::all_of(load.begin(), load.end(), [&](double v) { return v <= capacity; });
        if (fits) {
            const double reward = total_reward(s, optimal_reward(s, demand));
            if (auto c = best_bill(load, reward); c && (!best || c->cost.total < best->cost.total)) {
                c->cost.reward = reward;
                c->cost.baseline = baseline;
                c->cost.profit_delta = baseline - (c->cost.total + reward + c->cost.wear);
                best = OracleResult{std::move(s), std::move(c->servers), std::move(c->cost), 0};
            }
        }
        std::size_t t = 0;
        while (t < tau && ++pick[t] == choices[t].size()) pick[t++] = 0;
        if (t == tau) break;
    }

    if (!best) throw InfeasibleError("capacity", "oracle: no grid point is feasible");
    best->evaluated = evaluated;
    return std::move(*best);
}

}  // namespace dcdr
