// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "dcdr/error.hpp"
#include "dcdr/experiment.hpp"
#include "dcdr/incentive.hpp"
#include "dcdr/optimizer.hpp"
#include "dcdr/oracle.hpp"
#include "fixtures.hpp"

using namespace dcdr;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome oracle_equivalence() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int instances = 25;
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
        const std::size_t tau = 4;
        const int N = 2;
        const double nu = 5.0;
        Series lambda(tau);
        for (auto& l : lambda) l = u(rng) * N * nu;
        const DemandInput demand(lambda, 0.5, 1e-3, 1e-2);
        const FleetModel fleet(N, 0.1, 0.1, nu, tau, 1.2);
        const auto billing = BillingModel::flat(tau, 1.0, 0.05207, 15.59);
        const auto s = solve(build_base_program(demand, fleet, billing, 1));
        const auto o = brute_force_oracle(demand, fleet, billing, 1, 21);
        worst = std::max(worst, std::abs(s.cost.total - o.cost.total) / o.cost.total);
    }
    const double secs = seconds_since(t0);
    return {worst <= 0.01 && secs < 60.0,
            fmt("%d instances, worst relative gap %.2e (limit 1e-2), %.2f s (limit 60 s)", instances, worst,
                secs)};
}

Outcome profit_neutrality() {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> tau_dist(4, 168), d_dist(0, 10);
    int solved = 0, violations = 0;
    double worst = -INFINITY;
    for (int i = 0; i < 120; ++i) {
        const auto mode = static_cast<Mode>(i % 3);
        const std::size_t tau = i % 4 == 0 ? static_cast<std::size_t>(tau_dist(rng)) : 4 + i % 20;
        const auto in = fixtures::random_instance(rng, tau);
        const auto prog = fixtures::build(mode, in, d_dist(rng));
        const auto s = solve(prog);
        ++solved;
        const double spent = s.cost.total + s.cost.reward + s.cost.wear;
        const double excess = (spent - prog.baseline) / prog.baseline;
        worst = std::max(worst, excess);
        if (spent > prog.baseline + 1e-6 * prog.baseline) ++violations;
    }
    return {solved >= 100 && violations == 0,
            fmt("%d instances over three modes, %d violations, worst (spent - baseline) / baseline %.2e",
                solved, violations, worst)};
}

ExperimentConfig case_study() {
    ExperimentConfig c;
    c.slots = 168;
    c.synthetic = SyntheticDemand{2000, 1500, 24, 0.05};
    c.elastic_fraction = 0.5;
    c.target_utilization = 0.9;
    c.modes = {Mode::base};
    return c;
}

Outcome monotonicity() {
    auto c = case_study();
    c.deferrals = {0, 1, 2, 5, 10, 15};
    const auto r = run_experiment(c);
    bool ok = r.runs.size() == 6;
    std::string trail;
    double cost = INFINITY, peak = INFINITY;
    for (const auto& run : r.runs) {
        ok = ok && run.status == RunStatus::ok;
        ok = ok && run.cost_norm <= cost + 1e-9 && run.peak_norm <= peak + 1e-9;
        cost = run.cost_norm;
        peak = run.peak_norm;
        trail += fmt(" D=%d:%.4f/%.4f", run.max_deferral, run.cost_norm, run.peak_norm);
    }
    ok = ok && r.runs[0].cost_norm == 1.0 && r.runs[0].peak_norm == 1.0;
    return {ok, "cost/peak norm" + trail};
}

Outcome qualitative() {
    auto c = case_study();
    c.deferrals = {10};
    const auto r = run_experiment(c);
    if (r.runs.size() != 1 || r.runs[0].status != RunStatus::ok) return {false, "D=10 run failed"};
    const double peak_cut = 1.0 - r.runs[0].peak_norm;
    const double cost_cut = 1.0 - r.runs[0].cost_norm;
    return {peak_cut > 0.10 && cost_cut > 0.03,
            fmt("D=10 peak reduction %.2f%% (need > 10%%), cost reduction %.2f%% (need > 3%%)",
                100 * peak_cut, 100 * cost_cut)};
}

Outcome theorems() {
    // Dominant strategy table.
    long cells = 0, wrong = 0;
    UserProfile user{"u", {100.0}, {0.05}, {0.01}, {0.0}};
    for (int i = 0; i < 50; ++i) {
        const double kappa = 0.02 * i / 49.0;
        user.utility_loss[0] = kappa;
        for (int j = 0; j < 50; ++j) {
            const double gamma = 0.02 * j / 49.0;
            const bool join = dominant_strategy(kappa, gamma) == Participation::participate;
            for (int k = 0; k < 10; ++k) {
                const double deferred = 100.0 * k / 9.0;
                const auto s = user_surplus(user, 0, gamma, deferred);
                ++cells;
                // Joining must be strictly better when gamma > kappa and something is deferred,
                // never better otherwise.
                const bool strictly_better = s.participated > s.declined;
                const bool expect_better = join && deferred > 0.0;
                if (strictly_better != expect_better) ++wrong;
                if (join != (gamma > kappa)) ++wrong;
            }
        }
    }

    // Boundary identities of gamma*.
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int boundary_wrong = 0;
    for (int i = 0; i < 200; ++i) {
        const double lambda = 1 + 1000 * u(rng), pi = 0.05 + 0.9 * u(rng);
        const double lb = 1e-3 * u(rng), ub = lb + 1e-2 * (0.01 + u(rng));
        const DemandInput demand({lambda, lambda}, pi, lb, ub);
        DeferralSchedule none(1, 2), full(1, 2);
        full.at(1, 0) = pi * lambda;
        if (optimal_reward(none, demand).gamma[0] != lb) ++boundary_wrong;
        if (optimal_reward(full, demand).gamma[0] != ub) ++boundary_wrong;
    }

    // gamma sweep at a fixed optimized schedule.
    const std::size_t tau = 24;
    const DemandInput demand(fixtures::diurnal(tau, 60, 45), 0.5, 1e-3, 1e-2);
    const FleetModel fleet(6, 0.1, 0.1, 20.0, tau, 1.2);
    const auto billing = BillingModel::flat(tau, 1.0, 0.05207, 15.59);
    const auto s = solve(build_base_program(demand, fleet, billing, 3));
    const auto star = optimal_reward(s.schedule, demand);
    const double bill = electricity_cost(power_profile(scheduled_load(s.schedule, demand), fleet), billing).total;
    int sweep_wrong = 0, swept = 0;
    for (std::size_t t = 0; t < tau; ++t) {
        const double q = s.schedule.deferred(t);
        if (q <= 0.0) continue;
        const double lb = demand.loss_lower()[t], ub = demand.loss_upper()[t];
        double smallest = INFINITY;
        for (int k = 0; k < 100; ++k) {
            const double g = std::min(ub, lb + (ub - lb) * k / 99.0);
            ++swept;
            if (deferrable_capacity(g, demand, t) >= q - 1e-12 * demand.deferrable(t)) smallest = std::min(smallest, g);
            // The bill depends on the schedule only.
            const double again =
                electricity_cost(power_profile(scheduled_load(s.schedule, demand), fleet), billing).total;
            if (again != bill) ++sweep_wrong;
        }
        // gamma* is feasible and no feasible grid point lies below it by more than one step.
        if (deferrable_capacity(star.gamma[t], demand, t) < q - 1e-12 * demand.deferrable(t)) {
            ++sweep_wrong;
            std::printf("  slot %zu: gamma* %.17g buys %.17g of %.17g\n", t, star.gamma[t],
                        deferrable_capacity(star.gamma[t], demand, t), q);
        }
        if (smallest < star.gamma[t] * (1 - 1e-12)) {
            ++sweep_wrong;
            std::printf("  slot %zu: grid reward %.17g below gamma* %.17g\n", t, smallest, star.gamma[t]);
        }
        if (smallest - star.gamma[t] > (ub - lb) / 99.0 * (1 + 1e-9)) {
            ++sweep_wrong;
            std::printf("  slot %zu: first feasible grid reward %.17g, gamma* %.17g\n", t, smallest, star.gamma[t]);
        }
    }
    return {wrong == 0 && boundary_wrong == 0 && sweep_wrong == 0 && swept > 0,
            fmt("%ld strategy cells (%ld wrong), 200 boundary cases (%d wrong), %d sweep points (%d wrong)",
                cells, wrong, boundary_wrong, swept, sweep_wrong)};
}

Outcome degeneracies() {
    std::mt19937_64 rng(404);
    double renew = 0, shut = 0, flat = 0;
    for (int i = 0; i < 10; ++i) {
        auto in = fixtures::random_instance(rng, 6 + 3 * i, 4);
        std::fill(in.green.kwh.begin(), in.green.kwh.end(), 0.0);
        in.shutdown.pin_toggles = true;
        const auto base = solve(fixtures::build(Mode::base, in, 2)).cost.total;
        // Constant PUE so pinned shutdown bills exactly like base mode.
        const FleetModel fleet(in.fleet.servers(), in.fleet.idle_kw(), in.fleet.active_kw(),
                               in.fleet.requests_per_server(), in.demand.slot_count(), 1.2);
        const auto base_c = solve(build_base_program(in.demand, fleet, in.billing, 2)).cost.total;
        const auto r = solve(fixtures::build(Mode::renewable, in, 2)).cost.total;
        const auto s = solve(build_shutdown_program(in.demand, fleet, in.billing, 2, in.shutdown)).cost.total;
        renew = std::max(renew, std::abs(r - base) / base);
        shut = std::max(shut, std::abs(s - base_c) / base_c);

        // Flat demand, flat price, one window over the cycle: nothing to shave.
        const DemandInput level(Series(in.demand.slot_count(), 10.0 + 5 * i), 0.5, 1e-3, 1e-2);
        const auto plain = BillingModel::flat(in.demand.slot_count(), 1.0, 0.05207, 15.59);
        const auto prog = build_base_program(level, fleet, plain, 1 + i % 5);
        flat = std::max(flat, std::abs(solve(prog).cost.total - prog.baseline) / prog.baseline);
    }
    return {renew <= 1e-6 && shut <= 1e-6 && flat <= 1e-6,
            fmt("worst relative gaps: renewable G=0 %.2e, pinned shutdown %.2e, flat demand %.2e (limit 1e-6)",
                renew, shut, flat)};
}

Outcome full_scale() {
    const auto t0 = Clock::now();
    auto c = case_study();
    c.slots = 720;
    c.deferrals = {10};
    c.tolerances.optimality = 1e-6;
    const auto r = run_experiment(c);
    const double secs = seconds_since(t0);
    const bool ok = r.runs.size() == 1 && r.runs[0].status == RunStatus::ok;
    return {ok && secs < 600.0,
            fmt("tau=720 D=10: status %s, cost norm %.4f, %.1f s (limit 600 s)",
                r.runs.empty() ? "missing" : to_string(r.runs[0].status),
                r.runs.empty() ? NAN : r.runs[0].cost_norm, secs)};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"1 oracle equivalence", oracle_equivalence},
        {"2 profit neutrality", profit_neutrality},
        {"3 monotonicity in D", monotonicity},
        {"4 qualitative reproduction", qualitative},
        {"5 theorem suite", theorems},
        {"6 degeneracy identities", degeneracies},
        {"7 full-scale smoke", full_scale},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
    return failed == 0 ? 0 : 1;
}
