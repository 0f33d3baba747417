#pragma once

// Construction of the cost-minimization programs.
//
// Every program minimizes the electricity bill over the deferral schedule
// eta(d, t) subject to demand satisfaction, capacity, the deferrable-volume
// cap and profit neutrality
//
//   cost + reward (+ wear) <= baseline cost,
//
// where the reward is already priced at the incentive-compatible gamma*:
//
//   reward = sum_t (Ub - Lb) / (pi lambda) * q[t]^2 + Lb * q[t],  q[t] = sum_{d>=1} eta(d, t).
//
// Peak (max) and [x]+ terms are replaced by epigraph variables, which keeps
// every row affine except the single convex quadratic profit row.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcdr/convex_solver.hpp"
#include "dcdr/core_model.hpp"

namespace dcdr {

enum class Mode { base, shutdown, renewable };

const char* to_string(Mode mode);
// Accepts "base", "shutdown", "renewable". Throws InvalidArgument otherwise.
Mode parse_mode(std::string_view name);

// Server on/off extension. Toggling is a continuous relaxation.
struct ShutdownParams {
    double initial_servers = 0.0;  // m[0], servers on when the cycle starts
    double toggle_kwh = 0.01;      // energy overhead per switch, either direction
    double wear_usd = 0.01;        // wear-and-tear per turn-on
    bool pin_toggles = false;      // forbid switching; m[t] stays at initial_servers

    static ShutdownParams all_on(const FleetModel& fleet) {
        return ShutdownParams{static_cast<double>(fleet.servers())};
    }
    void validate(const FleetModel& fleet) const;
};

struct RenewableProfile {
    Series kwh;  // G[t], energy generated on site in slot t
};

enum class ConstraintFamily {
    boundary,           // eta(d, t) == 0 once t + d leaves the cycle
    nonnegativity,      // eta >= 0
    capacity,           // lambda_hat <= N nu
    demand,             // sum_d eta(d, t) == lambda[t]
    deferral_cap,       // q[t] <= pi lambda, i.e. gamma* <= Ub
    reward_domain,      // Lb <= gamma <= Ub
    profit,             // cost + reward + wear <= baseline
    epigraph,           // window peak variables
    surplus,            // [T P - G]+ variables
    server_balance,     // m[t] = m[t-1] + on[t] - off[t]
    server_floor,       // lambda_hat / nu <= m[t]
    server_ceiling,     // m[t] <= N
    toggle_nonnegativity,
    rounding,           // rounded server plan still covers the load
    objective,          // reported objective vs direct evaluation
};

const char* to_string(ConstraintFamily family);

// Column of each decision variable in the program, -1 when absent.
struct VariableLayout {
    int max_deferral = 0;
    std::size_t slots = 0;
    std::vector<Eigen::Index> eta;          // (D + 1) x tau, row-major
    std::vector<Eigen::Index> window_peak;  // one per demand window
    std::vector<Eigen::Index> surplus;      // renewable mode, per slot
    std::vector<Eigen::Index> servers;      // shutdown mode, per slot
    std::vector<Eigen::Index> turn_on;
    std::vector<Eigen::Index> turn_off;
    Eigen::Index count = 0;

    Eigen::Index eta_at(int d, std::size_t t) const {
        return eta[static_cast<std::size_t>(d) * slots + t];
    }
};

struct BuildOptions {
    // Relative room added to the baseline in the profit row so the program
    // keeps an interior when no deferral pays off.
    double profit_slack = 1e-7;
    // Weight, relative to the baseline bill, of the secondary objective that
    // prefers less deferral (and fewer toggles) among equal-cost schedules.
    double tie_break = 1e-9;
};

struct ProgramSpec {
    Mode mode = Mode::base;
    DemandInput demand;
    FleetModel fleet;
    BillingModel billing;
    int max_deferral = 0;
    std::optional<ShutdownParams> shutdown;
    std::optional<RenewableProfile> renewable;

    double baseline = 0.0;  // $, bill with no deferral and every server on
    BuildOptions options;
    VariableLayout layout;
    cvx::Problem problem;

    // Electricity bill as an affine function of the variables (no tie-break).
    cvx::Vector cost_linear;
    double cost_constant = 0.0;

    std::vector<ConstraintFamily> eq_family;
    std::vector<ConstraintFamily> ineq_family;
    std::vector<std::size_t> eq_slot;
    std::vector<std::size_t> ineq_slot;
};

ProgramSpec build_base_program(const DemandInput& demand, const FleetModel& fleet,
                               const BillingModel& billing, int max_deferral,
                               const BuildOptions& options = {});

ProgramSpec build_shutdown_program(const DemandInput& demand, const FleetModel& fleet,
                                   const BillingModel& billing, int max_deferral,
                                   const ShutdownParams& params, const BuildOptions& options = {});

ProgramSpec build_renewable_program(const DemandInput& demand, const FleetModel& fleet,
                                    const BillingModel& billing, int max_deferral,
                                    const RenewableProfile& green, const BuildOptions& options = {});

// Direct (non-matrix) evaluation of the three bills. These are the reference
// the solver output is audited against.

struct ServerPlan {
    Series on;        // m[t], servers running in slot t
    Series turn_on;   // m_on[t]
    Series turn_off;  // m_off[t]
    std::vector<int> rounded;  // ceil(m[t]), capped at N; for reporting

    // m[t] = m0 + cumulative (on - off).
    static ServerPlan from_toggles(double initial, Series turn_on, Series turn_off);
    static ServerPlan constant(double servers, std::size_t slots);
};

// P_s[t] = pue[t] * (m[t] e0 + lambda_hat[t] / nu * e1)
Series shutdown_power(std::span<const double> lambda_hat, const ServerPlan& plan,
                      const FleetModel& fleet);

// Per-slot load the demand charge sees in shutdown mode:
// P_s[t] + pue[t] * P_o[t] / T, with P_o[t] = toggle_kwh * (on + off).
Series shutdown_billed_power(std::span<const double> lambda_hat, const ServerPlan& plan,
                             const FleetModel& fleet, const BillingModel& billing,
                             const ShutdownParams& params);

CostBreakdown shutdown_cost(std::span<const double> lambda_hat, const ServerPlan& plan,
                            const FleetModel& fleet, const BillingModel& billing,
                            const ShutdownParams& params);

// Energy: sum alpha [T P - G]+. Demand: beta_j max [P - G / T]+.
CostBreakdown renewable_cost(const PowerProfile& power, const RenewableProfile& green,
                             const BillingModel& billing);

// The quadratic reward at gamma*, evaluated slot by slot.
double reward_at_optimal_price(const DeferralSchedule& schedule, const DemandInput& demand);

}  // namespace dcdr
