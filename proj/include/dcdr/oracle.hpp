#pragma once

// Exhaustive grid search over deferral schedules, for cross-checking the
// solver on toy instances. Not meant for anything larger than a handful of
// slots.

#include <cstddef>
#include <optional>

#include "dcdr/core_model.hpp"
#include "dcdr/program.hpp"

namespace dcdr {

struct OracleOptions {
    Mode mode = Mode::base;
    std::optional<ShutdownParams> shutdown;
    std::optional<RenewableProfile> renewable;
    // Server counts tried per slot in shutdown mode, on top of the smallest
    // count that covers the load. Ignored when toggles are pinned.
    int server_steps = 5;
    double max_points = 1e7;
};

struct OracleResult {
    DeferralSchedule schedule;
    std::optional<ServerPlan> servers;
    CostBreakdown cost;  // reward, wear, baseline and profit_delta filled in
    std::size_t evaluated = 0;
};

// Each slot defers up to pi lambda requests, in multiples of
// pi lambda / (grid_steps - 1) spread over the deferral lengths that stay
// inside the cycle. Every combination that covers the load and keeps
// cost + reward (+ wear) within the baseline is scored on its bill; ties keep
// the first point enumerated, and enumeration starts at the identity schedule.
//
// Throws InvalidArgument when the grid has more than max_points points.
OracleResult brute_force_oracle(const DemandInput& demand, const FleetModel& fleet,
                                const BillingModel& billing, int max_deferral, int grid_steps,
                                const OracleOptions& options = {});

}  // namespace dcdr
