#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dcdr/core_model.hpp"
#include "dcdr/incentive.hpp"
#include "dcdr/program.hpp"

namespace dcdr {

struct Tolerances {
    double optimality = 1e-8;   // relative dual residual and duality gap
    double feasibility = 1e-8;  // relative primal residual inside the solver
    int max_iterations = 200;
    // Accepted in place of `optimality` when the iteration breaks down first.
    double acceptable = 1e-6;
};

struct Diagnostics {
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    double solve_ms = 0.0;
};

struct Solution {
    Mode mode = Mode::base;
    DeferralSchedule schedule;
    RewardSchedule rewards;
    std::optional<ServerPlan> servers;  // shutdown mode
    Series billed_power;                // per-slot load the demand charge sees, KW
    double peak_kw = 0.0;
    CostBreakdown cost;
    double objective = 0.0;  // electricity bill as computed from the program rows
    Diagnostics diagnostics;
};

// Solves a program built by build_*_program. The raw interior-point iterate
// is projected onto the demand rows (eta(0, t) absorbs the rounding) and the
// epigraph variables are set to the peaks they bound, so the reported
// objective equals the bill evaluated from the schedule.
//
// Throws InfeasibleError or ConvergenceError.
Solution solve(const ProgramSpec& program, const Tolerances& tolerances = {});

struct FamilyResidual {
    ConstraintFamily family;
    double max_violation = 0.0;  // relative, see verify_solution
    std::optional<std::size_t> slot;
};

struct ResidualReport {
    std::vector<FamilyResidual> families;

    // True when every family is within `tolerance` and the objective agrees
    // with the direct evaluation to `objective_tolerance`.
    bool passed(double tolerance, double objective_tolerance = 1e-9) const;
    const FamilyResidual& at(ConstraintFamily family) const;
    const FamilyResidual& worst() const;
    std::string describe() const;
};

// Re-evaluates every constraint family at the solution, independently of
// the program matrices. Violations are relative: request counts against
// max(1, lambda) or N nu, money against the baseline, servers against N.
ResidualReport verify_solution(const Solution& solution, const ProgramSpec& program);

}  // namespace dcdr
