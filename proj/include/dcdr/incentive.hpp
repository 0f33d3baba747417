#pragma once

// User-side game and reward rule.
//
// Each slot the operator announces a reward gamma[t] per deferred request.
// A user whose per-request utility loss kappa is below gamma lets the
// operator defer its requests; the operator then pays gamma for every
// request it actually deferred.

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "dcdr/core_model.hpp"

namespace dcdr {

inline constexpr double kInelastic = std::numeric_limits<double>::infinity();

struct UserProfile {
    std::string id;
    Series requests;     // lambda_i[t]
    Series net_utility;  // V_i[t], $ per request
    Series unit_price;   // delta_i[t], $ per request
    Series utility_loss; // kappa_i[t], $ per deferred request; kInelastic opts out

    std::size_t slot_count() const noexcept { return requests.size(); }
    void validate() const;
};

struct RewardSchedule {
    Series gamma;  // $ per deferred request
};

enum class Participation { decline, participate };

// Settlement of one user over the cycle.
struct SettlementRecord {
    std::string user_id;
    std::vector<bool> participates;
    Series deferred;   // requests of this user actually deferred
    Series payout;     // gamma[t] * deferred[t]
    Series charge;     // unit_price * requests, unchanged by the program
    Series surplus;    // realized surplus

    double total_payout() const;
};

struct SurplusPair {
    double declined = 0.0;     // S^No
    double participated = 0.0; // S^Yes
};

// Participate iff gamma > kappa. A tie declines.
Participation dominant_strategy(double kappa, double gamma);

// Slot-t surplus without and with participation when `deferred` of the
// user's requests end up being deferred.
SurplusPair user_surplus(const UserProfile& profile, std::size_t t, double gamma, double deferred);

// Smallest reward per slot that makes the scheduled deferral incentive
// compatible:
//
//   gamma*[t] = (Ub - Lb) * q[t] / (pi lambda) + Lb,   q[t] = sum_{d>=1} eta(d, t)
//
// Slots with pi lambda == 0 and no deferral get Lb. Deferral above
// pi lambda by more than `tolerance` (relative) throws InfeasibleRewardError;
// smaller overshoot is clamped to Ub.
RewardSchedule optimal_reward(const DeferralSchedule& schedule, const DemandInput& demand,
                              double tolerance = 1e-9);

// Requests whose owners accept gamma at slot t, assuming utility losses of
// elastic users are uniform on [Lb, Ub].
double deferrable_capacity(double gamma, const DemandInput& demand, std::size_t t);

// sum_t gamma[t] * q[t]. Requests served on time earn nothing.
double total_reward(const DeferralSchedule& schedule, const RewardSchedule& rewards);

// Throws InvalidArgument unless Lb[t] <= gamma[t] <= Ub[t] for every slot.
void check_reward_domain(const RewardSchedule& rewards, const DemandInput& demand);

// Splits the aggregate deferral of each slot pro rata over the users that
// accept that slot's reward. Throws InfeasibleRewardError when a slot defers
// more than its participants generated.
std::vector<SettlementRecord> settle_rewards(const std::vector<UserProfile>& users,
                                             const DeferralSchedule& schedule,
                                             const RewardSchedule& rewards);

}  // namespace dcdr
