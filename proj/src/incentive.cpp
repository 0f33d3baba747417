#include "dcdr/incentive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dcdr/error.hpp"

namespace dcdr {

void UserProfile::validate() const {
    const auto n = requests.size();
    if (net_utility.size() != n || unit_price.size() != n || utility_loss.size() != n) {
        throw DimensionError("user " + id + ": series lengths differ");
    }
    for (std::size_t t = 0; t < n; ++t) {
        if (!(requests[t] >= 0.0) || !std::isfinite(requests[t])) {
            throw InvalidArgument("user " + id + ": requests must be finite and non-negative");
        }
        if (!(utility_loss[t] >= 0.0)) {
            throw InvalidArgument("user " + id + ": utility loss must be non-negative");
        }
    }
}

double SettlementRecord::total_payout() const {
    return std::accumulate(payout.begin(), payout.end(), 0.0);
}

Participation dominant_strategy(double kappa, double gamma) {
    if (!(kappa >= 0.0) || !(gamma >= 0.0)) {
        throw InvalidArgument("reward and utility loss must be non-negative");
    }
    return gamma > kappa ? Participation::participate : Participation::decline;
}

SurplusPair user_surplus(const UserProfile& profile, std::size_t t, double gamma, double deferred) {
    if (t >= profile.slot_count()) throw DimensionError("user_surplus: slot out of range");
    const double lambda = profile.requests[t];
    if (!(deferred >= 0.0) || deferred > lambda) {
        throw InvalidArgument("user_surplus: deferred requests must lie in [0, requests]");
    }
    SurplusPair s;
    s.declined = lambda * (profile.net_utility[t] - profile.unit_price[t]);
    // An inelastic user is never deferred, so kInelastic only meets deferred == 0.
    s.participated = deferred > 0.0
                         ? s.declined + deferred * (gamma - profile.utility_loss[t])
                         : s.declined;
    return s;
}

RewardSchedule optimal_reward(const DeferralSchedule& schedule, const DemandInput& demand,
                              double tolerance) {
    const auto tau = demand.slot_count();
    if (schedule.slot_count() != tau) throw DimensionError("optimal_reward: horizon mismatch");
    RewardSchedule r{Series(tau)};
    for (std::size_t t = 0; t < tau; ++t) {
        const double lb = demand.loss_lower()[t];
        const double ub = demand.loss_upper()[t];
        const double cap = demand.deferrable(t);
        const double q = schedule.deferred(t);
        if (q > cap * (1.0 + tolerance) + tolerance * (cap == 0.0 ? 1.0 : 0.0)) {
            throw InfeasibleRewardError(t, q, cap);
        }
        if (q <= 0.0) {
            r.gamma[t] = lb;
        } else if (q >= cap) {
            r.gamma[t] = ub;
        } else {
            r.gamma[t] = (ub - lb) * q / cap + lb;
        }
    }
    return r;
}

double deferrable_capacity(double gamma, const DemandInput& demand, std::size_t t) {
    if (t >= demand.slot_count()) throw DimensionError("deferrable_capacity: slot out of range");
    const double lb = demand.loss_lower()[t];
    const double ub = demand.loss_upper()[t];
    if (!(gamma >= lb && gamma <= ub)) {
        throw InvalidArgument("deferrable_capacity: reward outside [Lb, Ub]");
    }
    return demand.deferrable(t) * (gamma - lb) / (ub - lb);
}

double total_reward(const DeferralSchedule& schedule, const RewardSchedule& rewards) {
    if (rewards.gamma.size() != schedule.slot_count()) {
        throw DimensionError("total_reward: horizon mismatch");
    }
    double total = 0.0;
    for (std::size_t t = 0; t < schedule.slot_count(); ++t) {
        total += rewards.gamma[t] * schedule.deferred(t);
    }
    return total;
}

void check_reward_domain(const RewardSchedule& rewards, const DemandInput& demand) {
    if (rewards.gamma.size() != demand.slot_count()) {
        throw DimensionError("reward schedule: horizon mismatch");
    }
    for (std::size_t t = 0; t < demand.slot_count(); ++t) {
        const double g = rewards.gamma[t];
        if (!(g >= demand.loss_lower()[t] && g <= demand.loss_upper()[t])) {
            throw InvalidArgument("reward at slot " + std::to_string(t + 1) +
                                  " outside [Lb, Ub]");
        }
    }
}

std::vector<SettlementRecord> settle_rewards(const std::vector<UserProfile>& users,
                                             const DeferralSchedule& schedule,
                                             const RewardSchedule& rewards) {
    const auto tau = schedule.slot_count();
    if (rewards.gamma.size() != tau) throw DimensionError("settle_rewards: horizon mismatch");

    std::vector<SettlementRecord> out;
    out.reserve(users.size());
    for (const auto& u : users) {
        u.validate();
        if (u.slot_count() != tau) throw DimensionError("user " + u.id + ": horizon mismatch");
        SettlementRecord rec;
        rec.user_id = u.id;
        rec.participates.assign(tau, false);
        rec.deferred.assign(tau, 0.0);
        rec.payout.assign(tau, 0.0);
        rec.charge.assign(tau, 0.0);
        rec.surplus.assign(tau, 0.0);
        out.push_back(std::move(rec));
    }

    for (std::size_t t = 0; t < tau; ++t) {
        const double gamma = rewards.gamma[t];
        double pool = 0.0;
        for (std::size_t i = 0; i < users.size(); ++i) {
            if (dominant_strategy(users[i].utility_loss[t], gamma) == Participation::participate) {
                out[i].participates[t] = true;
                pool += users[i].requests[t];
            }
        }
        const double q = schedule.deferred(t);
        if (q > pool * (1.0 + 1e-12)) throw InfeasibleRewardError(t, q, pool);

        for (std::size_t i = 0; i < users.size(); ++i) {
            const auto& u = users[i];
            auto& rec = out[i];
            double mine = 0.0;
            if (rec.participates[t] && q > 0.0) {
                mine = std::min(u.requests[t], q * u.requests[t] / pool);
            }
            rec.deferred[t] = mine;
            rec.payout[t] = gamma * mine;
            rec.charge[t] = u.unit_price[t] * u.requests[t];
            const auto s = user_surplus(u, t, gamma, mine);
            rec.surplus[t] = rec.participates[t] ? s.participated : s.declined;
        }
    }
    return out;
}

}  // namespace dcdr
