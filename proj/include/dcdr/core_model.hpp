#pragma once

// Billing-cycle physics: scheduled load, utilization, facility power and the
// two-part (energy + demand) electricity tariff.
//
// Slots are 0-based throughout the C++ API. Files and configs use 1-based
// slot numbers and are converted at the I/O boundary.

#include <cstddef>
#include <span>
#include <vector>

namespace dcdr {

using Series = std::vector<double>;

// A demand-charge window: the set of slots whose peak is billed at `price`.
struct DemandWindow {
    std::vector<std::size_t> slots;
    double price = 0.0;  // $/KW
};

class BillingModel {
public:
    BillingModel(std::size_t slot_count, double slot_hours, Series energy_price,
                 std::vector<DemandWindow> windows);

    // Constant energy price and one demand window covering the whole cycle.
    static BillingModel flat(std::size_t slot_count, double slot_hours, double energy_price,
                             double demand_price);

    std::size_t slot_count() const noexcept { return slot_count_; }
    double slot_hours() const noexcept { return slot_hours_; }
    const Series& energy_price() const noexcept { return energy_price_; }
    const std::vector<DemandWindow>& windows() const noexcept { return windows_; }

private:
    std::size_t slot_count_;
    double slot_hours_;
    Series energy_price_;  // $/KWh
    std::vector<DemandWindow> windows_;
};

class FleetModel {
public:
    FleetModel(int servers, double idle_kw, double active_kw, double requests_per_server,
               Series pue);

    // Same PUE in every slot.
    FleetModel(int servers, double idle_kw, double active_kw, double requests_per_server,
               std::size_t slot_count, double pue);

    int servers() const noexcept { return servers_; }
    double idle_kw() const noexcept { return idle_kw_; }
    double active_kw() const noexcept { return active_kw_; }
    double requests_per_server() const noexcept { return requests_per_server_; }
    const Series& pue() const noexcept { return pue_; }

    // N * nu: requests the whole fleet can serve in one slot.
    double capacity() const noexcept { return servers_ * requests_per_server_; }

private:
    int servers_;
    double idle_kw_;
    double active_kw_;
    double requests_per_server_;
    Series pue_;
};

// Aggregate demand over one billing cycle plus the elastic-user model used
// to price deferral: a fraction `elastic_fraction[t]` of the requests belongs
// to users whose per-request utility loss is uniform on [loss_lower, loss_upper].
class DemandInput {
public:
    DemandInput(Series requests, Series elastic_fraction, Series loss_lower, Series loss_upper);

    // Constant elastic fraction and loss bounds.
    DemandInput(Series requests, double elastic_fraction, double loss_lower, double loss_upper);

    std::size_t slot_count() const noexcept { return requests_.size(); }
    const Series& requests() const noexcept { return requests_; }
    const Series& elastic_fraction() const noexcept { return elastic_fraction_; }
    const Series& loss_lower() const noexcept { return loss_lower_; }
    const Series& loss_upper() const noexcept { return loss_upper_; }

    // pi[t] * lambda[t]: requests that some reward in [Lb, Ub] can defer.
    double deferrable(std::size_t t) const noexcept {
        return elastic_fraction_[t] * requests_[t];
    }

private:
    Series requests_;
    Series elastic_fraction_;
    Series loss_lower_;
    Series loss_upper_;
};

// eta(d, t): requests generated in slot t and served in slot t + d.
//
// Entries with t + d past the end of the cycle are representable so that a
// verifier can flag them, but a valid schedule keeps them at zero.
class DeferralSchedule {
public:
    DeferralSchedule(int max_deferral, std::size_t slot_count);

    // eta_0 = lambda, everything else zero.
    static DeferralSchedule identity(const DemandInput& demand, int max_deferral = 0);

    int max_deferral() const noexcept { return max_deferral_; }
    std::size_t slot_count() const noexcept { return slot_count_; }

    double& at(int d, std::size_t t) { return eta_[index(d, t)]; }
    double at(int d, std::size_t t) const { return eta_[index(d, t)]; }

    // Sum over d >= 1 of eta(d, t).
    double deferred(std::size_t t) const;
    // Sum over all d of eta(d, t).
    double generated(std::size_t t) const;
    double total_deferred() const;

    // False when t + d runs past the cycle.
    bool in_horizon(int d, std::size_t t) const noexcept {
        return t + static_cast<std::size_t>(d) < slot_count_;
    }

private:
    std::size_t index(int d, std::size_t t) const;

    int max_deferral_;
    std::size_t slot_count_;
    Series eta_;  // row-major (D + 1) x tau
};

struct PowerProfile {
    Series kw;
};

struct CostBreakdown {
    double energy = 0.0;
    Series demand;  // one entry per window
    double reward = 0.0;
    double wear = 0.0;
    double total = 0.0;     // electricity cost: energy + sum(demand)
    double baseline = 0.0;
    double profit_delta = 0.0;  // baseline - (total + reward + wear)

    double demand_total() const;
};

// lambda_hat[t] = sum_d eta(d, t - d). Mass scheduled past the cycle is dropped.
Series scheduled_load(const DeferralSchedule& schedule, const DemandInput& demand);

// Relative slack on N * nu below which a load still counts as within capacity.
inline constexpr double kCapacityTolerance = 1e-9;

// u[t] = lambda_hat[t] / (N nu). Throws CapacityError when u[t] > 1 + capacity_tolerance.
Series utilization(std::span<const double> lambda_hat, const FleetModel& fleet,
                   double capacity_tolerance = kCapacityTolerance);

// P[t] = pue[t] * (N e0 + lambda_hat[t] / nu * e1) with every server on.
PowerProfile power_profile(std::span<const double> lambda_hat, const FleetModel& fleet,
                           double capacity_tolerance = kCapacityTolerance);

// Energy + demand charge. reward, wear, baseline and profit_delta stay zero.
CostBreakdown electricity_cost(const PowerProfile& power, const BillingModel& billing);

// Electricity cost of serving every request in the slot it arrives.
CostBreakdown baseline_cost(const DemandInput& demand, const FleetModel& fleet,
                            const BillingModel& billing);

// sum_t lambda[t] * unit_price[t]
double revenue(const DemandInput& demand, std::span<const double> unit_price);

// Per-user form: sum over users and slots of requests * unit_price.
double revenue(std::span<const Series> user_requests, std::span<const Series> user_prices);

// Throws DimensionError unless the three models share one horizon.
void check_horizon(const DemandInput& demand, const FleetModel& fleet, const BillingModel& billing);

}  // namespace dcdr
