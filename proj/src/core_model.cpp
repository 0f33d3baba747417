#include "dcdr/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dcdr/error.hpp"

namespace dcdr {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

bool finite_nonnegative(std::span<const double> xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x) && x >= 0.0; });
}

void require_length(std::size_t got, std::size_t want, const char* name) {
    if (got != want) {
        throw DimensionError(std::string(name) + ": expected " + std::to_string(want) +
                             " slots, got " + std::to_string(got));
    }
}

}  // namespace

BillingModel::BillingModel(std::size_t slot_count, double slot_hours, Series energy_price,
                           std::vector<DemandWindow> windows)
    : slot_count_(slot_count),
      slot_hours_(slot_hours),
      energy_price_(std::move(energy_price)),
      windows_(std::move(windows)) {
    require(slot_count_ >= 1, "billing cycle needs at least one slot");
    require(std::isfinite(slot_hours_) && slot_hours_ > 0.0, "slot length must be positive");
    require_length(energy_price_.size(), slot_count_, "energy price");
    require(finite_nonnegative(energy_price_), "energy prices must be finite and non-negative");
    for (auto& w : windows_) {
        require(!w.slots.empty(), "demand-charge window must not be empty");
        require(std::isfinite(w.price) && w.price >= 0.0,
                "demand price must be finite and non-negative");
        std::sort(w.slots.begin(), w.slots.end());
        w.slots.erase(std::unique(w.slots.begin(), w.slots.end()), w.slots.end());
        require(w.slots.back() < slot_count_, "demand-charge window slot out of range");
    }
}

BillingModel BillingModel::flat(std::size_t slot_count, double slot_hours, double energy_price,
                                double demand_price) {
    DemandWindow all{std::vector<std::size_t>(slot_count), demand_price};
    std::iota(all.slots.begin(), all.slots.end(), std::size_t{0});
    return BillingModel(slot_count, slot_hours, Series(slot_count, energy_price), {std::move(all)});
}

FleetModel::FleetModel(int servers, double idle_kw, double active_kw, double requests_per_server,
                       Series pue)
    : servers_(servers),
      idle_kw_(idle_kw),
      active_kw_(active_kw),
      requests_per_server_(requests_per_server),
      pue_(std::move(pue)) {
    require(servers_ >= 1, "fleet needs at least one server");
    require(std::isfinite(idle_kw_) && idle_kw_ >= 0.0, "idle power must be non-negative");
    require(std::isfinite(active_kw_) && active_kw_ >= 0.0, "active power must be non-negative");
    require(std::isfinite(requests_per_server_) && requests_per_server_ > 0.0,
            "per-server capacity must be positive");
    require(!pue_.empty(), "PUE series must not be empty");
    require(std::all_of(pue_.begin(), pue_.end(), [](double e) { return std::isfinite(e) && e >= 1.0; }),
            "PUE must be at least 1");
}

FleetModel::FleetModel(int servers, double idle_kw, double active_kw, double requests_per_server,
                       std::size_t slot_count, double pue)
    : FleetModel(servers, idle_kw, active_kw, requests_per_server, Series(slot_count, pue)) {}

DemandInput::DemandInput(Series requests, Series elastic_fraction, Series loss_lower,
                         Series loss_upper)
    : requests_(std::move(requests)),
      elastic_fraction_(std::move(elastic_fraction)),
      loss_lower_(std::move(loss_lower)),
      loss_upper_(std::move(loss_upper)) {
    const auto n = requests_.size();
    require(n >= 1, "demand needs at least one slot");
    require_length(elastic_fraction_.size(), n, "elastic fraction");
    require_length(loss_lower_.size(), n, "loss lower bound");
    require_length(loss_upper_.size(), n, "loss upper bound");
    require(finite_nonnegative(requests_), "requests must be finite and non-negative");
    for (std::size_t t = 0; t < n; ++t) {
        require(elastic_fraction_[t] >= 0.0 && elastic_fraction_[t] <= 1.0,
                "elastic fraction must lie in [0, 1]");
        require(std::isfinite(loss_lower_[t]) && std::isfinite(loss_upper_[t]) &&
                    loss_lower_[t] >= 0.0 && loss_lower_[t] < loss_upper_[t],
                "utility-loss bounds need 0 <= Lb < Ub");
    }
}

DemandInput::DemandInput(Series requests, double elastic_fraction, double loss_lower,
                         double loss_upper)
    : DemandInput(requests, Series(requests.size(), elastic_fraction),
                  Series(requests.size(), loss_lower), Series(requests.size(), loss_upper)) {}

DeferralSchedule::DeferralSchedule(int max_deferral, std::size_t slot_count)
    : max_deferral_(max_deferral), slot_count_(slot_count) {
    require(max_deferral_ >= 0, "maximum deferral must be non-negative");
    eta_.assign(static_cast<std::size_t>(max_deferral_ + 1) * slot_count_, 0.0);
}

DeferralSchedule DeferralSchedule::identity(const DemandInput& demand, int max_deferral) {
    DeferralSchedule s(max_deferral, demand.slot_count());
    for (std::size_t t = 0; t < demand.slot_count(); ++t) s.at(0, t) = demand.requests()[t];
    return s;
}

std::size_t DeferralSchedule::index(int d, std::size_t t) const {
    if (d < 0 || d > max_deferral_ || t >= slot_count_) {
        throw DimensionError("schedule index (" + std::to_string(d) + ", " + std::to_string(t) +
                             ") out of range");
    }
    return static_cast<std::size_t>(d) * slot_count_ + t;
}

double DeferralSchedule::deferred(std::size_t t) const {
    double q = 0.0;
    for (int d = 1; d <= max_deferral_; ++d) q += at(d, t);
    return q;
}

double DeferralSchedule::generated(std::size_t t) const { return at(0, t) + deferred(t); }

double DeferralSchedule::total_deferred() const {
    double q = 0.0;
    for (std::size_t t = 0; t < slot_count_; ++t) q += deferred(t);
    return q;
}

double CostBreakdown::demand_total() const {
    return std::accumulate(demand.begin(), demand.end(), 0.0);
}

Series scheduled_load(const DeferralSchedule& schedule, const DemandInput& demand) {
    const auto tau = demand.slot_count();
    require_length(schedule.slot_count(), tau, "schedule");
    Series load(tau, 0.0);
    for (std::size_t s = 0; s < tau; ++s) {
        for (int d = 0; d <= schedule.max_deferral(); ++d) {
            if (s >= static_cast<std::size_t>(d)) load[s] += schedule.at(d, s - d);
        }
    }
    return load;
}

Series utilization(std::span<const double> lambda_hat, const FleetModel& fleet,
                   double capacity_tolerance) {
    const double cap = fleet.capacity();
    Series u(lambda_hat.size());
    for (std::size_t t = 0; t < lambda_hat.size(); ++t) {
        if (!(lambda_hat[t] >= 0.0)) throw InvalidArgument("scheduled load must be non-negative");
        if (lambda_hat[t] > cap * (1.0 + capacity_tolerance)) {
            throw CapacityError(t, lambda_hat[t], cap);
        }
        u[t] = lambda_hat[t] / cap;
    }
    return u;
}

PowerProfile power_profile(std::span<const double> lambda_hat, const FleetModel& fleet,
                           double capacity_tolerance) {
    require_length(fleet.pue().size(), lambda_hat.size(), "PUE");
    const Series u = utilization(lambda_hat, fleet, capacity_tolerance);
    const double n = fleet.servers();
    PowerProfile p{Series(lambda_hat.size())};
    for (std::size_t t = 0; t < u.size(); ++t) {
        // N servers each at utilization u: N (e0 + u e1) = N e0 + (lambda_hat / nu) e1
        p.kw[t] = fleet.pue()[t] * (n * fleet.idle_kw() + n * u[t] * fleet.active_kw());
    }
    return p;
}

CostBreakdown electricity_cost(const PowerProfile& power, const BillingModel& billing) {
    require_length(power.kw.size(), billing.slot_count(), "power profile");
    CostBreakdown c;
    for (std::size_t t = 0; t < power.kw.size(); ++t) {
        c.energy += billing.slot_hours() * billing.energy_price()[t] * power.kw[t];
    }
    c.demand.reserve(billing.windows().size());
    for (const auto& w : billing.windows()) {
        double peak = 0.0;
        for (auto t : w.slots) peak = std::max(peak, power.kw[t]);
        c.demand.push_back(w.price * peak);
    }
    c.total = c.energy + c.demand_total();
    return c;
}

void check_horizon(const DemandInput& demand, const FleetModel& fleet, const BillingModel& billing) {
    require_length(demand.slot_count(), billing.slot_count(), "demand");
    require_length(fleet.pue().size(), billing.slot_count(), "PUE");
}

CostBreakdown baseline_cost(const DemandInput& demand, const FleetModel& fleet,
                            const BillingModel& billing) {
    check_horizon(demand, fleet, billing);
    CostBreakdown c = electricity_cost(power_profile(demand.requests(), fleet), billing);
    c.baseline = c.total;
    c.profit_delta = 0.0;
    return c;
}

double revenue(const DemandInput& demand, std::span<const double> unit_price) {
    require_length(unit_price.size(), demand.slot_count(), "unit price");
    double r = 0.0;
    for (std::size_t t = 0; t < unit_price.size(); ++t) {
        if (!(unit_price[t] >= 0.0)) throw InvalidArgument("unit price must be non-negative");
        r += demand.requests()[t] * unit_price[t];
    }
    return r;
}

double revenue(std::span<const Series> user_requests, std::span<const Series> user_prices) {
    if (user_requests.size() != user_prices.size()) {
        throw DimensionError("revenue: one price series per user required");
    }
    double r = 0.0;
    for (std::size_t i = 0; i < user_requests.size(); ++i) {
        require_length(user_prices[i].size(), user_requests[i].size(), "user price");
        for (std::size_t t = 0; t < user_requests[i].size(); ++t) {
            if (!(user_prices[i][t] >= 0.0)) throw InvalidArgument("unit price must be non-negative");
            r += user_requests[i][t] * user_prices[i][t];
        }
    }
    return r;
}

}  // namespace dcdr
