#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "dcdr/core_model.hpp"
#include "dcdr/error.hpp"

using namespace dcdr;

namespace {

FleetModel two_servers(std::size_t tau) { return FleetModel(2, 0.1, 0.1, 20.0, tau, 1.2); }

DemandInput plain(Series lambda) { return DemandInput(std::move(lambda), 0.5, 1e-3, 1e-2); }

}  // namespace

TEST_CASE("scheduled load: identity schedule returns the arrivals") {
    const auto demand = plain({5, 7, 0, 3});
    const auto s = DeferralSchedule::identity(demand);
    CHECK(scheduled_load(s, demand) == demand.requests());
}

TEST_CASE("scheduled load: a single block moves one slot") {
    const auto demand = plain({10, 0, 0});
    DeferralSchedule s(1, 3);
    s.at(1, 0) = 10;
    CHECK(scheduled_load(s, demand) == Series{0, 10, 0});
}

TEST_CASE("scheduled load: spread over two horizons") {
    const auto demand = plain({8, 4, 0, 0});
    DeferralSchedule s(2, 4);
    s.at(0, 0) = 2;
    s.at(1, 0) = 3;
    s.at(2, 0) = 3;
    s.at(0, 1) = 4;
    // lambda_hat[t] = sum_d eta(d, t - d), written out slot by slot.
    const Series want{2, 3 + 4, 3, 0};
    CHECK(scheduled_load(s, demand) == want);
}

TEST_CASE("scheduled load conserves requests on random schedules") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t tau = 2 + trial % 9;
        const int D = trial % 4;
        Series lambda(tau);
        DeferralSchedule s(D, tau);
        for (std::size_t t = 0; t < tau; ++t) {
            double left = 100 * u(rng);
            lambda[t] = left;
            for (int d = D; d >= 1; --d) {
                if (!s.in_horizon(d, t)) continue;
                s.at(d, t) = left * u(rng);
                left -= s.at(d, t);
            }
            s.at(0, t) = left;
        }
        const auto load = scheduled_load(s, plain(lambda));
        const double in = std::accumulate(lambda.begin(), lambda.end(), 0.0);
        const double out = std::accumulate(load.begin(), load.end(), 0.0);
        CHECK(out == doctest::Approx(in).epsilon(1e-12));
    }
}

TEST_CASE("scheduled load rejects a schedule of the wrong length") {
    CHECK_THROWS_AS(scheduled_load(DeferralSchedule(1, 3), plain({1, 2})), DimensionError);
}

TEST_CASE("utilization") {
    const auto fleet = two_servers(1);
    CHECK(utilization(Series{0.0}, fleet)[0] == 0.0);
    CHECK(utilization(Series{40.0}, fleet)[0] == 1.0);
    CHECK(utilization(Series{20.0}, fleet)[0] == 0.5);
    CHECK_THROWS_AS(utilization(Series{40.5}, fleet), CapacityError);
}

TEST_CASE("power profile of an all-on fleet") {
    const auto fleet = two_servers(3);
    const auto p = power_profile(Series{0, 40, 20}, fleet);
    CHECK(p.kw[0] == doctest::Approx(0.24));
    CHECK(p.kw[1] == doctest::Approx(0.48));
    CHECK(p.kw[2] == doctest::Approx(0.36));
}

TEST_CASE("power is affine in load with slope pue * e1 / nu") {
    const FleetModel fleet(7, 0.13, 0.21, 11.0, Series{1.1, 1.7});
    for (std::size_t t = 0; t < 2; ++t) {
        for (double x : {0.0, 5.0, 30.0, 70.0}) {
            Series lo{0, 0}, hi{0, 0};
            lo[t] = x;
            hi[t] = x + 1.0;
            const double slope = power_profile(hi, fleet).kw[t] - power_profile(lo, fleet).kw[t];
            CHECK(slope == doctest::Approx(fleet.pue()[t] * 0.21 / 11.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("two-slot bill") {
    const BillingModel billing = BillingModel::flat(2, 1.0, 0.05, 15.59);
    const auto c = electricity_cost(PowerProfile{{1.0, 2.0}}, billing);
    CHECK(c.energy == doctest::Approx(0.15));
    REQUIRE(c.demand.size() == 1);
    CHECK(c.demand[0] == doctest::Approx(31.18));
    CHECK(c.total == doctest::Approx(31.33));
}

TEST_CASE("zero demand prices leave only the energy charge") {
    const BillingModel billing = BillingModel::flat(3, 0.5, 0.1, 0.0);
    const auto c = electricity_cost(PowerProfile{{1.0, 4.0, 2.0}}, billing);
    CHECK(c.total == doctest::Approx(0.5 * 0.1 * 7.0));
    CHECK(c.total == c.energy);
}

TEST_CASE("bill matches an independent summation over a day") {
    const std::size_t tau = 24;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Series p(tau);
    for (auto& x : p) x = 20 + 30 * u(rng);
    // Two overlapping windows on top of the all-day one.
    DemandWindow all{{}, 15.59}, evening{{17, 18, 19, 20}, 4.0}, noon{{11, 12, 13}, 2.5};
    for (std::size_t t = 0; t < tau; ++t) all.slots.push_back(t);
    const double T = 0.75;
    const BillingModel billing(tau, T, Series(tau, 0.05207), {all, evening, noon});
    const auto c = electricity_cost(PowerProfile{p}, billing);

    double energy = 0;
    for (double x : p) energy += T * 0.05207 * x;
    double demand = 15.59 * *std::max_element(p.begin(), p.end());
    demand += 4.0 * std::max({p[17], p[18], p[19], p[20]});
    demand += 2.5 * std::max({p[11], p[12], p[13]});
    CHECK(c.energy == doctest::Approx(energy).epsilon(1e-13));
    CHECK(c.total == doctest::Approx(energy + demand).epsilon(1e-13));
}

TEST_CASE("bill is non-decreasing in every slot's power") {
    const BillingModel billing = BillingModel::flat(4, 1.0, 0.05207, 15.59);
    const Series p{3, 5, 4, 1};
    const double base = electricity_cost(PowerProfile{p}, billing).total;
    for (std::size_t t = 0; t < p.size(); ++t) {
        Series q = p;
        q[t] += 0.5;
        CHECK(electricity_cost(PowerProfile{q}, billing).total >= base);
    }
}

TEST_CASE("baseline of an idle fleet is the idle-power floor") {
    const std::size_t tau = 5;
    const Series pue{1.2, 1.3, 1.1, 1.5, 1.2};
    const FleetModel fleet(4, 0.1, 0.3, 10.0, pue);
    const Series alpha{0.05, 0.04, 0.06, 0.05, 0.05};
    DemandWindow all{{0, 1, 2, 3, 4}, 15.59}, part{{1, 2}, 3.0};
    const BillingModel billing(tau, 1.0, alpha, {all, part});
    const auto c = baseline_cost(plain(Series(tau, 0.0)), fleet, billing);
    double want = 0;
    for (std::size_t t = 0; t < tau; ++t) want += alpha[t] * pue[t] * 4 * 0.1;
    want += 15.59 * 1.5 * 0.4 + 3.0 * 1.3 * 0.4;
    CHECK(c.total == doctest::Approx(want).epsilon(1e-13));
    CHECK(c.reward == 0.0);
    CHECK(c.wear == 0.0);
}

TEST_CASE("baseline equals the bill of the identity schedule exactly") {
    const auto demand = plain({12, 30, 7, 0, 25});
    const auto fleet = two_servers(5);
    const auto billing = BillingModel::flat(5, 1.0, 0.05207, 15.59);
    const auto load = scheduled_load(DeferralSchedule::identity(demand, 2), demand);
    const auto direct = electricity_cost(power_profile(load, fleet), billing);
    const auto base = baseline_cost(demand, fleet, billing);
    CHECK(base.total == direct.total);
    CHECK(base.energy == direct.energy);
}

TEST_CASE("baseline above capacity is rejected") {
    CHECK_THROWS_AS(baseline_cost(plain({10, 41}), two_servers(2), BillingModel::flat(2, 1, 0.05, 1)),
                    CapacityError);
}

TEST_CASE("revenue") {
    CHECK(revenue(plain({10, 20}), Series{0.0, 0.0}) == 0.0);
    CHECK(revenue(plain({10, 20}), Series{0.01, 0.01}) == doctest::Approx(0.3));
    const std::vector<Series> users{{4, 5}, {6, 15}};
    const std::vector<Series> prices{{0.01, 0.01}, {0.01, 0.01}};
    CHECK(revenue(users, prices) == doctest::Approx(revenue(plain({10, 20}), Series{0.01, 0.01})));
}

TEST_CASE("model construction validates its inputs") {
    CHECK_THROWS_AS(BillingModel(2, 1.0, Series{0.1}, {}), DimensionError);
    CHECK_THROWS_AS(BillingModel(2, 0.0, Series{0.1, 0.1}, {}), InvalidArgument);
    CHECK_THROWS_AS(BillingModel(2, 1.0, Series{0.1, -0.1}, {}), InvalidArgument);
    CHECK_THROWS_AS(BillingModel(2, 1.0, Series{0.1, 0.1}, {DemandWindow{{}, 1.0}}), InvalidArgument);
    CHECK_THROWS_AS(BillingModel(2, 1.0, Series{0.1, 0.1}, {DemandWindow{{2}, 1.0}}), InvalidArgument);
    CHECK_THROWS_AS(FleetModel(0, 0.1, 0.1, 20, 2, 1.2), InvalidArgument);
    CHECK_THROWS_AS(FleetModel(2, 0.1, 0.1, 0, 2, 1.2), InvalidArgument);
    CHECK_THROWS_AS(FleetModel(2, 0.1, 0.1, 20, 2, 0.9), InvalidArgument);
    CHECK_THROWS_AS(DemandInput(Series{1, -1}, 0.5, 1e-3, 1e-2), InvalidArgument);
    CHECK_THROWS_AS(DemandInput(Series{1, 1}, 1.5, 1e-3, 1e-2), InvalidArgument);
    CHECK_THROWS_AS(DemandInput(Series{1, 1}, 0.5, 1e-2, 1e-3), InvalidArgument);
    CHECK_THROWS_AS(DeferralSchedule(-1, 3), InvalidArgument);
    CHECK_THROWS_AS(check_horizon(plain({1, 2}), two_servers(3), BillingModel::flat(2, 1, 0.1, 1)),
                    DimensionError);
}
