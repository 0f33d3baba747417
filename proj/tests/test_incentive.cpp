#include <doctest.h>

#include <cmath>
#include <limits>

#include "dcdr/error.hpp"
#include "dcdr/incentive.hpp"

using namespace dcdr;

namespace {

UserProfile user(std::string id, double requests, double kappa) {
    return UserProfile{std::move(id), {requests}, {0.02}, {0.01}, {kappa}};
}

DeferralSchedule deferred_once(double q) {
    DeferralSchedule s(1, 2);
    s.at(1, 0) = q;
    return s;
}

}  // namespace

TEST_CASE("dominant strategy") {
    CHECK(dominant_strategy(1e-3, 5e-3) == Participation::participate);
    CHECK(dominant_strategy(5e-3, 5e-3) == Participation::decline);
    CHECK(dominant_strategy(6e-3, 5e-3) == Participation::decline);
    for (double g : {0.0, 1e-3, 1.0, 1e9}) CHECK(dominant_strategy(kInelastic, g) == Participation::decline);
    CHECK_THROWS_AS(dominant_strategy(-1e-3, 5e-3), InvalidArgument);
}

TEST_CASE("user surplus") {
    UserProfile u{"u", {10}, {0.02}, {0.01}, {1e-3}};
    const auto none = user_surplus(u, 0, 6e-3, 0.0);
    CHECK(none.participated == none.declined);

    const auto s = user_surplus(u, 0, 6e-3, 4.0);
    CHECK(s.declined == doctest::Approx(0.1));
    CHECK(s.participated == doctest::Approx(0.12));

    CHECK_THROWS_AS(user_surplus(u, 0, 6e-3, 11.0), InvalidArgument);
    CHECK_THROWS_AS(user_surplus(u, 1, 6e-3, 1.0), DimensionError);
}

TEST_CASE("participating beats declining exactly when the reward exceeds the loss") {
    UserProfile u{"u", {10}, {0.02}, {0.01}, {0.0}};
    for (double kappa : {0.0, 1e-3, 4e-3, 9e-3}) {
        u.utility_loss[0] = kappa;
        for (double gamma : {1e-3, 5e-3, 1e-2}) {
            const auto s = user_surplus(u, 0, gamma, 3.0);
            const bool better = s.participated > s.declined;
            CHECK(better == (dominant_strategy(kappa, gamma) == Participation::participate));
        }
    }
}

TEST_CASE("optimal reward interpolates between the loss bounds") {
    const DemandInput demand({1000, 1000}, 0.5, 1e-3, 1e-2);
    CHECK(optimal_reward(DeferralSchedule::identity(demand, 1), demand).gamma[0] == 1e-3);
    CHECK(optimal_reward(deferred_once(500), demand).gamma[0] == 1e-2);
    CHECK(optimal_reward(deferred_once(250), demand).gamma[0] == doctest::Approx(5.5e-3).epsilon(1e-14));
    CHECK_THROWS_AS(optimal_reward(deferred_once(501), demand), InfeasibleRewardError);
}

TEST_CASE("optimal reward on an empty slot") {
    const DemandInput demand({0, 10}, 0.5, 1e-3, 1e-2);
    CHECK(optimal_reward(DeferralSchedule(1, 2), demand).gamma[0] == 1e-3);
    CHECK_THROWS_AS(optimal_reward(deferred_once(1), demand), InfeasibleRewardError);
}

TEST_CASE("optimal reward buys exactly the scheduled deferral") {
    const DemandInput demand({800, 300}, Series{0.4, 0.7}, Series{2e-3, 1e-3}, Series{8e-3, 3e-2});
    for (double q : {0.0, 1.0, 100.0, 250.0, 320.0}) {
        const auto r = optimal_reward(deferred_once(q), demand);
        CHECK(deferrable_capacity(r.gamma[0], demand, 0) == doctest::Approx(q).epsilon(1e-12));
    }
}

TEST_CASE("deferrable capacity") {
    const DemandInput demand({1000}, 0.5, 1e-3, 1e-2);
    CHECK(deferrable_capacity(1e-3, demand, 0) == 0.0);
    CHECK(deferrable_capacity(1e-2, demand, 0) == doctest::Approx(500.0));
    CHECK(deferrable_capacity(5.5e-3, demand, 0) == doctest::Approx(250.0));
    CHECK_THROWS_AS(deferrable_capacity(2e-2, demand, 0), InvalidArgument);
}

TEST_CASE("total reward") {
    const DemandInput demand({1000, 1000}, 0.5, 1e-3, 1e-2);
    CHECK(total_reward(DeferralSchedule::identity(demand, 1), RewardSchedule{{5e-3, 5e-3}}) == 0.0);
    CHECK(total_reward(deferred_once(100), RewardSchedule{{5e-3, 5e-3}}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(total_reward(deferred_once(1), RewardSchedule{{5e-3}}), DimensionError);
}

TEST_CASE("reward domain") {
    const DemandInput demand({10, 10}, 0.5, 1e-3, 1e-2);
    CHECK_NOTHROW(check_reward_domain(RewardSchedule{{1e-3, 1e-2}}, demand));
    CHECK_THROWS_AS(check_reward_domain(RewardSchedule{{5e-4, 1e-2}}, demand), InvalidArgument);
}

TEST_CASE("settlement: a single participant absorbs the deferral") {
    std::vector<UserProfile> users{user("a", 20, 1e-3)};
    users[0].requests.push_back(0);
    users[0].net_utility.push_back(0.02);
    users[0].unit_price.push_back(0.01);
    users[0].utility_loss.push_back(1e-3);
    const auto rec = settle_rewards(users, deferred_once(8), RewardSchedule{{5e-3, 5e-3}});
    REQUIRE(rec.size() == 1);
    CHECK(rec[0].participates[0]);
    CHECK(rec[0].deferred[0] == doctest::Approx(8.0));
    CHECK(rec[0].total_payout() == doctest::Approx(0.04));
}

TEST_CASE("settlement: two equal participants split evenly, a decliner gets nothing") {
    auto two_slot = [](UserProfile u) {
        u.requests.push_back(0);
        u.net_utility.push_back(0.02);
        u.unit_price.push_back(0.01);
        u.utility_loss.push_back(u.utility_loss[0]);
        return u;
    };
    std::vector<UserProfile> users{two_slot(user("a", 10, 1e-3)), two_slot(user("b", 10, 1e-3)),
                                   two_slot(user("c", 10, kInelastic))};
    const auto rec = settle_rewards(users, deferred_once(10), RewardSchedule{{5e-3, 5e-3}});
    CHECK(rec[0].deferred[0] == doctest::Approx(5.0));
    CHECK(rec[1].deferred[0] == doctest::Approx(5.0));
    CHECK(!rec[2].participates[0]);
    CHECK(rec[2].deferred[0] == 0.0);
    CHECK(rec[2].surplus[0] == doctest::Approx(0.1));

    // Participants' surplus exceeds what they would have had by declining.
    CHECK(rec[0].surplus[0] > 0.1);
    CHECK_THROWS_AS(settle_rewards(users, deferred_once(21), RewardSchedule{{5e-3, 5e-3}}),
                    InfeasibleRewardError);
}
