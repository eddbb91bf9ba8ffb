#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "outage/sched.hpp"

using namespace outage;
using namespace outage::sched;

TEST(SelectMax, PicksLargest) {
    const std::vector<double> g = {0.3, 2.5, 1.0};
    EXPECT_EQ(select_max(g), 1u);
}

TEST(SelectMax, TiesGoToLowestIndex) {
    const std::vector<double> g = {1.0, 4.0, 4.0, 2.0};
    EXPECT_EQ(select_max(g), 1u);
    const std::vector<double> z(5, 0.0);
    EXPECT_EQ(select_max(z), 0u);
}

TEST(SelectMax, EmptyThrows) { EXPECT_THROW(select_max(std::vector<double>{}), DomainError); }

TEST(SelectMax, ResultIsAlwaysAMaximum) {
    RngStream rng(3, 0);
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> g(1 + rng.below(10));
        for (auto& v : g) v = static_cast<double>(rng.below(4));
        const auto k = select_max(g);
        for (std::size_t j = 0; j < g.size(); ++j) {
            EXPECT_GE(g[k], g[j]);
            if (j < k) EXPECT_LT(g[j], g[k]);
        }
    }
}

TEST(SelectRandom, RoughlyUniform) {
    RngStream rng(8, 0);
    std::vector<int> counts(4, 0);
    const int n = 40000;
    for (int i = 0; i < n; ++i) ++counts[select_random(4, rng)];
    for (int c : counts) EXPECT_NEAR(c, n / 4, 4 * std::sqrt(n * 0.25 * 0.75));
    EXPECT_EQ(select_random(1, rng), 0u);
    EXPECT_THROW(select_random(0, rng), DomainError);
}

TEST(SelectPf, FirstSlotFollowsEstimatedRate) {
    PfState s(3);
    const std::vector<double> r = {0.5, 1.2, 0.9};
    EXPECT_EQ(select_pf(r, s), 1u);
}

TEST(SelectPf, ServedUserYieldsToOthers) {
    PfState s(2);
    const std::vector<double> r = {2.0, 1.0};
    EXPECT_EQ(select_pf(r, s), 0u);
    s.record(0, 2.0);
    EXPECT_EQ(select_pf(r, s), 1u);
    s.reset();
    EXPECT_EQ(select_pf(r, s), 0u);
}

TEST(SelectPf, EpsilonOnlyBreaksZeroHistory) {
    PfState s(2, 1e-6);
    s.record(0, 1.0);
    s.record(1, 1.0);
    const std::vector<double> r = {1.0, 1.0 + 1e-9};
    EXPECT_EQ(select_pf(r, s), 1u);
    const std::vector<double> tie = {1.0, 1.0};
    EXPECT_EQ(select_pf(tie, s), 0u);
}

TEST(SelectPf, Errors) {
    PfState s(2);
    EXPECT_THROW(select_pf(std::vector<double>{1.0}, s), DomainError);
    EXPECT_THROW(select_pf(std::vector<double>{}, s), DomainError);
    EXPECT_THROW(PfState(2, 0.0), DomainError);
}

TEST(Policy, ParseAndPrint) {
    for (auto p : {Policy::max, Policy::random, Policy::proportional_fair})
        EXPECT_EQ(parse_policy(to_string(p)), p);
    EXPECT_THROW(parse_policy("round-robin"), ConfigError);
}
