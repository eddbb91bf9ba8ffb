#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "outage/analytic.hpp"
#include "outage/numerics.hpp"
#include "outage/scenario.hpp"

using namespace outage;
using namespace outage::analytic;
using channel::UserProfile;

namespace {

// Three unequal users, one with perfect CSIT.
const std::vector<UserProfile> kMixed = {{1.0, 0.2}, {1.5, 0.0}, {0.8, 0.3}};

std::vector<UserProfile> preset_profiles() { return scenario::heterogeneous_preset().system.profiles; }

} // namespace

TEST(PowerThreshold, Examples) {
    EXPECT_EQ(power_threshold(0.0, 10.0), 0.0);
    EXPECT_DOUBLE_EQ(power_threshold(1.0, 10.0), 0.1);
    EXPECT_DOUBLE_EQ(power_threshold(3.0, 7.0), 1.0);
    EXPECT_TRUE(std::isinf(power_threshold(5000.0, 10.0)));
    EXPECT_THROW(power_threshold(-1.0, 10.0), DomainError);
    EXPECT_THROW(power_threshold(1.0, 0.0), DomainError);
}

TEST(MaxCompetitorCdf, SingleCompetitorIsExponential) {
    const std::vector<UserProfile> p = {{1.0, 0.0}, {2.0, 0.5}};
    for (double x : {0.0, 0.4, 3.0}) EXPECT_NEAR(max_competitor_cdf(0, p, x), 1.0 - std::exp(-x / 3.0), 1e-15);
    EXPECT_EQ(max_competitor_cdf(0, std::vector<UserProfile>{{1.0, 0.0}}, 0.7), 1.0);
}

TEST(MaxCompetitorCdf, ExpansionMatchesProduct) {
    const auto p = preset_profiles();
    for (std::size_t k : {0u, 5u, 11u})
        for (double x : {0.05, 1.0, 4.0, 15.0})
            EXPECT_NEAR(max_competitor_cdf(k, p, x, CdfForm::expansion), max_competitor_cdf(k, p, x), 1e-12);
}

TEST(MaxCompetitorCdf, ExpansionRefusesTooManyCompetitors) {
    const std::vector<UserProfile> p(kExpansionCeiling + 2, UserProfile{1.0, 0.0});
    EXPECT_THROW(max_competitor_cdf(0, p, 1.0, CdfForm::expansion), CapabilityError);
    EXPECT_NO_THROW(max_competitor_cdf(0, p, 1.0, CdfForm::product));
}

TEST(SelectionProb, TwoUsers) {
    const std::vector<UserProfile> p = {{1.0, 0.0}, {2.0, 0.0}};
    EXPECT_NEAR(selection_prob(0, p), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(selection_prob(1, p), 2.0 / 3.0, 1e-15);
}

TEST(SelectionProb, UsesEstimateVarianceOnly) {
    // sigma_hat2 = 1 for both, whatever the error split.
    const std::vector<UserProfile> p = {{1.5, 0.5}, {1.0, 0.0}};
    EXPECT_NEAR(selection_prob(0, p), 0.5, 1e-15);
}

TEST(SelectionProb, SymmetricUsers) {
    const std::vector<UserProfile> p(4, UserProfile{1.0, 0.3});
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(selection_prob(k, p), 0.25, 1e-14);
}

TEST(SelectionProb, SumsToOne) {
    for (const auto& p : {preset_profiles(), kMixed, scenario::partial_csit_preset(0.4).system.profiles}) {
        double s = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) s += selection_prob(k, p);
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(SelectionProb, ScaleInvariant) {
    auto scaled = kMixed;
    for (auto& u : scaled) {
        u.sigma2 *= 7.5;
        u.xi2 *= 7.5;
    }
    for (std::size_t k = 0; k < kMixed.size(); ++k)
        EXPECT_NEAR(selection_prob(k, scaled), selection_prob(k, kMixed), 1e-14);
}

TEST(SelectionProb, IncreasesWithOwnEstimateVariance) {
    auto p = kMixed;
    double prev = 0.0;
    for (double s2 : {0.4, 0.8, 1.6, 3.2}) {
        p[0].sigma2 = s2 + p[0].xi2;
        const double v = selection_prob(0, p);
        EXPECT_GT(v, prev);
        prev = v;
    }
}

TEST(SelectionProb, DegenerateUserNeverSelected) {
    const std::vector<UserProfile> p = {{1.0, 1.0}, {1.0, 0.0}, {2.0, 0.0}};
    EXPECT_EQ(selection_prob(0, p), 0.0);
    EXPECT_NEAR(selection_prob(1, p), 1.0 / 3.0, 1e-15);
    EXPECT_THROW(selection_prob(0, std::vector<UserProfile>{{1.0, 1.0}, {2.0, 2.0}}), ConfigError);
}

TEST(SlotCountPmf, Examples) {
    const auto pmf = slot_count_pmf(0.5, 2);
    ASSERT_EQ(pmf.size(), 3u);
    EXPECT_DOUBLE_EQ(pmf[0], 0.25);
    EXPECT_DOUBLE_EQ(pmf[1], 0.5);
    EXPECT_DOUBLE_EQ(pmf[2], 0.25);
    EXPECT_EQ(slot_count_pmf(0.0, 3), (std::vector<double>{1, 0, 0, 0}));
    EXPECT_EQ(slot_count_pmf(1.0, 2), (std::vector<double>{0, 0, 1}));
}

TEST(SlotCountPmf, NormalizedAndConsistentAcrossPaths) {
    for (int n : {1, 5, 40, 1000, 1001, 5000}) {
        const auto pmf = slot_count_pmf(0.137, n);
        double s = 0.0, mean = 0.0;
        for (std::size_t i = 0; i < pmf.size(); ++i) {
            s += pmf[i];
            mean += static_cast<double>(i) * pmf[i];
        }
        EXPECT_NEAR(s, 1.0, 1e-12) << n;
        EXPECT_NEAR(mean, 0.137 * n, 1e-9 * n) << n;
    }
    const auto a = slot_count_pmf(0.3, 1000);
    const auto b = slot_count_pmf(0.3, 1001);
    EXPECT_NEAR(b[300] / a[300], 1001.0 / 701.0 * 0.7, 1e-10);
}

TEST(SlotCountPmf, Errors) {
    EXPECT_THROW(slot_count_pmf(-0.1, 3), DomainError);
    EXPECT_THROW(slot_count_pmf(1.1, 3), DomainError);
    EXPECT_THROW(slot_count_pmf(NAN, 3), DomainError);
    EXPECT_THROW(slot_count_pmf(0.5, 0), DomainError);
}

TEST(SelectedPowerLaw, SingleUserIsExponential) {
    const std::vector<UserProfile> p = {{1.0, 0.3}};
    const SelectedPowerLaw law(0, p);
    EXPECT_EQ(law.selection_probability(), 1.0);
    for (double t : {0.1, 1.0, 5.0}) {
        EXPECT_NEAR(law.cdf(t), 1.0 - std::exp(-t / 1.7), 1e-15);
        EXPECT_NEAR(law.pdf(t), std::exp(-t / 1.7) / 1.7, 1e-15);
    }
}

TEST(SelectedPowerLaw, TwoSymmetricUsers) {
    const double s = 0.8, xi2 = 0.2;
    const std::vector<UserProfile> p(2, UserProfile{s + xi2, xi2});
    const SelectedPowerLaw law(0, p);
    for (double t : {0.05, 0.7, 3.0}) {
        const double ref = 1.0 - 2.0 * std::exp(-t / (2 * s + xi2)) + std::exp(-t / (s + xi2));
        EXPECT_NEAR(law.cdf(t), ref, 1e-15);
    }
}

TEST(SelectedPowerLaw, PerfectCsitIsSelectedEstimateLaw) {
    // With xi2 = 0 the law is that of gamma_hat_k given it is the largest.
    const std::vector<UserProfile> p = {{1.0, 0.0}, {2.0, 0.0}};
    const SelectedPowerLaw law(0, p);
    for (double t : {0.2, 1.0, 6.0}) {
        const double joint = numerics::integrate(
            [](double x) { return (1.0 - std::exp(-x / 4.0)) * std::exp(-x / 2.0) / 2.0; }, 0.0, t).value;
        EXPECT_NEAR(law.cdf(t), joint * 3.0, 1e-12);
    }
}

TEST(SelectedPowerLaw, CdfProperties) {
    const auto p = preset_profiles();
    for (std::size_t k : {0u, 6u, 11u}) {
        const SelectedPowerLaw law(k, p);
        ASSERT_TRUE(law.closed_form());
        EXPECT_NEAR(law.mixture()->coefficient_sum(), 1.0, 1e-12);
        EXPECT_EQ(law.cdf(0.0), 0.0);
        EXPECT_NEAR(law.cdf(1e4), 1.0, 1e-14);
        double prev = 0.0;
        for (double t = 0.01; t < 30.0; t *= 1.3) {
            const double g = law.cdf(t);
            EXPECT_GE(g, prev - 1e-13);
            prev = g;
            EXPECT_GE(law.pdf(t), 0.0);
        }
        const double mass = numerics::integrate([&](double t) { return law.pdf(t); }, 0.0, INFINITY).value;
        EXPECT_NEAR(mass, 1.0, 1e-9);
    }
}

TEST(SelectedPowerLaw, PdfIsDerivativeOfCdf) {
    const SelectedPowerLaw law(2, kMixed);
    const double h = 1e-6;
    for (double t : {0.05, 0.5, 2.0, 8.0})
        EXPECT_NEAR((law.cdf(t + h) - law.cdf(t - h)) / (2 * h), law.pdf(t), 1e-7);
}

// Values below are 30-digit evaluations of the defining integral
// G(t) = (1/p) int (1 - Q1(sqrt(2x)/xi, sqrt(2t)/xi)) F_W(x) f(x) dx.
TEST(SelectedPowerLaw, FrozenValues) {
    struct Case {
        std::size_t k;
        double t, g;
    };
    const Case cases[] = {
        {0, 0.1, 0.0040654400312967880386},  {0, 0.5, 0.040866897989392153629},
        {0, 2.0, 0.34602490734811403805},    {1, 0.1, 0.00011139942057713587427},
        {1, 0.5, 0.010013639638595851674},   {1, 2.0, 0.21683930152110935967},
        {2, 0.1, 0.010209851678098808524},   {2, 0.5, 0.077211809827636388387},
        {2, 2.0, 0.46882200711545547665},
    };
    for (const auto& c : cases) EXPECT_NEAR(SelectedPowerLaw(c.k, kMixed).cdf(c.t), c.g, 1e-13) << c.k << " " << c.t;
    EXPECT_NEAR(selection_prob(0, kMixed), 0.2823596385113498781, 1e-15);
    EXPECT_NEAR(selection_prob(1, kMixed), 0.57238667900092506061, 1e-15);
    EXPECT_NEAR(selection_prob(2, kMixed), 0.14525368248772506129, 1e-15);
}

TEST(SelectedPowerLaw, QuadratureFallbackMatchesMixture) {
    AnalyticOptions fallback;
    fallback.max_expansion_competitors = 0;
    for (std::size_t k = 0; k < kMixed.size(); ++k) {
        const SelectedPowerLaw closed(k, kMixed);
        const SelectedPowerLaw quad(k, kMixed, fallback);
        ASSERT_FALSE(quad.closed_form());
        EXPECT_NEAR(quad.selection_probability(), closed.selection_probability(), 1e-10);
        for (double t : {0.05, 0.5, 2.5}) {
            EXPECT_NEAR(quad.cdf(t), closed.cdf(t), 1e-9) << k << " " << t;
            EXPECT_NEAR(quad.pdf(t), closed.pdf(t), 1e-8) << k << " " << t;
        }
    }
}

TEST(SelectedPowerLaw, QuadratureFallbackIsScaleFree) {
    AnalyticOptions fallback;
    fallback.max_expansion_competitors = 0;
    for (double unit : {1e-4, 1e4}) {
        auto p = kMixed;
        for (auto& u : p) {
            u.sigma2 *= unit;
            u.xi2 *= unit;
        }
        const SelectedPowerLaw closed(0, p);
        const SelectedPowerLaw quad(0, p, fallback);
        EXPECT_NEAR(quad.selection_probability(), closed.selection_probability(), 1e-9) << unit;
        EXPECT_NEAR(quad.cdf(0.5 * unit), closed.cdf(0.5 * unit), 1e-8) << unit;
    }
}

TEST(TwoSlotOutage, LargeThresholdKeepsDensityMass) {
    const SelectedPowerLaw law(0, kMixed);
    // theta = 20: upper limit ~1e5 while the density lives near 1.
    const double p2 = two_slot_outage(law, 10.0, 20.0);
    const double full = cond_rate_outage(law, 10.0, 20.0);
    const double half = cond_rate_outage(law, 10.0, 10.0);
    EXPECT_GE(p2, half * half - 1e-12);
    EXPECT_LE(p2, full * full + 1e-12);
}

TEST(SelectedPowerLaw, ContinuousAtPerfectCsit) {
    auto p = kMixed;
    const SelectedPowerLaw exact(0, std::vector<UserProfile>{{0.8, 0.0}, {1.5, 0.0}, {0.5, 0.0}});
    p[0] = {0.8 + 1e-8, 1e-8};
    p[2] = {0.5 + 1e-8, 1e-8};
    const SelectedPowerLaw near(0, p);
    for (double t : {0.1, 1.0, 4.0}) EXPECT_NEAR(near.cdf(t), exact.cdf(t), 1e-7);
}

TEST(SelectedPowerLaw, Errors) {
    EXPECT_THROW(SelectedPowerLaw(3, kMixed), DomainError);
    AnalyticOptions bad;
    bad.max_expansion_competitors = kExpansionCeiling + 1;
    EXPECT_THROW(SelectedPowerLaw(0, kMixed, bad), ConfigError);
    const std::vector<UserProfile> degenerate = {{1.0, 1.0}, {1.0, 0.0}};
    EXPECT_THROW(selected_power_cdf(0, degenerate), DomainError);
    AnalyticOptions none;
    none.max_expansion_competitors = 0;
    EXPECT_THROW(selected_power_cdf(0, kMixed, none), CapabilityError);
}

TEST(CondRateOutage, FrozenValues) {
    struct Case {
        std::size_t k;
        double theta, p1, p2;
    };
    const Case cases[] = {
        {0, 1.0, 0.0040654400312967877539, 5.0372474202411821916e-6},
        {0, 3.0, 0.070146410532055366675, 0.00032318030264994394256},
        {0, 5.0, 0.57415899511481353337, 0.0068479799830593753786},
        {1, 1.0, 0.00011139942057713585624, 2.5428744627843293545e-10},
        {1, 3.0, 0.023460374246791574924, 1.8681659683400784975e-6},
        {1, 5.0, 0.41582344710239569603, 0.00034590095522652453394},
        {2, 1.0, 0.010209851678098807875, 0.000035389584043902860747},
        {2, 3.0, 0.12247880391648017982, 0.0015383780613587690272},
        {2, 5.0, 0.70191172070052868272, 0.021974594630587447557},
    };
    for (const auto& c : cases) {
        EXPECT_NEAR(cond_rate_outage(c.k, kMixed, 10.0, c.theta), c.p1, 1e-13) << c.k << " " << c.theta;
        EXPECT_NEAR(two_slot_outage(SelectedPowerLaw(c.k, kMixed), 10.0, c.theta), c.p2, 1e-9 * c.p2)
            << c.k << " " << c.theta;
    }
}

TEST(CondRateOutage, ZeroRateNeverFails) {
    EXPECT_EQ(cond_rate_outage(0, kMixed, 10.0, 0.0), 0.0);
    EXPECT_EQ(two_slot_outage(SelectedPowerLaw(0, kMixed), 10.0, 0.0), 0.0);
}

TEST(CondRateOutage, EqualCompetitorFormAgrees) {
    for (double xi2 : {0.0, 0.1, 0.5}) {
        std::vector<UserProfile> p(6, UserProfile{1.0, xi2});
        p[2] = {1.7, 0.3};
        for (double theta : {0.5, 2.0, 6.0}) {
            const double general = cond_rate_outage(2, p, 10.0, theta);
            EXPECT_NEAR(cond_rate_outage_equal_competitors(2, p, 10.0, theta), general, 1e-12);
        }
    }
    EXPECT_THROW(cond_rate_outage_equal_competitors(0, kMixed, 10.0, 1.0), DomainError);
}

TEST(TwoSlotOutage, BracketedBySingleSlotTerms) {
    for (std::size_t k = 0; k < kMixed.size(); ++k) {
        const SelectedPowerLaw law(k, kMixed);
        for (double theta : {0.5, 2.0, 6.0, 10.0}) {
            const double p2 = two_slot_outage(law, 10.0, theta);
            const double half = cond_rate_outage(law, 10.0, theta / 2.0);
            const double full = cond_rate_outage(law, 10.0, theta);
            EXPECT_GE(p2, half * half - 1e-12);
            EXPECT_LE(p2, full * full + 1e-12);
        }
    }
}

TEST(Bounds, Ordering) {
    const auto s = scenario::heterogeneous_preset();
    const BoundEvaluator eval(s.system);
    for (std::size_t k = 0; k < eval.users(); ++k)
        for (double rate : {0.1, 0.5, 1.0, 2.0, 4.0}) {
            const auto b = eval.evaluate(k, rate);
            EXPECT_GE(b.tight, b.loose - 1e-12);
            EXPECT_GE(b.loose, b.slot_pmf[0] - 1e-15);
            EXPECT_LE(b.tight, 1.0);
            EXPECT_NEAR(b.slot_pmf[0], std::pow(1.0 - b.p_select, s.system.slots), 1e-14);
        }
}

TEST(Bounds, MonotoneInRate) {
    const BoundEvaluator eval(scenario::heterogeneous_preset().system);
    for (std::size_t k : {0u, 11u}) {
        double prev_loose = 0.0, prev_tight = 0.0;
        for (double rate = 0.0; rate <= 3.0; rate += 0.1) {
            const auto b = eval.evaluate(k, rate);
            EXPECT_GE(b.loose, prev_loose - 1e-13);
            EXPECT_GE(b.tight, prev_tight - 1e-13);
            prev_loose = b.loose;
            prev_tight = b.tight;
        }
    }
}

TEST(Bounds, ZeroRateIsNeverScheduled) {
    auto c = scenario::heterogeneous_preset().system;
    c.rate = 0.0;
    for (std::size_t k = 0; k < c.users(); ++k) {
        const auto b = evaluate_bounds(c, k);
        EXPECT_NEAR(b.loose, std::pow(1.0 - b.p_select, c.slots), 1e-15);
        EXPECT_NEAR(b.tight, b.loose, 1e-15);
    }
}

TEST(Bounds, SingleSlotWindowBoundsCoincide) {
    auto c = scenario::heterogeneous_preset().system;
    c.slots = 1;
    for (std::size_t k = 0; k < c.users(); ++k) {
        const auto b = evaluate_bounds(c, k);
        EXPECT_EQ(b.loose, b.tight);
        EXPECT_NEAR(b.loose, 1.0 - b.p_select + b.p_select * b.p_out_1, 1e-15);
    }
}

TEST(Bounds, OneUserOneSlotIsExact) {
    SystemConfig c{{{1.0, 0.0}}, 10.0, 1.0, 1};
    // Outage iff gamma < (2 - 1)/10 with gamma ~ Exp(2).
    EXPECT_NEAR(outage_lower_bound_tight(c, 0), 1.0 - std::exp(-0.05), 1e-15);
    EXPECT_NEAR(outage_lower_bound_loose(c, 0), 1.0 - std::exp(-0.05), 1e-15);
}

TEST(Bounds, DegenerateUserAlwaysInOutage) {
    SystemConfig c{{{1.0, 1.0}, {1.0, 0.0}}, 10.0, 0.5, 3};
    const auto b = evaluate_bounds(c, 0);
    EXPECT_EQ(b.p_select, 0.0);
    EXPECT_EQ(b.loose, 1.0);
    EXPECT_EQ(b.tight, 1.0);
}

TEST(Bounds, LargeRateApproachesOne) {
    const BoundEvaluator eval(scenario::heterogeneous_preset().system);
    for (std::size_t k = 0; k < eval.users(); ++k) EXPECT_GT(eval.evaluate(k, 12.0).loose, 0.999);
}

TEST(Bounds, EvaluatorMatchesFreeFunctions) {
    auto c = scenario::heterogeneous_preset().system;
    c.rate = 0.7;
    const BoundEvaluator eval(c);
    for (std::size_t k : {0u, 4u, 9u}) {
        const auto b = eval.evaluate(k, c.rate);
        EXPECT_EQ(b.tight, outage_lower_bound_tight(c, k));
        EXPECT_EQ(b.loose, outage_lower_bound_loose(c, k));
    }
}

TEST(Bounds, ImperfectCsitHurtsAffectedUser) {
    double prev = 0.0;
    for (double xi2 : {0.0, 0.1, 0.3, 0.6}) {
        auto c = scenario::partial_csit_preset(xi2).system;
        const double b = outage_lower_bound_tight(c, 11);
        EXPECT_GT(b, prev - 1e-12);
        prev = b;
    }
}

TEST(SystemConfig, Validation) {
    SystemConfig c{{{1.0, 0.0}}, 10.0, 1.0, 5};
    EXPECT_NO_THROW(c.validate());
    c.rho = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c.rho = 10.0;
    c.rate = -1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c.rate = 1.0;
    c.slots = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}
