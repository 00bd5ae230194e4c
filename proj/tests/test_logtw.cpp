#include <cmath>

#include <gtest/gtest.h>

#include "blowup/jet.hpp"
#include "blowup/logtw.hpp"

using namespace blowup;

namespace {

const ModelId law_models[] = {ModelId::RD2, ModelId::RD4, ModelId::RD6, ModelId::QWE4, ModelId::NDE3};

// Jet oracle for one series term z^m L^r ell^j.
Jet term_jet(double z, double m, double r, int j, std::size_t order) {
    const Jet zv = Jet::variable(z, order);
    const Jet L = log(zv);
    return pow(zv, m) * pow(L, r) * pow(log(L), static_cast<double>(j));
}

}  // namespace

TEST(LogSeries, DerivativesMatchJets) {
    LogSeries s;
    s.add({0.7, 2.0, 0.5, 0});
    s.add({-0.3, 2.0, -0.5, 1});
    s.add({0.1, 2.0, -1.5, 2});
    for (double z : {20.0, 400.0, 1e5}) {
        const Jet ref = 0.7 * term_jet(z, 2, 0.5, 0, 6) - 0.3 * term_jet(z, 2, -0.5, 1, 6) + 0.1 * term_jet(z, 2, -1.5, 2, 6);
        for (int k = 0; k <= 6; ++k) {
            const double got = s.derivative(k).eval(z), want = ref.derivative(static_cast<std::size_t>(k));
            EXPECT_NEAR(got, want, 1e-10 * (std::fabs(want) + std::pow(z, 2.0 - k))) << "z=" << z << " k=" << k;
        }
    }
}

TEST(LogSeries, AddMergesLikeTerms) {
    LogSeries s;
    s.add({1, 1, 0, 0});
    s.add({2, 1, 0, 0});
    ASSERT_EQ(s.terms.size(), 1u);
    EXPECT_EQ(s.terms[0].coef, 3);
}

TEST(Law, BalanceExponentsAndCoefficients) {
    struct Row {
        ModelId id;
        double a;
        long p, q_den;
    };
    const Row rows[] = {{ModelId::RD2, 1.0, 1, 2},
                        {ModelId::RD4, 1 / std::sqrt(2.0), 2, 2},
                        {ModelId::RD6, 1 / (2 * std::sqrt(3.0)), 3, 2},
                        {ModelId::QWE4, std::sqrt(2.0), 2, 2},
                        {ModelId::NDE3, 1.0, 1, 3}};
    for (const auto& r : rows) {
        const auto law = logtw_law(r.id);
        EXPECT_NEAR(law.coefficient, r.a, 1e-14) << to_string(r.id);
        EXPECT_EQ(law.power, (Rational{r.p, 1})) << to_string(r.id);
        EXPECT_EQ(law.log_power, (Rational{1, r.q_den})) << to_string(r.id);
    }
}

// Independent check of the leading balance: with g = a z^p L^q in eta, the rate
// term over the diffusion term tends to 1 like O(1/L).
TEST(Law, LeadingTermBalancesAgainstJetDerivatives) {
    for (ModelId id : law_models) {
        const auto law = logtw_law(id);
        const auto ode = logtw_ode(id, 0.0);
        double prev = 1e9;
        for (double z : {1e4, 1e8, 1e16}) {
            const Jet eta = Jet::variable(-z, static_cast<std::size_t>(ode.order));
            const Jet zz = -1.0 * eta;
            const Jet g = law.coefficient * pow(zz, law.power.value()) * pow(log(zz), law.log_power.value());
            const double rate = ode.rate_term_coefficient * g.value();
            const double diff = ode.sign * std::pow(g.value(), ode.sigma) * g.derivative(static_cast<std::size_t>(ode.order));
            const double dev = std::fabs(rate / diff - 1);
            EXPECT_LT(dev, 3.0 / std::log(z)) << to_string(id) << " z=" << z;
            EXPECT_LT(dev, prev) << to_string(id);
            prev = dev;
        }
    }
}

TEST(Law, SelfSimilarModelsHaveNoLaw) {
    for (ModelId id : {ModelId::PME4, ModelId::TFE4, ModelId::QWE4_DIV, ModelId::RD2_DIV, ModelId::NDE3_DIV}) {
        EXPECT_FALSE(has_logtw_law(id));
        EXPECT_THROW(logtw_law(id), NoLawError);
        EXPECT_THROW(logtw_ode(id, 1.0), NoLawError);
    }
}

TEST(Residual, DecaysAlongTheBundle) {
    for (ModelId id : law_models) {
        const auto law = logtw_law(id);
        const auto ode = logtw_ode(id, 1.0);
        const double r3 = logtw_residual(ode, law, -1e3), r6 = logtw_residual(ode, law, -1e6);
        EXPECT_LT(r6, r3) << to_string(id);
        EXPECT_LT(r6, 0.2) << to_string(id);
    }
}

TEST(Residual, CorrectionsImproveTheAnsatz) {
    for (ModelId id : law_models) {
        const auto law = logtw_law(id);
        const auto ode = logtw_ode(id, 1.0);
        const double r1 = logtw_residual(ode, law, -1e6, 1), r4 = logtw_residual(ode, law, -1e6, 4);
        EXPECT_LT(r4, 0.2 * r1) << to_string(id);
    }
}

TEST(Residual, WrongCoefficientStallsAtConstant) {
    const auto ode = logtw_ode(ModelId::RD4, 1.0);
    auto law = logtw_law(ModelId::RD4);
    law.coefficient *= 1.1;
    const double r = logtw_residual(ode, law, -1e12);
    EXPECT_GT(r, 0.1);
}

TEST(Residual, RangeIsEnforced) {
    const auto ode = logtw_ode(ModelId::RD4, 1.0);
    const auto law = logtw_law(ModelId::RD4);
    EXPECT_THROW(logtw_residual(ode, law, -5.0), OutOfRangeError);
    EXPECT_THROW(integrate_logtw(ode, -10.0, -5.0), OutOfRangeError);
    EXPECT_THROW(integrate_logtw(ode, -1e4, 1.0), OutOfRangeError);
    EXPECT_THROW(logtw_ansatz(ModelId::RD4, law, 0), std::invalid_argument);
}

TEST(Integrate, Rd4StaysOnTheLaw) {
    const auto tr = integrate_logtw(logtw_ode(ModelId::RD4, 1.0), -1e4, -1e3, 4);
    ASSERT_EQ(tr.status, IvpStatus::ok) << tr.diagnostic;
    ASSERT_FALSE(tr.ratio.empty());
    EXPECT_NEAR(tr.etas.back(), -1e3, 1e-9);
    for (double r : tr.ratio) {
        EXPECT_GT(r, 0.97);
        EXPECT_LT(r, 1.03);
    }
}

TEST(Integrate, NdeStaysPositive) {
    const auto tr = integrate_logtw(logtw_ode(ModelId::NDE3, 1.0), -1e4, -1e3, 2);
    EXPECT_TRUE(tr.status == IvpStatus::ok || tr.status == IvpStatus::stopped);
    for (double g : tr.g) EXPECT_GT(g, 0.0);
}
