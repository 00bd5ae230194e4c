#include <cmath>

#include <gtest/gtest.h>

#include "blowup/models.hpp"

using namespace blowup;

TEST(Registry, TenDistinctModels) {
    ASSERT_EQ(registry().size(), 10u);
    for (ModelId id : all_models) EXPECT_EQ(parse_model(to_string(id)), id);
    EXPECT_EQ(spec(ModelId::RD4).spatial_order, 4);
    EXPECT_EQ(spec(ModelId::NDE3).blow_up_rate_exponent, (Rational{1, 3}));
    EXPECT_EQ(spec(ModelId::QWE4).family, Family::wave);
    EXPECT_TRUE(spec(ModelId::PME4).divergent);
    EXPECT_FALSE(spec(ModelId::RD6).divergent);
}

TEST(Registry, ParseIsForgiving) {
    EXPECT_EQ(parse_model("rd4"), ModelId::RD4);
    EXPECT_EQ(parse_model("qwe4-div"), ModelId::QWE4_DIV);
    EXPECT_EQ(parse_model("Nde3_Div"), ModelId::NDE3_DIV);
    EXPECT_THROW(parse_model("rd5"), UnknownModelError);
    EXPECT_THROW(parse_model(""), UnknownModelError);
}

TEST(Rational, ValueAndText) {
    EXPECT_DOUBLE_EQ((Rational{1, 3}).value(), 1.0 / 3.0);
    EXPECT_EQ((Rational{1, 2}).str(), "1/2");
}

// Spatially constant theta reduces the separable ODE to c theta = theta^(p+1)
// (theta^p for divergence forms) with c the rate constant.
TEST(SeparableOde, ConstantSolutions) {
    for (ModelId id : all_models) {
        const auto o = separable_ode(id);
        const auto& m = spec(id);
        const double a = m.blow_up_rate_exponent.value();
        const double c = m.family == Family::wave ? a * (a + 1) : a;
        const int k = m.divergent ? m.nonlinearity_power - 1 : m.nonlinearity_power;
        const double th = std::pow(c, 1.0 / k);
        const Jet t(static_cast<std::size_t>(o.jet_order) + 1, th);
        EXPECT_NEAR(o.residual(t), 0.0, 1e-14) << to_string(id);
    }
}

TEST(SeparableOde, ZelDovichKompaneetsProfile) {
    const auto o = separable_ode(ModelId::RD2_DIV);
    for (double x : {-4.0, -1.0, 0.0, 0.3, 2.5, 4.6}) {
        const Jet t = std::sqrt(3.0) / 2 * cos(Jet::variable(x, 4) / 3.0);
        EXPECT_NEAR(o.residual(t), 0.0, 1e-14) << x;
    }
}

TEST(SeparableOde, NonConstantIsNotASolution) {
    const auto o = separable_ode(ModelId::RD4);
    const Jet t = 1 / std::sqrt(2.0) + 0.1 * sin(Jet::variable(0.4, 6));
    EXPECT_GT(std::fabs(o.residual(t)), 1e-3);
}

TEST(Reductions, OnlyDivergentModelsReduce) {
    for (ModelId id : {ModelId::PME4, ModelId::TFE4, ModelId::QWE4_DIV, ModelId::RD2_DIV, ModelId::NDE3_DIV})
        EXPECT_TRUE(find_reduction(id).has_value()) << to_string(id);
    for (ModelId id : {ModelId::RD2, ModelId::RD4, ModelId::RD6, ModelId::QWE4, ModelId::NDE3}) {
        EXPECT_FALSE(find_reduction(id).has_value()) << to_string(id);
        EXPECT_THROW(rescale_separable(id), NoReductionError);
    }
}

// The reduction must be an exact change of variables: for any smooth positive F,
// residual(theta(F)) == residual_scale * normalized_residual(F).
TEST(Reductions, ExactChangeOfVariables) {
    for (ModelId id : {ModelId::PME4, ModelId::TFE4, ModelId::QWE4_DIV, ModelId::RD2_DIV, ModelId::NDE3_DIV}) {
        const auto r = rescale_separable(id);
        const auto o = separable_ode(id);
        for (double x : {-0.7, 0.0, 0.45, 1.9}) {
            const Jet xv = Jet::variable(x, 8);
            const Jet F = 1.3 + 0.2 * sin(xv) + 0.05 * xv * xv;
            const double lhs = o.residual(r.theta_from_F(F));
            const double rhs = r.residual_scale * r.normalized_residual(F);
            EXPECT_NEAR(lhs, rhs, 1e-12 * (1 + std::fabs(lhs))) << to_string(id) << " x=" << x;
        }
        const Jet one(9, 1.0);
        EXPECT_NEAR(r.normalized_residual(one), 0.0, 1e-15) << to_string(id);
    }
}
