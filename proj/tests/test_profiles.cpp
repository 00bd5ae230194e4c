#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "blowup/profiles.hpp"

using namespace blowup;

namespace {

const double pi = std::numbers::pi;

// Symmetric clamped solution of f'''' = f: cosh(L) cos x - cos(L) cosh x.
double rd4_oracle(double x, double L) { return std::cosh(L) * std::cos(x) - std::cos(L) * std::cosh(x); }

SampledProfile values_only(const SampledProfile& p) {
    SampledProfile q;
    q.xs = p.xs;
    q.values = p.values;
    return q;
}

}  // namespace

TEST(Threshold, Rd2IsHalfPi) {
    EXPECT_NEAR(threshold_length(stationary_problem(StationaryKind::RD2)), pi / 2, 1e-12);
}

TEST(Threshold, Rd4SolvesTanPlusTanh) {
    const double L = threshold_length(stationary_problem(StationaryKind::RD4));
    EXPECT_GT(L, pi / 2);
    EXPECT_LT(L, pi);
    EXPECT_NEAR(std::tan(L) + std::tanh(L), 0.0, 1e-12);
    EXPECT_NEAR(boundary_determinant(stationary_problem(StationaryKind::RD4), L), 0.0, 1e-9);
}

TEST(Threshold, DeterminantVanishesForAllProblems) {
    for (auto k : {StationaryKind::RD2, StationaryKind::RD4, StationaryKind::RD6, StationaryKind::NDE3}) {
        const auto p = stationary_problem(k);
        const double L = threshold_length(p);
        EXPECT_GT(L, 0.1) << p.name;
        const double d1 = boundary_determinant(p, L * (1 - 1e-3)), d2 = boundary_determinant(p, L * (1 + 1e-3));
        EXPECT_LT(d1 * d2, 0.0) << p.name;
    }
}

TEST(Stationary, Rd4MatchesClosedForm) {
    const auto s = stationary_solution(stationary_problem(StationaryKind::RD4));
    const double L = s.L0, f0 = rd4_oracle(0, L);
    for (double x : linspace(-L, L, 41)) EXPECT_NEAR(s.eval(x) / s.eval(0), rd4_oracle(x, L) / f0, 1e-10);
    EXPECT_NEAR(s.eval(L), 0.0, 1e-10);
    EXPECT_NEAR(s.eval(L, 1), 0.0, 1e-10);
    EXPECT_NEAR(s.eval(-L, 1), 0.0, 1e-10);
}

TEST(Stationary, OdeResidualVanishes) {
    for (auto k : {StationaryKind::RD2, StationaryKind::RD4, StationaryKind::RD6, StationaryKind::NDE3}) {
        const auto s = stationary_solution(stationary_problem(k));
        for (double x : linspace(-s.L0, s.L0, 17)) EXPECT_NEAR(s.ode_residual(x), 0.0, 1e-9) << s.problem.name;
    }
}

TEST(Stationary, BoundaryConditionsHold) {
    for (auto k : {StationaryKind::RD2, StationaryKind::RD4, StationaryKind::RD6, StationaryKind::NDE3}) {
        const auto s = stationary_solution(stationary_problem(k));
        const double scale = std::fabs(s.eval(0));
        for (int o : s.problem.bc_left) EXPECT_NEAR(s.eval(-s.L0, o), 0.0, 1e-9 * scale) << s.problem.name << o;
        for (int o : s.problem.bc_right) EXPECT_NEAR(s.eval(s.L0, o), 0.0, 1e-9 * scale) << s.problem.name << o;
    }
}

TEST(BoundaryLayer, ExponentsFollowClampedOrder) {
    EXPECT_EQ(stationary_profile(stationary_problem(StationaryKind::RD2)).metadata.at("boundary_exponent"), 1);
    EXPECT_EQ(stationary_profile(stationary_problem(StationaryKind::RD4)).metadata.at("boundary_exponent"), 2);
    EXPECT_EQ(stationary_profile(stationary_problem(StationaryKind::RD6)).metadata.at("boundary_exponent"), 3);
}

TEST(BoundaryLayer, Rd4CoefficientMatchesClosedForm) {
    const auto p = stationary_profile(stationary_problem(StationaryKind::RD4));
    const double L = p.metadata.at("L0");
    // f = cos x + C cosh x with C = -cos L / cosh L, so f''(L)/2 = -cos L.
    const double C = -std::cos(L) / std::cosh(L);
    EXPECT_GT(C, 0.0);
    EXPECT_NEAR(p.metadata.at("C"), C, 1e-12);
    EXPECT_NEAR(p.metadata.at("f0"), 1 + C, 1e-12);
    EXPECT_NEAR(p.metadata.at("C1"), -std::cos(L), 1e-10);
}

TEST(BoundaryLayer, Rd2CosineHasUnitSlope) {
    const auto p = stationary_profile(stationary_problem(StationaryKind::RD2));
    EXPECT_NEAR(p.metadata.at("C1"), 1.0, 1e-10);
    const auto left = boundary_layer_coefficient(p, p.xs.front());
    EXPECT_EQ(left.exponent, 1);
    EXPECT_NEAR(left.coefficient, 1.0, 1e-10);
}

TEST(BoundaryLayer, FiniteDifferenceFallbackAgrees) {
    const auto s = stationary_solution(stationary_problem(StationaryKind::RD4));
    const double exact = boundary_layer_coefficient(s.sample(11), s.L0).coefficient;
    for (std::size_t n : {101u, 401u, 1601u}) {
        const auto bl = boundary_layer_coefficient(values_only(s.sample(n)), s.L0);
        EXPECT_EQ(bl.exponent, 2);
        EXPECT_LT(std::fabs(bl.coefficient - exact), 1e-5 * std::fabs(exact)) << n;
    }
}

TEST(BoundaryLayer, UnitNormalization) {
    const auto p = stationary_profile(stationary_problem(StationaryKind::RD4), Normalization::unit_C1);
    EXPECT_NEAR(p.metadata.at("C1"), 1.0, 1e-10);
}

TEST(BoundaryLayer, DegenerateEndpointIsRejected) {
    SampledProfile flat;
    flat.xs = linspace(0, 1, 50);
    flat.values.assign(50, 0.0);
    flat.values[25] = 1.0;
    EXPECT_THROW(boundary_layer_coefficient(flat, 1.0), DegenerateEndpointError);
    SampledProfile p = values_only(stationary_profile(stationary_problem(StationaryKind::RD2), Normalization::value_at_origin, 101));
    EXPECT_THROW(boundary_layer_coefficient(p, 0.3), std::invalid_argument);
}

TEST(SampledProfile, ValidateRejectsBadInput) {
    SampledProfile p;
    p.xs = {0, 1, 1};
    p.values = {0, 1, 2};
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.xs = {0, 1, 2};
    p.values = {0, 1};
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.values = {0, 1, 2};
    p.support = std::make_pair(-1.0, 2.0);
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.support = std::make_pair(0.0, 2.0);
    EXPECT_NO_THROW(p.validate());
    EXPECT_THROW(p.derivative(1), std::out_of_range);
}

TEST(Stationary, ParseAndSampleLayout) {
    EXPECT_EQ(parse_stationary("rd6"), StationaryKind::RD6);
    EXPECT_THROW(parse_stationary("rd8"), std::invalid_argument);
    const auto p = stationary_profile(stationary_problem(StationaryKind::RD4), Normalization::value_at_origin, 2001);
    EXPECT_EQ(p.size(), 2001u);
    EXPECT_EQ(p.xs[1000], 0.0);
    EXPECT_EQ(p.max_derivative(), 4);
    EXPECT_NO_THROW(p.validate());
}
