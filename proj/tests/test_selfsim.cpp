#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "blowup/models.hpp"
#include "blowup/selfsim.hpp"

using namespace blowup;

namespace {

const double pi = std::numbers::pi;

// Piecewise-linear profile through the given node values, m samples per piece.
SampledProfile polyline(const std::vector<double>& nodes, int m = 40) {
    SampledProfile p;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        for (int j = 0; j < m; ++j) {
            const double t = static_cast<double>(j) / m;
            p.xs.push_back(static_cast<double>(i) + t);
            p.values.push_back(nodes[i] + t * (nodes[i + 1] - nodes[i]));
        }
    p.xs.push_back(static_cast<double>(nodes.size() - 1));
    p.values.push_back(nodes.back());
    return p;
}

const ShootingResult& pme(int k) {
    static std::map<int, ShootingResult> cache;
    auto it = cache.find(k);
    if (it == cache.end()) {
        const auto pat = pme4_pattern(k);
        Pme4Options o;
        o.x0_hint = pat.x0_hint;
        it = cache.emplace(k, pme4_shoot(pat.symmetry, {pat.a, pat.b}, o)).first;
    }
    return it->second;
}

}  // namespace

TEST(Zk, ClosedFormAndSupport) {
    const auto p = zk_profile(301);
    ASSERT_TRUE(p.support.has_value());
    EXPECT_NEAR(p.support->second, 1.5 * pi, 1e-14);
    EXPECT_EQ(p.values.front(), 0.0);
    EXPECT_NEAR(p.values[150], std::sqrt(3.0) / 2, 1e-15);
    for (std::size_t i = 1; i + 1 < p.size(); i += 13) {
        EXPECT_NEAR(p.values[i], std::sqrt(3.0) / 2 * std::cos(p.xs[i] / 3), 1e-14);
        EXPECT_NEAR(p.derivative(2)[i], -p.values[i] / 9, 1e-14);
    }
    EXPECT_THROW(zk_profile(2), std::invalid_argument);
}

TEST(Zk, SolvesDivergentOdeOnGrid) {
    const auto p = zk_profile(2001);
    const auto o = separable_ode(ModelId::RD2_DIV);
    for (std::size_t i = 100; i < 1900; i += 97) {
        const Jet t = Jet::from_derivatives({p.values[i], p.derivative(1)[i], p.derivative(2)[i]});
        EXPECT_NEAR(o.residual(t), 0.0, 1e-12);
    }
}

TEST(SignChanges, LocatedByInterpolation) {
    const auto xs = linspace(0.1, 10, 500);
    std::vector<double> ys;
    for (double x : xs) ys.push_back(std::sin(x));
    const auto z = sign_changes(xs, ys);
    ASSERT_EQ(z.size(), 3u);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(z[static_cast<std::size_t>(k)], (k + 1) * pi, 1e-3);
    EXPECT_TRUE(sign_changes({0, 1, 2}, {1, 0, 1}).empty());
    EXPECT_EQ(sign_changes({0, 1, 2}, {1, 0, -1}).size(), 1u);
}

TEST(Lobes, SplitBySign) {
    const auto ls = lobes({1, 3, 2, -1, -5, -2, 0.5});
    ASSERT_EQ(ls.size(), 3u);
    EXPECT_EQ(ls[0].sign, 1);
    EXPECT_EQ(ls[1].sign, -1);
    EXPECT_DOUBLE_EQ(ls[0].peak, 3);
    EXPECT_DOUBLE_EQ(ls[1].peak, 5);
}

TEST(Pme4, PatternsConvergeWithExpectedZeroCount) {
    for (int k = 0; k <= 3; ++k) {
        const auto& r = pme(k);
        EXPECT_TRUE(r.converged) << k << " " << r.diagnostic;
        EXPECT_EQ(static_cast<int>(dominant_zeros(r.profile).size()), k) << k;
        EXPECT_NO_THROW(r.profile.validate());
    }
    EXPECT_THROW(pme4_pattern(4), std::invalid_argument);
}

TEST(Pme4, SymmetryOfProfiles) {
    for (int k : {0, 1}) {
        const auto& v = pme(k).profile.values;
        const double s = k == 0 ? 1.0 : -1.0, big = pme(k).profile.max_abs();
        for (std::size_t i = 0; i < v.size(); ++i) ASSERT_NEAR(v[i], s * v[v.size() - 1 - i], 1e-12 * big);
    }
}

// Multiplying F'''' = F - F^(1/3) by F and integrating by parts gives
// int F''^2 = int F^2 - int |F|^(4/3), so E = -1/4 int |F|^(4/3).
TEST(Pme4, EnergyIdentity) {
    for (int k = 0; k <= 2; ++k) {
        const auto& F = pme(k).profile;
        std::vector<double> c;
        for (double v : F.values) c.push_back(std::pow(std::fabs(v), 4.0 / 3.0));
        const double expected = -0.25 * simpson(F.xs, c);
        EXPECT_NEAR(ls_energy(F), expected, 2e-3 * std::fabs(expected)) << k;
    }
}

// Integrated form F'''(x) - F'''(-x0) = int (F - F^(1/3)). Quadrature across
// the cusp of F^(1/3) at each zero costs about 1e-4.
TEST(Pme4, ProfileSolvesIntegratedOde) {
    for (int k : {0, 3}) {
        const auto& F = pme(k).profile;
        std::vector<double> rhs;
        for (double v : F.values) rhs.push_back(v - std::cbrt(v));
        const auto& f3 = F.derivative(3);
        double worst = 0;
        for (std::size_t i = 200; i < F.size(); i += 250) {
            const std::vector<double> xs(F.xs.begin(), F.xs.begin() + static_cast<long>(i) + 1);
            const std::vector<double> ys(rhs.begin(), rhs.begin() + static_cast<long>(i) + 1);
            worst = std::max(worst, std::fabs(f3[i] - f3[0] - simpson(xs, ys)));
        }
        EXPECT_LT(worst, 1e-3) << k;
    }
}

TEST(Tfe4, InterfaceLocationAndExponent) {
    const auto r = tfe4_shoot();
    ASSERT_TRUE(r.converged) << r.diagnostic;
    EXPECT_NEAR(r.parameters.at("x0"), 2.80337, 2e-4);
    EXPECT_NEAR(r.parameters.at("interface_exponent"), 2.0, 0.05);
    for (double v : r.profile.values) EXPECT_GE(v, 0.0);
    EXPECT_EQ(r.profile.values.back(), 0.0);
}

TEST(Tfe4, RobustToMatchingDistance) {
    Tfe4Options o;
    o.delta_factor = 3e-4;
    const auto a = tfe4_shoot(), b = tfe4_shoot({2.83, 1.0}, o);
    ASSERT_TRUE(a.converged && b.converged);
    EXPECT_NEAR(a.parameters.at("x0"), b.parameters.at("x0"), 2e-3);
}

TEST(Nde, InterfaceLaw) {
    const auto r = nde_div_shoot();
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.parameters.at("interface_exponent"), 4.0, 0.05);
    EXPECT_NEAR(r.parameters.at("interface_coefficient"), std::pow(24.0, -4.0 / 3.0), 0.02 * std::pow(24.0, -4.0 / 3.0));
    EXPECT_NO_THROW(r.profile.validate());
    for (double v : r.profile.values) EXPECT_GE(v, 0.0);
}

TEST(Nde, ZeroAmplitudeGivesZeroProfile) {
    const auto r = nde_div_shoot(0.0);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.profile.max_abs(), 0.0);
}

// Independent oracle: finite-difference clamped beam with ghost points,
// psi'''' = mu^4 psi, psi = psi' = 0 at both ends.
TEST(Clamped, EigenvaluesMatchFiniteDifferenceBeam) {
    const double R = 1.0;
    const int n = 400;
    const double h = 2 * R / n;
    const int m = n - 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        A(i, i) = 6;
        if (i >= 1) A(i, i - 1) = -4;
        if (i + 1 < m) A(i, i + 1) = -4;
        if (i >= 2) A(i, i - 2) = 1;
        if (i + 2 < m) A(i, i + 2) = 1;
    }
    A(0, 0) += 1;
    A(m - 1, m - 1) += 1;
    A /= std::pow(h, 4);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    const auto lam = ls_eigenvalues(R, 5);
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(es.eigenvalues()(k), -lam[static_cast<std::size_t>(k)], 2e-3 * -lam[static_cast<std::size_t>(k)]) << k;
}

TEST(Clamped, RootsAndScaling) {
    for (int k = 1; k <= 6; ++k) {
        const double mu = clamped_mu(k, 2.5);
        EXPECT_NEAR(std::cos(5 * mu) * std::cosh(5 * mu), 1.0, 1e-9 * std::cosh(5 * mu));
        EXPECT_NEAR(clamped_mu(k, 5.0), mu / 2, 1e-13);
    }
    EXPECT_NEAR(2 * clamped_mu(1, 1.0), 4.730040744862704, 1e-12);
    EXPECT_THROW(clamped_mu(0, 1.0), std::invalid_argument);
    EXPECT_THROW(ls_category(-1.0), std::invalid_argument);
}

TEST(Category, MatchesIndependentRootCount) {
    for (double R : {0.7, 3.3, 10.1, 25.4, 61.0}) {
        auto g = [R](double mu) { return std::cos(2 * mu * R) * std::cosh(2 * mu * R) - 1; };
        int count = 0;
        const auto mus = linspace(0.05 / R, 1.0, 200000);
        for (std::size_t i = 1; i < mus.size(); ++i)
            if ((g(mus[i - 1]) < 0) != (g(mus[i]) < 0)) ++count;
        EXPECT_EQ(ls_category(R), count) << R;
    }
}

TEST(Classify, SyntheticSignature) {
    std::vector<double> v = {0.5};
    auto osc = [&v](double a, double b, int crossings) {
        for (int i = 0; i < crossings; ++i) v.push_back(i % 2 == 0 ? b : a);
    };
    osc(0.5, 1.5, 4);
    v.push_back(-0.5);
    osc(-0.5, -1.5, 4);
    v.push_back(0.5);
    osc(0.5, 1.5, 2);
    v.push_back(-0.5);
    v.push_back(0.5);
    osc(0.5, 1.5, 4);
    v.push_back(-0.5);
    osc(-0.5, -1.5, 4);
    v.push_back(0.5);
    osc(0.5, 1.5, 8);
    const auto mi = classify_pattern(polyline(v));
    EXPECT_EQ(mi.str(), "{+4,1,-4,1,+2,2,+4,1,-4,1,+8}");
}

TEST(Classify, TailZerosAreDropped) {
    const auto mi = classify_pattern(polyline({-0.3, 0.3, -0.3, 0.5, 1.5, 0.5, -0.3, 0.3}));
    EXPECT_EQ(mi.str(), "{+2}");
}

TEST(Classify, TangentialCrossingIsAmbiguous) {
    SampledProfile p;
    p.xs = linspace(-1, 1, 2000);
    for (double x : p.xs) p.values.push_back(1 + x * x * x);
    EXPECT_THROW(classify_pattern(p), AmbiguousCrossingError);
}
