#ifndef BLOWUP_PROFILES_HPP
#define BLOWUP_PROFILES_HPP

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "numcore.hpp"

namespace blowup {

struct DegenerateEndpointError : Error {
    using Error::Error;
};
struct ConsistencyError : Error {
    using Error::Error;
};

struct SampledProfile {
    std::vector<double> xs;
    std::vector<double> values;
    // derivative_values[k-1] holds the k-th derivative; may be empty.
    std::vector<std::vector<double>> derivative_values;
    std::optional<std::pair<double, double>> support;
    std::map<std::string, double> metadata;

    std::size_t size() const { return xs.size(); }
    int max_derivative() const { return static_cast<int>(derivative_values.size()); }

    const std::vector<double>& derivative(int k) const {
        if (k == 0) return values;
        if (k < 0 || k > max_derivative()) throw std::out_of_range("SampledProfile: derivative not stored");
        return derivative_values[static_cast<std::size_t>(k - 1)];
    }

    // Stored derivative if present, otherwise a finite-difference estimate.
    std::vector<double> derivative_or_estimate(int k, int width = 7) const {
        if (k <= max_derivative()) return derivative(k);
        return derivative_on_grid(xs, values, k, std::max(width, k + 3));
    }

    void validate() const {
        if (xs.size() < 2 || xs.size() != values.size())
            throw std::invalid_argument("SampledProfile: need matching xs/values with at least 2 points");
        for (std::size_t i = 1; i < xs.size(); ++i)
            if (!(xs[i] > xs[i - 1])) throw std::invalid_argument("SampledProfile: xs must be strictly increasing");
        for (const auto& d : derivative_values)
            if (d.size() != xs.size()) throw std::invalid_argument("SampledProfile: derivative length mismatch");
        if (support) {
            const double tol = 1e-12 * (1 + std::fabs(xs.front()) + std::fabs(xs.back()));
            if (support->first < xs.front() - tol || support->second > xs.back() + tol ||
                support->first > support->second)
                throw std::invalid_argument("SampledProfile: support outside grid");
        }
    }

    double max_abs() const {
        double m = 0;
        for (double v : values) m = std::max(m, std::fabs(v));
        return m;
    }
};

// ---------------------------------------------------------------------------
// Linear stationary problems

enum class StationaryKind { RD2, RD4, RD6, NDE3 };

struct StationaryProblem {
    StationaryKind kind;
    int ode_order;
    std::vector<int> bc_left;
    std::vector<int> bc_right;
    const char* name;
};

inline StationaryProblem stationary_problem(StationaryKind k) {
    switch (k) {
        case StationaryKind::RD2: return {k, 2, {0}, {0}, "rd2"};
        case StationaryKind::RD4: return {k, 4, {0, 1}, {0, 1}, "rd4"};
        case StationaryKind::RD6: return {k, 6, {0, 1, 2}, {0, 1, 2}, "rd6"};
        case StationaryKind::NDE3: return {k, 3, {0, 1}, {0}, "nde3"};
    }
    throw std::invalid_argument("unknown stationary problem");
}

inline StationaryKind parse_stationary(const std::string& s) {
    if (s == "rd2" || s == "RD2") return StationaryKind::RD2;
    if (s == "rd4" || s == "RD4") return StationaryKind::RD4;
    if (s == "rd6" || s == "RD6") return StationaryKind::RD6;
    if (s == "nde3" || s == "NDE3") return StationaryKind::NDE3;
    throw std::invalid_argument("unknown stationary problem '" + s + "'");
}

// Real function given as Re sum c_j exp(m_j x).
struct ExpCombination {
    std::vector<std::pair<std::complex<double>, std::complex<double>>> terms;  // (m, c)

    double eval(double x, int k) const {
        std::complex<double> s = 0;
        for (const auto& [m, c] : terms) s += c * std::pow(m, k) * std::exp(m * x);
        return s.real();
    }
};

namespace detail {
using cd = std::complex<double>;

inline std::vector<ExpCombination> basis_for(StationaryKind k) {
    const cd i(0, 1);
    switch (k) {
        case StationaryKind::RD2:
            return {ExpCombination{{{i, 0.5}, {-i, 0.5}}}};  // cos x
        case StationaryKind::RD4:
            return {ExpCombination{{{i, 0.5}, {-i, 0.5}}},  // cos x
                    ExpCombination{{{1.0, 0.5}, {-1.0, 0.5}}}};  // cosh x
        case StationaryKind::RD6: {
            const double s = std::sqrt(3.0) / 2.0;
            const cd p(s, 0.5), q(s, -0.5);
            return {ExpCombination{{{i, 0.5}, {-i, 0.5}}},  // cos x
                    ExpCombination{{{p, 0.25}, {q, 0.25}, {-p, 0.25}, {-q, 0.25}}},  // cosh(sx) cos(x/2)
                    ExpCombination{{{p, 1.0 / (4.0 * i)},
                                    {q, -1.0 / (4.0 * i)},
                                    {-q, -1.0 / (4.0 * i)},
                                    {-p, 1.0 / (4.0 * i)}}}};  // sinh(sx) sin(x/2)
        }
        case StationaryKind::NDE3: {
            const cd m(0.5, std::sqrt(3.0) / 2.0);
            return {ExpCombination{{{-1.0, 1.0}}},  // e^{-x}
                    ExpCombination{{{m, 1.0}}},  // e^{x/2} cos(sqrt3 x/2)
                    ExpCombination{{{m, -i}}}};  // e^{x/2} sin(sqrt3 x/2)
        }
    }
    return {};
}

inline bool symmetric_problem(StationaryKind k) { return k != StationaryKind::NDE3; }

// Boundary-condition matrix: one row per condition, one column per basis
// function. Even problems only need the right end.
inline std::vector<std::vector<double>> bc_matrix(const StationaryProblem& p,
                                                  const std::vector<ExpCombination>& basis, double L) {
    std::vector<std::vector<double>> rows;
    auto add = [&](double x, int order) {
        std::vector<double> r;
        for (const auto& b : basis) r.push_back(b.eval(x, order));
        rows.push_back(r);
    };
    if (!symmetric_problem(p.kind))
        for (int o : p.bc_left) add(-L, o);
    for (int o : p.bc_right) add(L, o);
    return rows;
}

inline double det_small(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    double det = 1;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::fabs(a[i][k]) > std::fabs(a[p][k])) p = i;
        if (a[p][k] == 0) return 0;
        if (p != k) {
            std::swap(a[p], a[k]);
            det = -det;
        }
        det *= a[k][k];
        for (std::size_t i = k + 1; i < n; ++i) {
            double m = a[i][k] / a[k][k];
            for (std::size_t j = k; j < n; ++j) a[i][j] -= m * a[k][j];
        }
    }
    return det;
}
}  // namespace detail

// Boundary determinant whose first positive root is the threshold length.
inline double boundary_determinant(const StationaryProblem& p, double L) {
    return detail::det_small(detail::bc_matrix(p, detail::basis_for(p.kind), L));
}

inline double threshold_length(const StationaryProblem& p) {
    if (p.kind == StationaryKind::RD4) {
        // First positive root of tan L = -tanh L, which lies in (pi/2, pi).
        const double pi = std::numbers::pi;
        return find_root([](double L) { return std::tan(L) + std::tanh(L); }, {pi / 2 + 1e-3, pi - 1e-3}, 1e-15);
    }
    const double lo = 0.1, hi = 10.0;
    auto r = first_root_by_scan([&](double L) { return boundary_determinant(p, L); }, lo, hi, 0.01, 1e-15);
    if (!r)
        throw BracketError(std::string("threshold_length: no determinant root for ") + p.name + " in window (0.1, 10)");
    return *r;
}

enum class Normalization { value_at_origin, unit_C1 };

struct StationarySolution {
    StationaryProblem problem;
    double L0 = 0;
    std::vector<double> coefficients;
    std::vector<ExpCombination> basis;

    double eval(double x, int k = 0) const {
        double s = 0;
        for (std::size_t j = 0; j < basis.size(); ++j) s += coefficients[j] * basis[j].eval(x, k);
        return s;
    }

    SampledProfile sample(std::size_t n) const {
        detail::require(n >= 2, "StationarySolution::sample: need n >= 2");
        SampledProfile p;
        p.xs = linspace(-L0, L0, n);
        p.xs[(n - 1) / 2] = (n % 2 == 1) ? 0.0 : p.xs[(n - 1) / 2];
        p.values.resize(n);
        p.derivative_values.assign(static_cast<std::size_t>(problem.ode_order), std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            p.values[i] = eval(p.xs[i]);
            for (int k = 1; k <= problem.ode_order; ++k)
                p.derivative_values[static_cast<std::size_t>(k - 1)][i] = eval(p.xs[i], k);
        }
        p.support = std::make_pair(-L0, L0);
        return p;
    }

    // Residual of the linear ODE at x.
    double ode_residual(double x) const {
        switch (problem.kind) {
            case StationaryKind::RD2: return eval(x, 2) + eval(x);
            case StationaryKind::RD4: return -eval(x, 4) + eval(x);
            case StationaryKind::RD6: return eval(x, 6) + eval(x);
            case StationaryKind::NDE3: return eval(x, 3) + eval(x);
        }
        return 0;
    }
};

struct BoundaryLayer {
    int exponent;
    double coefficient;
};

namespace detail {
// Leading coefficient c of f ~ c d^k, d = distance into the domain, given
// derivative values at the endpoint.
inline std::optional<BoundaryLayer> leading_order(const std::vector<double>& derivs, bool right_end, double scale,
                                                  double window, double thr) {
    if (std::fabs(derivs[0]) > thr * scale) return std::nullopt;
    double fact = 1;
    for (std::size_t k = 1; k < derivs.size(); ++k) {
        fact *= static_cast<double>(k);
        double c = derivs[k] / fact * ((right_end && k % 2 == 1) ? -1.0 : 1.0);
        if (std::fabs(c) * std::pow(window, static_cast<double>(k)) > thr * scale)
            return BoundaryLayer{static_cast<int>(k), c};
    }
    return std::nullopt;
}
}  // namespace detail

// Returns the leading exponent k and the coefficient C1 of (distance)^k, where
// distance is measured into the domain (L - x at the right end, x - L at the
// left end).
inline BoundaryLayer boundary_layer_coefficient(const SampledProfile& profile, double endpoint) {
    profile.validate();
    const auto& xs = profile.xs;
    const std::size_t n = xs.size();
    const double span = xs.back() - xs.front();
    const bool right = std::fabs(endpoint - xs.back()) <= std::fabs(endpoint - xs.front());
    const double node = right ? xs.back() : xs.front();
    if (std::fabs(endpoint - node) > 1e-9 * (1 + span))
        throw std::invalid_argument("boundary_layer_coefficient: endpoint must be a grid end");
    const double scale = std::max(profile.max_abs(), 1e-300);
    const double window = 0.1 * span;
    const int max_order = 6;

    std::vector<double> derivs;
    bool analytic = profile.max_derivative() >= 1;
    if (analytic) {
        const std::size_t idx = right ? n - 1 : 0;
        derivs.push_back(profile.values[idx]);
        for (int k = 1; k <= profile.max_derivative(); ++k) derivs.push_back(profile.derivative(k)[idx]);
        auto lo = detail::leading_order(derivs, right, scale, window, 1e-8);
        if (lo) return *lo;
        if (profile.max_derivative() >= max_order)
            throw DegenerateEndpointError("boundary_layer_coefficient: no leading order up to stored derivatives");
    }
    // Local polynomial fit: one-sided finite-difference weights on the nodes
    // nearest the endpoint.
    const std::size_t w = std::min<std::size_t>(n, 12);
    std::vector<double> sx, sy;
    for (std::size_t j = 0; j < w; ++j) {
        std::size_t i = right ? n - 1 - j : j;
        sx.push_back(xs[i]);
        sy.push_back(profile.values[i]);
    }
    const int m = std::min<int>(max_order, static_cast<int>(w) - 2);
    auto wts = fd_weights(endpoint, sx, m);
    derivs.assign(static_cast<std::size_t>(m) + 1, 0.0);
    for (int k = 0; k <= m; ++k)
        for (std::size_t j = 0; j < w; ++j) derivs[static_cast<std::size_t>(k)] += wts[static_cast<std::size_t>(k)][j] * sy[j];
    auto lo = detail::leading_order(derivs, right, scale, window, 1e-6);
    if (!lo) throw DegenerateEndpointError("boundary_layer_coefficient: no clean leading order at endpoint");
    // Check that f ~ c d^k actually describes the nearby samples.
    double ss = 0;
    int cnt = 0;
    for (std::size_t j = 1; j < w; ++j) {
        double d = std::fabs(sx[j] - endpoint);
        if (d > 0.05 * span) break;
        double model = lo->coefficient * std::pow(d, lo->exponent);
        if (model == 0 || sy[j] == 0 || (model > 0) != (sy[j] > 0)) {
            ss += 1e6;
            ++cnt;
            continue;
        }
        double r = std::log(sy[j] / model);
        ss += r * r;
        ++cnt;
    }
    if (cnt > 0 && std::sqrt(ss / cnt) > 0.2)
        throw DegenerateEndpointError("boundary_layer_coefficient: local fit rms above threshold");
    return *lo;
}

inline StationarySolution stationary_solution(const StationaryProblem& p, Normalization norm = Normalization::value_at_origin) {
    StationarySolution s;
    s.problem = p;
    s.basis = detail::basis_for(p.kind);
    s.L0 = threshold_length(p);
    const auto mat = detail::bc_matrix(p, s.basis, s.L0);
    const std::size_t n = s.basis.size();
    if (n == 1) {
        s.coefficients = {1.0};
    } else {
        // Null vector with the first coefficient pinned to 1, once per dropped
        // row; the variants must agree.
        std::vector<std::vector<double>> candidates;
        for (std::size_t drop = 0; drop < mat.size(); ++drop) {
            std::vector<std::vector<double>> a;
            std::vector<double> b;
            for (std::size_t r = 0; r < mat.size(); ++r) {
                if (r == drop) continue;
                a.emplace_back(mat[r].begin() + 1, mat[r].end());
                b.push_back(-mat[r][0]);
            }
            try {
                auto v = solve_dense(a, b);
                v.insert(v.begin(), 1.0);
                candidates.push_back(v);
            } catch (const SingularMatrixError&) {
            }
        }
        if (candidates.empty()) throw ConsistencyError("stationary_solution: cannot extract null vector");
        for (const auto& c : candidates)
            for (std::size_t j = 0; j < n; ++j)
                if (std::fabs(c[j] - candidates[0][j]) > 1e-9 * (1 + std::fabs(candidates[0][j])))
                    throw ConsistencyError(std::string("stationary_solution: boundary relations disagree for ") + p.name);
        s.coefficients = candidates[0];
    }
    if (s.eval(0.0) < 0)
        for (double& c : s.coefficients) c = -c;
    if (norm == Normalization::unit_C1) {
        auto bl = boundary_layer_coefficient(s.sample(5), s.L0);
        for (double& c : s.coefficients) c /= bl.coefficient;
    }
    return s;
}

inline SampledProfile stationary_profile(const StationaryProblem& p, Normalization norm = Normalization::value_at_origin,
                                         std::size_t n = 2001) {
    auto s = stationary_solution(p, norm);
    auto prof = s.sample(n);
    auto bl = boundary_layer_coefficient(prof, s.L0);
    prof.metadata["L0"] = s.L0;
    prof.metadata["C"] = s.coefficients.size() > 1 ? s.coefficients[1] : 0.0;
    prof.metadata["C1"] = bl.coefficient;
    prof.metadata["boundary_exponent"] = bl.exponent;
    prof.metadata["f0"] = s.eval(0.0);
    for (std::size_t j = 0; j < s.coefficients.size(); ++j)
        prof.metadata["coef" + std::to_string(j)] = s.coefficients[j];
    return prof;
}

}  // namespace blowup

#endif
