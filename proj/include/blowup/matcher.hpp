#ifndef BLOWUP_MATCHER_HPP
#define BLOWUP_MATCHER_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "jet.hpp"
#include "logtw.hpp"
#include "models.hpp"
#include "numcore.hpp"
#include "profiles.hpp"

namespace blowup {

struct MatchingError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// First integrals of the separable ODEs

struct IdentityTrace {
    std::vector<double> xs;
    std::vector<double> identity_values;
    std::vector<double> polynomial_terms;  // identity minus its logarithmic/singular part
    double max_deviation = 0;
    double mean = 0;
    std::vector<double> skipped_xs;
    bool endpoint_contradiction = false;
};

namespace detail {

inline bool has_identity(ModelId id) { return id == ModelId::RD4 || id == ModelId::RD6 || id == ModelId::NDE3; }

}  // namespace detail

// RD4:  1/2 ln|th| + th''' th' - 1/2 th''^2 - 1/2 th^2
// RD6:  1/2 ln|th| - th^(5) th' + th^(4) th'' - 1/2 th'''^2 - 1/2 th^2
// NDE3: -1/(3 th) - th'' th' + int th''^2 - 1/2 th^2
// Each is constant along solutions of the separable ODE.
inline IdentityTrace nonexistence_identity(ModelId model, const SampledProfile& c) {
    if (!detail::has_identity(model))
        throw std::invalid_argument(std::string("nonexistence_identity: no identity for ") + to_string(model));
    c.validate();
    const int need = model == ModelId::RD6 ? 5 : (model == ModelId::RD4 ? 3 : 2);
    std::vector<std::vector<double>> d(static_cast<std::size_t>(need) + 1);
    for (int k = 0; k <= need; ++k) d[static_cast<std::size_t>(k)] = c.derivative_or_estimate(k);

    std::vector<double> int_d2sq;
    if (model == ModelId::NDE3) {
        std::vector<double> sq(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) sq[i] = d[2][i] * d[2][i];
        int_d2sq = cumulative_trapezoid(c.xs, sq);
    }

    IdentityTrace tr;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double t = d[0][i];
        if (t == 0.0 || !std::isfinite(t)) {
            tr.skipped_xs.push_back(c.xs[i]);
            continue;
        }
        double sing = 0, poly = 0;
        switch (model) {
            case ModelId::RD4:
                sing = 0.5 * std::log(std::fabs(t));
                poly = d[3][i] * d[1][i] - 0.5 * d[2][i] * d[2][i] - 0.5 * t * t;
                break;
            case ModelId::RD6:
                sing = 0.5 * std::log(std::fabs(t));
                poly = -d[5][i] * d[1][i] + d[4][i] * d[2][i] - 0.5 * d[3][i] * d[3][i] - 0.5 * t * t;
                break;
            default:
                sing = -1.0 / (3.0 * t);
                poly = -d[2][i] * d[1][i] + int_d2sq[i] - 0.5 * t * t;
                break;
        }
        tr.xs.push_back(c.xs[i]);
        tr.identity_values.push_back(sing + poly);
        tr.polynomial_terms.push_back(poly);
    }
    if (tr.xs.empty()) return tr;

    // Reference level from the interior 90% of the domain.
    const double a = c.xs.front(), b = c.xs.back(), edge = 0.05 * (b - a);
    double sum = 0, poly_max = 0;
    int n = 0;
    for (std::size_t i = 0; i < tr.xs.size(); ++i)
        if (tr.xs[i] > a + edge && tr.xs[i] < b - edge) {
            sum += tr.identity_values[i];
            poly_max = std::max(poly_max, std::fabs(tr.polynomial_terms[i]));
            ++n;
        }
    if (n == 0) {
        for (double v : tr.identity_values) sum += v;
        n = static_cast<int>(tr.identity_values.size());
    }
    tr.mean = sum / n;
    for (double v : tr.identity_values) tr.max_deviation = std::max(tr.max_deviation, std::fabs(v - tr.mean));

    bool bounded = true;
    for (std::size_t i = 0; i < tr.xs.size(); ++i) {
        if (tr.xs[i] > a + edge && tr.xs[i] < b - edge) continue;
        const double p = std::fabs(tr.polynomial_terms[i]);
        if (!std::isfinite(p) || p > 1e3 * (1 + poly_max)) bounded = false;
    }
    // Within 1e-3 of an end, the singular part must swing by more than 5
    // while the polynomial part moves by less than a tenth of that.
    bool diverges = false;
    for (double e : {a, b}) {
        double smin = INFINITY, smax = -INFINITY, pmin = INFINITY, pmax = -INFINITY;
        int cnt = 0;
        for (std::size_t i = 0; i < tr.xs.size(); ++i) {
            if (std::fabs(tr.xs[i] - e) > 1e-3 * (b - a)) continue;
            const double p = tr.polynomial_terms[i], s = tr.identity_values[i] - p;
            smin = std::min(smin, s);
            smax = std::max(smax, s);
            pmin = std::min(pmin, p);
            pmax = std::max(pmax, p);
            ++cnt;
        }
        if (cnt >= 2 && smax - smin > 5 && pmax - pmin < 0.1 * (smax - smin)) diverges = true;
    }
    tr.endpoint_contradiction = diverges && bounded;
    return tr;
}

// Sample f and its derivatives 1..order (computed with jets) on xs.
inline SampledProfile sample_function(const std::function<Jet(const Jet&)>& f, const std::vector<double>& xs,
                                      int order) {
    SampledProfile p;
    p.xs = xs;
    p.derivative_values.assign(static_cast<std::size_t>(order), {});
    for (double x : xs) {
        Jet j = f(Jet::variable(x, static_cast<std::size_t>(order)));
        p.values.push_back(j.value());
        for (int k = 1; k <= order; ++k) p.derivative_values[static_cast<std::size_t>(k - 1)].push_back(j.derivative(static_cast<std::size_t>(k)));
    }
    return p;
}

// A true solution of the RD4 separable ODE th'''' = th - 1/(2 th), started
// symmetric at x = 0 and integrated on [0, x_end] with the given tolerance.
inline SampledProfile manufactured_rd4(double theta0, double theta2, double x_end, double rel_tol) {
    Field f = [](double, const State& y, State& dy) {
        dy[0] = y[1];
        dy[1] = y[2];
        dy[2] = y[3];
        dy[3] = y[0] - 0.5 / y[0];
    };
    auto tr = integrate_ivp(f, {theta0, 0, theta2, 0}, 0.0, x_end, {rel_tol, rel_tol * 1e-2},
                            [](double, const State& y) { return !(y[0] > 0); });
    if (tr.status != IvpStatus::ok) throw ConvergenceError("manufactured_rd4: trajectory left theta > 0");
    SampledProfile p;
    p.derivative_values.assign(3, {});
    // Integrator nodes only, so no interpolation error enters the identity.
    for (std::size_t i = 0; i < tr.size(); ++i) {
        p.xs.push_back(tr.t[i]);
        p.values.push_back(tr.y[i][0]);
        for (int k = 1; k <= 3; ++k) p.derivative_values[static_cast<std::size_t>(k - 1)].push_back(tr.y[i][static_cast<std::size_t>(k)]);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Amplitude matching

enum class AmplitudeKind { none_self_similar, log_log };

inline const char* to_string(AmplitudeKind k) { return k == AmplitudeKind::log_log ? "log_log" : "none_self_similar"; }

struct AmplitudeLaw {
    AmplitudeKind kind = AmplitudeKind::none_self_similar;
    Rational exponent{0, 1};
    double coefficient = 1;
};

// Stationary problem whose boundary layer the log-TW must match.
inline std::optional<StationaryKind> matching_stationary(ModelId id) {
    switch (id) {
        case ModelId::RD2: return StationaryKind::RD2;
        case ModelId::RD4:
        case ModelId::QWE4: return StationaryKind::RD4;
        case ModelId::RD6: return StationaryKind::RD6;
        case ModelId::NDE3: return StationaryKind::NDE3;
        default: return std::nullopt;
    }
}

// The spatial factor (-eta)^p of the log-TW law matches the boundary layer
// (L0 - x)^p of the stationary profile; the remaining ln^q factor becomes the
// temporal amplitude [ln|ln(T-t)|]^q.
inline AmplitudeLaw predict_amplitude(ModelId id) {
    if (spec(id).divergent) return {};
    const auto kind = matching_stationary(id);
    if (!kind) throw MatchingError(std::string("predict_amplitude: no stationary problem for ") + to_string(id));
    const AsymptoticLaw law = logtw_law(id);
    const auto prof = stationary_profile(stationary_problem(*kind));
    const BoundaryLayer bl = boundary_layer_coefficient(prof, prof.support->second);
    if (!(Rational{bl.exponent, 1} == law.power))
        throw MatchingError(std::string("structural matching failed for ") + to_string(id) + ": log-TW power " +
                            law.power.str() + " vs boundary-layer exponent " + std::to_string(bl.exponent));
    return {AmplitudeKind::log_log, law.log_power, 1.0};
}

// ---------------------------------------------------------------------------
// Linearization near the endpoint

struct EulerRoots {
    std::vector<std::complex<double>> roots;
    bool has_complex_pair = false;
    // (a, b) for (L0 - x)^a sin(b ln(L0 - x)), one per conjugate pair.
    std::vector<std::pair<double, double>> oscillation;
};

// Roots of C1^2 m(m-1)(m-2)(m-3) + lambda = 0. With m = 3/2 + y the quartic
// is biquadratic: y^2 = 5/4 +- sqrt(1 - lambda/C1^2).
inline EulerRoots euler_indicial_roots(double C1, double lambda) {
    if (C1 == 0) throw std::invalid_argument("euler_indicial_roots: C1 must be nonzero");
    using cd = std::complex<double>;
    const cd disc = std::sqrt(cd(1.0 - lambda / (C1 * C1), 0.0));
    EulerRoots r;
    for (cd Y : {cd(1.25) - disc, cd(1.25) + disc}) {
        const cd y = std::sqrt(Y);
        r.roots.push_back(1.5 - y);
        r.roots.push_back(1.5 + y);
    }
    std::sort(r.roots.begin(), r.roots.end(), [](cd a, cd b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    for (const auto& m : r.roots)
        if (m.imag() > 0) {
            r.has_complex_pair = true;
            r.oscillation.emplace_back(m.real(), m.imag());
        }
    return r;
}

inline double hermite_spectrum(int k) {
    if (k < 0) throw std::invalid_argument("hermite_spectrum: k must be >= 0");
    return -k / 4.0;
}

struct PhiExpansion {
    double coefficient;  // of z^2 ln z
    double max_relative_residual;
    std::vector<std::string> free_constants{"A1", "A2", "A3", "A4"};
};

// Leading non-regular term of Phi near z = L0 - x = 0: Phi'''' must cancel
// the source -1/(C1 z^2), and (c z^2 ln z)'''' = -2c/z^2.
inline PhiExpansion phi_expansion(double C1) {
    if (!(C1 > 0)) throw std::invalid_argument("phi_expansion: C1 must be positive");
    const double c = -1.0 / (2.0 * C1);
    LogSeries s;
    s.add({c, 2, 1, 0});
    const LogSeries d4 = s.derivative(4);
    double worst = 0;
    for (double z : geomspace(1e-6, 1e-2, 41)) {
        const double source = -1.0 / (C1 * z * z);
        worst = std::max(worst, std::fabs(d4.eval(z) + source) / std::fabs(source));
    }
    return {c, worst};
}

struct TimeTrace {
    std::vector<double> taus;
    std::vector<double> s;
    std::vector<double> ratio;  // s / (tau ln tau - tau)
};

// s = int A^2 dtau along the samples (trapezoid).
inline TimeTrace reparameterize_time(const std::vector<double>& taus, const std::vector<double>& A) {
    if (taus.size() != A.size() || taus.size() < 2)
        throw std::invalid_argument("reparameterize_time: need matching samples (>= 2)");
    for (std::size_t i = 1; i < taus.size(); ++i)
        if (!(taus[i] > taus[i - 1])) throw std::invalid_argument("reparameterize_time: taus must be increasing");
    std::vector<double> a2(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) {
        if (!(A[i] > 0)) throw std::invalid_argument("reparameterize_time: A must be positive");
        a2[i] = A[i] * A[i];
    }
    TimeTrace t{taus, cumulative_trapezoid(taus, a2), {}};
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const double d = taus[i] * std::log(taus[i]) - taus[i];
        t.ratio.push_back(d != 0 ? t.s[i] / d : std::numeric_limits<double>::quiet_NaN());
    }
    return t;
}

struct AmplitudeOdeReport {
    double tau_max;
    double A_end;
    double ratio;  // A / sqrt(ln tau) at tau_max
    std::vector<double> taus, A, s, mu, mu_rate;  // mu = 1/(2A^2), mu_rate = |dmu/ds| / mu
};

// A' = exp(-A^2), A(1) = 1.
inline AmplitudeOdeReport amplitude_ode_check(double tau_max) {
    if (!(tau_max >= 1e3)) throw std::invalid_argument("amplitude_ode_check: tau_max must be >= 1e3");
    Field f = [](double, const State& y, State& dy) {
        dy[0] = std::exp(-y[0] * y[0]);
        dy[1] = y[0] * y[0];
    };
    auto tr = integrate_ivp(f, {1.0, 0.0}, 1.0, tau_max, {1e-12, 1e-14});
    if (!tr.ok()) throw ConvergenceError(std::string("amplitude_ode_check: ") + tr.message);
    AmplitudeOdeReport r;
    r.tau_max = tau_max;
    r.A_end = tr.back()[0];
    r.ratio = r.A_end / std::sqrt(std::log(tau_max));
    for (double t : geomspace(1.0, tau_max, 61)) {
        State y = tr.at(t);
        r.taus.push_back(t);
        r.A.push_back(y[0]);
        r.s.push_back(y[1]);
        r.mu.push_back(0.5 / (y[0] * y[0]));
        r.mu_rate.push_back(2.0 * std::exp(-y[0] * y[0]) / std::pow(y[0], 3));
    }
    return r;
}

}  // namespace blowup

#endif
