#ifndef BLOWUP_SELFSIM_HPP
#define BLOWUP_SELFSIM_HPP

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jet.hpp"
#include "numcore.hpp"
#include "profiles.hpp"

namespace blowup {

struct ShootingError : Error {
    using Error::Error;
};
struct AmbiguousCrossingError : Error {
    using Error::Error;
};

struct ShootingResult {
    SampledProfile profile;
    std::map<std::string, double> parameters;
    double objective_residual = 0;
    bool converged = false;
    std::vector<double> sign_changes;
    std::string diagnostic;
};

// ---------------------------------------------------------------------------
// Zmitrenko-Kurdyumov profile

inline SampledProfile zk_profile(int grid_points) {
    if (grid_points < 3) throw std::invalid_argument("zk_profile: grid_points must be >= 3");
    const double half = 1.5 * M_PI, amp = std::sqrt(3.0) / 2;
    SampledProfile p;
    p.xs = linspace(-half, half, static_cast<std::size_t>(grid_points));
    p.derivative_values.assign(2, {});
    for (double x : p.xs) {
        const double c = std::cos(x / 3), s = std::sin(x / 3);
        p.values.push_back(amp * c);
        p.derivative_values[0].push_back(-amp * s / 3);
        p.derivative_values[1].push_back(-amp * c / 9);
    }
    p.values.front() = p.values.back() = 0.0;
    p.support = std::make_pair(-half, half);
    p.metadata["support_half_width"] = half;
    return p;
}

// ---------------------------------------------------------------------------
// Sign changes and lobes

struct Lobe {
    std::size_t begin, end;  // [begin, end) sample range
    int sign;
    double peak;
};

// Sign changes of sampled data (zero samples are skipped), located by linear
// interpolation.
inline std::vector<double> sign_changes(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::vector<double> out;
    std::optional<std::size_t> last;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        if (ys[i] == 0.0) continue;
        if (last && (ys[*last] < 0) != (ys[i] < 0)) {
            const double a = ys[*last], b = ys[i];
            out.push_back(xs[*last] + (xs[i] - xs[*last]) * a / (a - b));
        }
        last = i;
    }
    return out;
}

inline std::vector<Lobe> lobes(const std::vector<double>& ys) {
    std::vector<Lobe> out;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        if (ys[i] == 0.0) continue;
        const int s = ys[i] > 0 ? 1 : -1;
        if (out.empty() || out.back().sign != s) out.push_back({i, i + 1, s, 0.0});
        out.back().end = i + 1;
        out.back().peak = std::max(out.back().peak, std::fabs(ys[i]));
    }
    return out;
}

// Zeros separating consecutive dominant lobes of opposite sign; a lobe is
// dominant when its peak reaches `fraction` of the global maximum.
inline std::vector<double> dominant_zeros(const SampledProfile& F, double fraction = 0.1) {
    auto ls = lobes(F.values);
    const double big = F.max_abs();
    std::vector<Lobe> dom;
    for (const auto& l : ls)
        if (l.peak >= fraction * big) dom.push_back(l);
    std::vector<double> out;
    for (std::size_t k = 1; k < dom.size(); ++k) {
        if (dom[k].sign == dom[k - 1].sign) continue;
        const std::size_t i = dom[k - 1].end - 1, j = dom[k].begin;
        // Zero nearest the midpoint between the two lobes' boundary samples.
        std::vector<double> sx(F.xs.begin() + static_cast<long>(i), F.xs.begin() + static_cast<long>(j) + 1);
        std::vector<double> sy(F.values.begin() + static_cast<long>(i), F.values.begin() + static_cast<long>(j) + 1);
        auto z = sign_changes(sx, sy);
        out.push_back(z.empty() ? 0.5 * (F.xs[i] + F.xs[j]) : z[z.size() / 2]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// PME-4 patterns: F'''' = F - |F|^(-2/3) F

enum class Symmetry { even, odd };

inline const char* to_string(Symmetry s) { return s == Symmetry::even ? "even" : "odd"; }

namespace detail {

inline double signed_cbrt(double v) { return std::cbrt(v); }

inline void pme_field(double, const State& y, State& dy) {
    dy[0] = y[1];
    dy[1] = y[2];
    dy[2] = y[3];
    dy[3] = y[0] - signed_cbrt(y[0]);
}

// Near the interface F = z^6 phi(ln z), z = x0 - x, with
// (D+3)(D+4)(D+5)(D+6) phi = -|phi|^(1/3) sgn phi, D = d/ds. The attracting
// periodic orbit of this equation describes the oscillatory tail.
inline void interface_field(double, const State& y, State& dy) {
    dy[0] = y[1];
    dy[1] = y[2];
    dy[2] = y[3];
    dy[3] = -signed_cbrt(y[0]) - 18 * y[3] - 119 * y[2] - 342 * y[1] - 360 * y[0];
}

struct InterfaceOrbit {
    State base;  // state at an upward zero crossing of phi
    double period = 0;
};

inline const InterfaceOrbit& interface_orbit() {
    static const InterfaceOrbit orbit = [] {
        IvpControls c{1e-12, 1e-16};
        c.max_step = 0.01;
        auto tr = integrate_ivp(interface_field, {1e-3, 0, 0, 0}, 0.0, 80.0, c);
        if (!tr.ok()) throw ShootingError("interface orbit: integration failed");
        std::vector<std::size_t> up;
        for (std::size_t i = 0; i + 1 < tr.size(); ++i)
            if (tr.y[i][0] < 0 && tr.y[i + 1][0] >= 0) up.push_back(i);
        if (up.size() < 3) throw ShootingError("interface orbit: no periodic regime reached");
        auto crossing = [&tr](std::size_t i) {
            return find_root([&tr](double s) { return tr.at(s)[0]; }, {tr.t[i], tr.t[i + 1]}, 1e-14);
        };
        const std::size_t i0 = up[up.size() - 3], i1 = up[up.size() - 2];
        const double s0 = crossing(i0), s1 = crossing(i1);
        auto seg = integrate_ivp(interface_field, tr.y[i0], tr.t[i0], s0, {1e-13, 1e-18});
        return InterfaceOrbit{seg.back(), s1 - s0};
    }();
    return orbit;
}

// (phi, D phi, D^2 phi, D^3 phi) at orbit phase theta.
inline State orbit_state(double theta) {
    const auto& o = interface_orbit();
    double t = std::fmod(theta, o.period);
    if (t < 0) t += o.period;
    if (t == 0) return o.base;
    return integrate_ivp(interface_field, o.base, 0.0, t, {1e-12, 1e-18}).back();
}

// x-state (F, F', F'', F''') at x = x0 - z, phase measured at z.
inline State interface_state(double z, double theta) {
    State ph = orbit_state(theta);
    State d4(4);
    interface_field(0, ph, d4);
    std::vector<double> v = {ph[0], ph[1], ph[2], ph[3], d4[3]};
    auto apply = [](double m, const std::vector<double>& u) {
        std::vector<double> r(u.size() - 1);
        for (std::size_t i = 0; i + 1 < u.size(); ++i) r[i] = u[i + 1] + m * u[i];
        return r;
    };
    auto j6 = apply(6, v), j56 = apply(5, j6), j456 = apply(4, j56);
    const double F = std::pow(z, 6) * v[0], Fz = std::pow(z, 5) * j6[0];
    const double Fzz = std::pow(z, 4) * j56[0], Fzzz = std::pow(z, 3) * j456[0];
    return {F, -Fz, Fzz, -Fzzz};
}

}  // namespace detail

struct Pme4Options {
    std::optional<double> x0_hint;  // scan x0 in hint +- 1 when given
    double x0_scan_lo = 3.0, x0_scan_hi = 20.0, x0_scan_step = 0.25;
    int phase_samples = 8;
    double delta = 0.01;
    double tol = 1e-9;
    int max_iter = 60;
    double envelope_eps = 1e-8;
    int samples = 2000;
};

// Regression presets for the first four patterns F_k.
struct Pme4Pattern {
    Symmetry symmetry;
    double a, b;
    double x0_hint;
};

inline Pme4Pattern pme4_pattern(int k) {
    switch (k) {
        case 0: return {Symmetry::even, 1.568, -0.523, 7.0};
        case 1: return {Symmetry::odd, 0.789, 0.0, 9.0};
        case 2: return {Symmetry::even, 1.508, -0.570, 11.0};
        case 3: return {Symmetry::odd, 1.303, -0.424, 12.0};
        default: throw std::invalid_argument("pme4_pattern: presets exist for k = 0..3");
    }
}

namespace detail {

inline State pme_start(Symmetry s, double a, double b) {
    return s == Symmetry::even ? State{a, 0, b, 0} : State{0, a, 0, b};
}

// Mismatch at xm between the outward shot from 0 and the inward shot from
// the interface; unknowns u = (a, b, x0, theta).
inline State pme_mismatch(Symmetry sym, const State& u, double xm, double delta) {
    const State bad(4, 1e3);
    const double x0 = u[2];
    if (!(x0 - delta > xm)) return bad;
    auto out = integrate_ivp(pme_field, pme_start(sym, u[0], u[1]), 0.0, xm, {1e-12, 1e-15});
    auto in = integrate_ivp(pme_field, interface_state(delta, u[3]), x0 - delta, xm, {1e-12, 1e-17});
    if (!out.ok() || !in.ok()) return bad;
    State r(4);
    for (int i = 0; i < 4; ++i) r[static_cast<std::size_t>(i)] = out.back()[static_cast<std::size_t>(i)] -
                                                             in.back()[static_cast<std::size_t>(i)];
    return r;
}

inline double l2(const State& v) {
    double s = 0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
}

}  // namespace detail

// Two-sided shooting: outward from the symmetry point with unknowns
// (F(0), F''(0)) or (F'(0), F'''(0)), inward from the interface along the
// oscillatory orbit with unknowns (x0, phase), matched at the midpoint.
inline ShootingResult pme4_shoot(Symmetry sym, std::pair<double, double> guess, const Pme4Options& opt = {}) {
    const double period = detail::interface_orbit().period;
    std::vector<double> x0s;
    if (opt.x0_hint) {
        for (int i = 0; i <= 8; ++i) x0s.push_back(*opt.x0_hint - 1.0 + 0.25 * i);
    } else {
        for (double x = opt.x0_scan_lo; x <= opt.x0_scan_hi + 1e-12; x += opt.x0_scan_step) x0s.push_back(x);
    }
    double best = std::numeric_limits<double>::infinity(), bx = x0s.front(), bt = 0;
    for (double x0 : x0s) {
        const double xm = 0.5 * (opt.x0_hint ? *opt.x0_hint : x0);
        for (int k = 0; k < opt.phase_samples; ++k) {
            const double th = period * k / opt.phase_samples;
            const double r = detail::l2(detail::pme_mismatch(sym, {guess.first, guess.second, x0, th}, xm, opt.delta));
            if (r < best) best = r, bx = x0, bt = th;
        }
    }
    const double xm = 0.5 * (opt.x0_hint ? *opt.x0_hint : bx);
    auto rep = newton_fd([&](const State& u) { return detail::pme_mismatch(sym, u, xm, opt.delta); },
                         {guess.first, guess.second, bx, bt}, opt.tol, opt.max_iter);
    const double a = rep.x[0], b = rep.x[1], x0 = rep.x[2], theta = rep.x[3];

    ShootingResult res;
    res.objective_residual = rep.residual;
    res.parameters = {{sym == Symmetry::even ? "F0" : "F1_0", a},
                      {sym == Symmetry::even ? "F2_0" : "F3_0", b},
                      {"x0", x0},
                      {"theta", theta},
                      {"newton_iterations", rep.iterations}};

    // Half-line samples on [0, x0], then reflection.
    std::vector<double> hx;
    std::vector<State> hy;
    if (x0 - opt.delta > xm) {
        auto out = integrate_ivp(detail::pme_field, detail::pme_start(sym, a, b), 0.0, xm, {1e-12, 1e-15});
        auto in = integrate_ivp(detail::pme_field, detail::interface_state(opt.delta, theta), x0 - opt.delta, xm,
                                {1e-11, 1e-16});
        for (double x : linspace(0.0, xm, static_cast<std::size_t>(opt.samples))) {
            hx.push_back(x);
            hy.push_back(out.at(x));
        }
        auto inner = linspace(xm, x0 - opt.delta, static_cast<std::size_t>(2 * opt.samples));
        for (std::size_t i = 1; i < inner.size(); ++i) {
            hx.push_back(inner[i]);
            hy.push_back(in.at(inner[i]));
        }
        auto zz = geomspace(opt.delta, 1e-6, 300);
        for (std::size_t i = 1; i < zz.size(); ++i) {
            hx.push_back(x0 - zz[i]);
            hy.push_back(detail::interface_state(zz[i], theta + std::log(zz[i] / opt.delta)));
        }
        hx.push_back(x0);
        hy.push_back(State(4, 0.0));
    }
    SampledProfile& p = res.profile;
    p.derivative_values.assign(3, {});
    const double par = sym == Symmetry::even ? 1.0 : -1.0;
    for (std::size_t i = hx.size(); i-- > 1;) {
        p.xs.push_back(-hx[i]);
        double s = par;
        p.values.push_back(s * hy[i][0]);
        for (int k = 1; k <= 3; ++k) {
            s = -s;
            p.derivative_values[static_cast<std::size_t>(k - 1)].push_back(s * hy[i][static_cast<std::size_t>(k)]);
        }
    }
    for (std::size_t i = 0; i < hx.size(); ++i) {
        p.xs.push_back(hx[i]);
        p.values.push_back(hy[i][0]);
        for (int k = 1; k <= 3; ++k)
            p.derivative_values[static_cast<std::size_t>(k - 1)].push_back(hy[i][static_cast<std::size_t>(k)]);
    }
    if (p.xs.empty()) {
        res.diagnostic = "interface fell inside the matching point";
        return res;
    }
    p.support = std::make_pair(-x0, x0);
    p.metadata = {{"x0", x0}, {"theta", theta}, {"period", period}};
    res.sign_changes = sign_changes(p.xs, p.values);

    // Compact-support proxy: decreasing lobe peaks in the tail, final peak below eps.
    auto ls = lobes(std::vector<double>(p.values.begin() + static_cast<long>(p.xs.size() / 2), p.values.end()));
    bool decreasing = ls.size() >= 3;
    for (std::size_t k = ls.size() >= 4 ? ls.size() - 3 : 1; k < ls.size(); ++k)
        decreasing = decreasing && ls[k].peak < ls[k - 1].peak;
    const bool small = !ls.empty() && ls.back().peak < opt.envelope_eps;
    res.converged = rep.converged && decreasing && small;
    if (!rep.converged) res.diagnostic = "newton did not reach tolerance";
    else if (!(decreasing && small)) res.diagnostic = "tail envelope not decaying below epsilon";
    return res;
}

// ---------------------------------------------------------------------------
// TFE-4 interface shooting: (F^2 F''')' = F^3 - F, even profile

struct Tfe4Options {
    double delta_factor = 1e-4;  // delta = factor * x0 guess
    double tol = 1e-10;
    int max_iter = 40;
    double floor = 1e-12;
    int samples = 2001;
    double fit_lo = 3e-4, fit_hi = 1e-2;
};

namespace detail {

// F = z^2 N(ln z)/sqrt(3), N = M - (7/12) ln M / M, M = sqrt(-ln z + C):
// two-term interface expansion of the thin-film profile; returns the jet
// (F, dF/dz, d2F/dz2) at z.
inline Jet tfe_series(double z, double C) {
    Jet zz = Jet::variable(z, 2);
    Jet M = sqrt(C - log(zz));
    Jet N = M - (7.0 / 12.0) * log(M) / M;
    return zz * zz * N / std::sqrt(3.0);
}

inline void tfe_field(double, const State& y, State& dy) {
    dy[0] = y[1];
    dy[1] = y[2];
    dy[2] = y[3] / (y[0] * y[0]);
    dy[3] = y[0] * y[0] * y[0] - y[0];
}

struct TfeRun {
    Trajectory tr;
    bool reached_origin = false;
};

inline TfeRun tfe_run(double x0, double C, double delta, double floor) {
    if (!(x0 > delta) || !(C - std::log(delta) > 1.0)) return {};
    const Jet s = tfe_series(delta, C);
    // I(x) = int_{x0}^{x} (F^3 - F) dx' = int_0^z (F - F^3) dz.
    auto zz = linspace(0.0, delta, 2001);
    std::vector<double> g(zz.size(), 0.0);
    for (std::size_t i = 1; i < zz.size(); ++i) {
        const double F = tfe_series(zz[i], C).value();
        g[i] = F - F * F * F;
    }
    const State y0 = {s.value(), -s.derivative(1), s.derivative(2), trapezoid(zz, g)};
    TfeRun r;
    r.tr = integrate_ivp(tfe_field, y0, x0 - delta, 0.0, {1e-11, 1e-14},
                         [floor](double, const State& y) { return y[0] <= floor; });
    r.reached_origin = r.tr.status == IvpStatus::ok;
    return r;
}

}  // namespace detail

inline ShootingResult tfe4_shoot(std::pair<double, double> guess = {2.83, 1.0}, const Tfe4Options& opt = {}) {
    const double delta = opt.delta_factor * guess.first;
    std::optional<double> failure_at;
    auto objective = [&](const State& u) -> State {
        auto r = detail::tfe_run(u[0], u[1], delta, opt.floor);
        if (!r.reached_origin) {
            if (!r.tr.t.empty()) failure_at = r.tr.t.back();
            return {1e3, 1e3};
        }
        const State& y = r.tr.back();
        return {y[1], y[3] / (y[0] * y[0])};
    };
    auto rep = newton_fd(objective, {guess.first, guess.second}, opt.tol, opt.max_iter);
    const double x0 = rep.x[0], C = rep.x[1];
    ShootingResult res;
    res.objective_residual = rep.residual;
    res.parameters = {{"x0", x0}, {"C", C}, {"delta", delta}, {"newton_iterations", rep.iterations}};
    auto run = detail::tfe_run(x0, C, delta, opt.floor);
    if (!run.reached_origin) {
        res.diagnostic = "F reached zero in the interior";
        if (!run.tr.t.empty()) res.diagnostic += " at x=" + std::to_string(run.tr.t.back());
        return res;
    }
    SampledProfile& p = res.profile;
    p.derivative_values.assign(3, {});
    auto push = [&p](double x, const State& y) {
        p.xs.push_back(x);
        p.values.push_back(y[0]);
        p.derivative_values[0].push_back(y[1]);
        p.derivative_values[1].push_back(y[2]);
        p.derivative_values[2].push_back(y[3] / (y[0] * y[0]));
    };
    const double edge = std::min(0.05, 0.5 * (x0 - delta));
    for (double x : linspace(0.0, x0 - edge, static_cast<std::size_t>(opt.samples))) push(x, run.tr.at(x));
    for (double z : geomspace(edge, delta, 400))
        if (z < edge) push(x0 - z, run.tr.at(x0 - z));
    for (double z : geomspace(delta, 1e-12, 200)) {
        if (z == delta) continue;
        Jet s3 = Jet::variable(z, 3);
        Jet M = sqrt(C - log(s3));
        Jet F = s3 * s3 * (M - (7.0 / 12.0) * log(M) / M) / std::sqrt(3.0);
        p.xs.push_back(x0 - z);
        p.values.push_back(F.value());
        p.derivative_values[0].push_back(-F.derivative(1));
        p.derivative_values[1].push_back(F.derivative(2));
        p.derivative_values[2].push_back(-F.derivative(3));
    }
    p.xs.push_back(x0);
    p.values.push_back(0.0);
    for (auto& d : p.derivative_values) d.push_back(0.0);
    p.support = std::make_pair(0.0, x0);
    // F ~ a z^p |ln z|^q near the interface, fitted in X = 1/z so ln ln X is defined.
    std::vector<double> X, Fz;
    for (double z : geomspace(opt.fit_lo, opt.fit_hi, 200)) {
        X.push_back(1.0 / z);
        Fz.push_back(run.tr.at(x0 - z)[0]);
    }
    const auto fit = fit_power_log(X, Fz, FitModel::power_times_log);
    res.parameters["interface_exponent"] = -fit.exponent;
    res.parameters["interface_log_power"] = fit.log_exponent;
    p.metadata = {{"x0", x0}, {"C", C}, {"interface_exponent", -fit.exponent}, {"interface_log_power", fit.log_exponent}};
    double fmin = *std::min_element(p.values.begin(), p.values.end());
    res.converged = rep.converged && fmin >= 0;
    if (!rep.converged) {
        res.diagnostic = "newton did not reach tolerance";
        if (failure_at) res.diagnostic += "; last interior degeneracy at x=" + std::to_string(*failure_at);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Divergent NDE: F''' = F^(1/4) - F, single interface at -L0

struct NdeOptions {
    double delta = 1e-3;
    double x_max = 60.0;
    double fit_lo = 0.01, fit_hi = 0.3;
};

// amplitude_scale multiplies the interface series coefficient 24^(-4/3);
// 1 gives the free-boundary profile, 0 the trivial one.
inline ShootingResult nde_div_shoot(double amplitude_scale = 1.0, const NdeOptions& opt = {}) {
    const double a = amplitude_scale * std::pow(24.0, -4.0 / 3.0), d = opt.delta;
    ShootingResult res;
    res.parameters = {{"amplitude_scale", amplitude_scale}, {"series_coefficient", a}, {"delta", d}};
    SampledProfile& p = res.profile;
    p.derivative_values.assign(2, {});
    if (a == 0.0) {
        for (double x : linspace(0.0, opt.x_max, 2001)) {
            p.xs.push_back(x);
            p.values.push_back(0.0);
            p.derivative_values[0].push_back(0.0);
            p.derivative_values[1].push_back(0.0);
        }
        res.converged = true;
        res.diagnostic = "zero data";
        return res;
    }
    Field f = [](double, const State& y, State& dy) {
        dy[0] = y[1];
        dy[1] = y[2];
        dy[2] = (y[0] < 0 ? -1.0 : 1.0) * std::pow(std::fabs(y[0]), 0.25) - y[0];
    };
    auto tr = integrate_ivp(f, {a * std::pow(d, 4), 4 * a * std::pow(d, 3), 12 * a * d * d}, d, opt.x_max,
                            {1e-11, 1e-16}, [](double, const State& y) { return y[0] < 0; });
    if (!tr.ok()) {
        res.diagnostic = std::string("integration failed: ") + tr.message;
        return res;
    }
    double end = tr.t.back();
    if (tr.status == IvpStatus::stopped) {
        const std::size_t n = tr.size();
        end = find_root([&tr](double s) { return tr.at(s)[0]; }, {tr.t[n - 2], tr.t[n - 1]}, 1e-13);
        res.diagnostic = "F < 0 reached; profile truncated at the zero";
    }
    const double L0 = 0.5 * end;
    // Coordinates x = s - L0, interface at -L0.
    auto grid = geomspace(d, opt.fit_lo, 200);
    const auto rest = linspace(opt.fit_lo, end, 4001);
    for (std::size_t i = 1; i < rest.size(); ++i) grid.push_back(rest[i]);
    p.xs.push_back(-L0);
    p.values.push_back(0.0);
    p.derivative_values[0].push_back(0.0);
    p.derivative_values[1].push_back(0.0);
    for (double s : grid) {
        State y = tr.at(s);
        p.xs.push_back(s - L0);
        p.values.push_back(std::max(y[0], 0.0));
        p.derivative_values[0].push_back(y[1]);
        p.derivative_values[1].push_back(y[2]);
    }
    p.support = std::make_pair(-L0, end - L0);
    std::vector<double> zs, fs;
    for (double s : geomspace(opt.fit_lo, opt.fit_hi, 100)) {
        zs.push_back(s);
        fs.push_back(tr.at(s)[0]);
    }
    auto fit = fit_power_log(zs, fs, FitModel::pure_power);
    res.parameters["interface_exponent"] = fit.exponent;
    res.parameters["interface_coefficient"] = fit.coefficient;
    res.parameters["L0"] = L0;
    res.parameters["hump_end"] = end;
    res.objective_residual = 0;
    res.converged = true;
    p.metadata = {{"L0", L0}, {"interface_exponent", fit.exponent}, {"interface_coefficient", fit.coefficient}};
    return res;
}

// ---------------------------------------------------------------------------
// Variational diagnostics

// E(F) = -1/2 int F''^2 + 1/2 int F^2 - 3/4 int |F|^(4/3)
inline double ls_energy(const SampledProfile& F) {
    if (F.size() < 16) throw std::invalid_argument("ls_energy: grid too coarse (need >= 16 points)");
    auto f2 = F.derivative_or_estimate(2);
    std::vector<double> a(F.size()), b(F.size()), c(F.size());
    for (std::size_t i = 0; i < F.size(); ++i) {
        a[i] = f2[i] * f2[i];
        b[i] = F.values[i] * F.values[i];
        c[i] = std::pow(std::fabs(F.values[i]), 4.0 / 3.0);
    }
    return -0.5 * simpson(F.xs, a) + 0.5 * simpson(F.xs, b) - 0.75 * simpson(F.xs, c);
}

// Clamped-beam eigenvalue k >= 1 of -psi'''' = lambda psi on (-R, R):
// lambda = -mu^4 with cos(2 mu R) cosh(2 mu R) = 1, the k-th root lying in
// (k pi, (k+1) pi) in the variable 2 mu R.
inline double clamped_mu(int k, double R) {
    if (!(R > 0)) throw std::invalid_argument("clamped_mu: R must be positive");
    if (k < 1) throw std::invalid_argument("clamped_mu: k must be >= 1");
    auto g = [R](double mu) { return std::cos(2 * mu * R) - 1.0 / std::cosh(2 * mu * R); };
    const double lo = k * M_PI / (2 * R), hi = (k + 1) * M_PI / (2 * R);
    return find_root(g, {lo, hi}, 1e-15 * hi);
}

inline std::vector<double> ls_eigenvalues(double R, int count) {
    std::vector<double> out;
    for (int k = 1; k <= count; ++k) out.push_back(-std::pow(clamped_mu(k, R), 4));
    return out;
}

// Number of clamped eigenvalues above -1.
inline int ls_category(double R) {
    if (!(R > 0)) throw std::invalid_argument("ls_category: R must be positive");
    int n = 0;
    for (int k = 1; k * M_PI / (2 * R) < 1.0; ++k) {
        if (clamped_mu(k, R) < 1.0) ++n;
        else break;
    }
    return n;
}

// ---------------------------------------------------------------------------
// Pattern classification

struct MultiIndex {
    struct Entry {
        int count;
        bool is_signed;
    };
    std::vector<Entry> entries;

    std::string str() const {
        std::string s = "{";
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (i) s += ",";
            const auto& e = entries[i];
            if (e.is_signed && e.count > 0) s += "+";
            s += std::to_string(e.count);
        }
        return s + "}";
    }
    bool operator==(const MultiIndex& o) const {
        if (entries.size() != o.entries.size()) return false;
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (entries[i].count != o.entries[i].count || entries[i].is_signed != o.entries[i].is_signed)
                return false;
        return true;
    }
};

inline MultiIndex classify_pattern(const SampledProfile& F, double slope_tol = 1e-6) {
    struct Event {
        double x;
        int level;
    };
    std::vector<Event> ev;
    for (int level : {-1, 0, 1}) {
        std::optional<std::size_t> last;
        for (std::size_t i = 0; i < F.size(); ++i) {
            const double v = F.values[i] - level;
            if (v == 0.0) continue;
            if (last && (F.values[*last] - level < 0) != (v < 0)) {
                const double slope = (F.values[i] - F.values[*last]) / (F.xs[i] - F.xs[*last]);
                const double a = F.values[*last] - level;
                const double x = F.xs[*last] + (F.xs[i] - F.xs[*last]) * a / (a - v);
                if (std::fabs(slope) <= slope_tol)
                    throw AmbiguousCrossingError("classify_pattern: tangential crossing of level " +
                                                 std::to_string(level) + " near x=" + std::to_string(x));
                ev.push_back({x, level});
            }
            last = i;
        }
    }
    std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.x < b.x; });
    MultiIndex mi;
    int cur = 2;
    for (const auto& e : ev) {
        if (e.level != cur) {
            mi.entries.push_back({0, e.level != 0});
            cur = e.level;
        }
        mi.entries.back().count += e.level < 0 ? -1 : 1;
    }
    // Zero crossings before the first or after the last equilibrium visit are
    // tail oscillations, not part of the signature.
    while (!mi.entries.empty() && !mi.entries.front().is_signed) mi.entries.erase(mi.entries.begin());
    while (!mi.entries.empty() && !mi.entries.back().is_signed) mi.entries.pop_back();
    return mi;
}

}  // namespace blowup

#endif
