#ifndef BLOWUP_NUMCORE_HPP
#define BLOWUP_NUMCORE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace blowup {

using State = std::vector<double>;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BracketError : Error {
    using Error::Error;
};

struct ConvergenceError : Error {
    using Error::Error;
};

struct SingularMatrixError : Error {
    std::size_t pivot;
    SingularMatrixError(const std::string& what, std::size_t p) : Error(what), pivot(p) {}
};

namespace detail {
inline void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Root finding

struct Bracket {
    double lo;
    double hi;
};

// Bisection with secant acceleration. The secant candidate is used only when it
// falls strictly inside the current bracket and the bracket shrank enough on
// the previous step; otherwise we bisect.
template <class F>
double find_root(F&& f, Bracket b, double tol, int max_iter = 300) {
    detail::require(b.lo < b.hi, "find_root: bracket needs lo < hi");
    detail::require(tol > 0, "find_root: tol must be positive");
    double a = b.lo, c = b.hi;
    double fa = f(a), fc = f(c);
    if (!std::isfinite(fa) || !std::isfinite(fc))
        throw BracketError("find_root: non-finite value at bracket end");
    if (fa == 0.0) return a;
    if (fc == 0.0) return c;
    if ((fa < 0) == (fc < 0))
        throw BracketError("find_root: no sign change on [" + std::to_string(b.lo) + ", " +
                           std::to_string(b.hi) + "]");
    double prev_width = c - a;
    bool use_secant = true;
    for (int it = 0; it < max_iter; ++it) {
        double x = 0.5 * (a + c);
        if (use_secant) {
            double s = c - fc * (c - a) / (fc - fa);
            if (std::isfinite(s) && s > a && s < c) x = s;
        }
        double fx = f(x);
        if (!std::isfinite(fx)) throw ConvergenceError("find_root: non-finite value inside bracket");
        if (std::fabs(fx) <= tol || fx == 0.0) return x;
        if ((fx < 0) == (fa < 0)) {
            a = x;
            fa = fx;
        } else {
            c = x;
            fc = fx;
        }
        double width = c - a;
        if (width <= tol) return std::fabs(fa) < std::fabs(fc) ? a : c;
        use_secant = width < 0.5 * prev_width;
        prev_width = width;
    }
    throw ConvergenceError("find_root: iteration limit reached");
}

// Plain bisection to a bracket width; used where the answer must not depend on
// the function's scale.
template <class F>
double bisect(F&& f, Bracket b, double width_tol, int max_iter = 400) {
    double a = b.lo, c = b.hi;
    double fa = f(a), fc = f(c);
    if ((fa < 0) == (fc < 0) && fa != 0 && fc != 0)
        throw BracketError("bisect: no sign change");
    for (int it = 0; it < max_iter && c - a > width_tol; ++it) {
        double m = 0.5 * (a + c);
        double fm = f(m);
        if (fm == 0) return m;
        if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
        } else {
            c = m;
        }
    }
    return 0.5 * (a + c);
}

// Scan [lo, hi] with a fixed step and bisect the first sign change.
template <class F>
std::optional<double> first_root_by_scan(F&& f, double lo, double hi, double step, double tol) {
    double x0 = lo, f0 = f(x0);
    for (double x1 = lo + step; x1 <= hi + 1e-12; x1 += step) {
        double f1 = f(x1);
        if (f0 == 0) return x0;
        if ((f0 < 0) != (f1 < 0)) return bisect(f, {x0, x1}, tol);
        x0 = x1;
        f0 = f1;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Initial value problems: Dormand-Prince 5(4)

struct IvpControls {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double min_step = 1e-14;
    long max_steps = 1000000;

    void validate() const {
        detail::require(rel_tol > 0 && abs_tol > 0, "IvpControls: tolerances must be positive");
        detail::require(min_step > 0 && min_step <= max_step, "IvpControls: need 0 < min_step <= max_step");
        detail::require(max_steps >= 1, "IvpControls: max_steps >= 1");
    }
};

enum class IvpStatus { ok, stopped, step_underflow, non_finite, max_steps };

inline const char* to_string(IvpStatus s) {
    switch (s) {
        case IvpStatus::ok: return "ok";
        case IvpStatus::stopped: return "stopped";
        case IvpStatus::step_underflow: return "step_underflow";
        case IvpStatus::non_finite: return "non_finite";
        case IvpStatus::max_steps: return "max_steps";
    }
    return "?";
}

struct Trajectory {
    std::vector<double> t;
    std::vector<State> y;
    std::vector<State> dy;  // field values, for Hermite interpolation
    IvpStatus status = IvpStatus::ok;
    std::string message;

    bool ok() const { return status == IvpStatus::ok || status == IvpStatus::stopped; }
    const State& back() const { return y.back(); }
    std::size_t size() const { return t.size(); }

    // Cubic Hermite interpolation between stored steps.
    State at(double tq) const {
        const bool fwd = t.back() >= t.front();
        auto less = [fwd](double a, double b) { return fwd ? a < b : a > b; };
        if (!less(t.front(), tq)) return y.front();
        if (!less(tq, t.back())) return y.back();
        std::size_t hi = static_cast<std::size_t>(
            std::upper_bound(t.begin(), t.end(), tq, [&](double v, double e) { return less(v, e); }) -
            t.begin());
        std::size_t lo = hi - 1;
        double h = t[hi] - t[lo];
        double s = (tq - t[lo]) / h;
        double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
        double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
        State out(y[lo].size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = h00 * y[lo][i] + h10 * h * dy[lo][i] + h01 * y[hi][i] + h11 * h * dy[hi][i];
        return out;
    }
};

using Field = std::function<void(double, const State&, State&)>;
using StopPredicate = std::function<bool(double, const State&)>;

namespace detail {
inline double err_norm(const State& e, const State& y0, const State& y1, const IvpControls& c) {
    double s = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        double sc = c.abs_tol + c.rel_tol * std::max(std::fabs(y0[i]), std::fabs(y1[i]));
        double r = e[i] / sc;
        s += r * r;
    }
    return std::sqrt(s / static_cast<double>(e.size()));
}

inline bool all_finite(const State& y) {
    return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}
}  // namespace detail

// Adaptive embedded RK with PI step control. Integrates forward or backward in
// t; the returned trajectory holds every accepted step.
inline Trajectory integrate_ivp(const Field& field, const State& y0, double t0, double t1,
                                const IvpControls& ctl = {}, const StopPredicate& stop = {}) {
    ctl.validate();
    detail::require(!y0.empty(), "integrate_ivp: empty state");
    Trajectory tr;
    const std::size_t n = y0.size();
    State y = y0, f0(n);
    field(t0, y, f0);
    tr.t.push_back(t0);
    tr.y.push_back(y);
    tr.dy.push_back(f0);
    if (t1 == t0) return tr;
    if (!detail::all_finite(y) || !detail::all_finite(f0)) {
        tr.status = IvpStatus::non_finite;
        tr.message = "non-finite initial state";
        return tr;
    }
    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double span = std::fabs(t1 - t0);

    static constexpr double c2 = 1. / 5, c3 = 3. / 10, c4 = 4. / 5, c5 = 8. / 9;
    static constexpr double a21 = 1. / 5;
    static constexpr double a31 = 3. / 40, a32 = 9. / 40;
    static constexpr double a41 = 44. / 45, a42 = -56. / 15, a43 = 32. / 9;
    static constexpr double a51 = 19372. / 6561, a52 = -25360. / 2187, a53 = 64448. / 6561,
                            a54 = -212. / 729;
    static constexpr double a61 = 9017. / 3168, a62 = -355. / 33, a63 = 46732. / 5247,
                            a64 = 49. / 176, a65 = -5103. / 18656;
    static constexpr double b1 = 35. / 384, b3 = 500. / 1113, b4 = 125. / 192, b5 = -2187. / 6784,
                            b6 = 11. / 84;
    static constexpr double e1 = 71. / 57600, e3 = -71. / 16695, e4 = 71. / 1920,
                            e5 = -17253. / 339200, e6 = 22. / 525, e7 = -1. / 40;

    // Initial step guess (Hairer's heuristic).
    double h;
    {
        double d0 = 0, d1 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double sc = ctl.abs_tol + ctl.rel_tol * std::fabs(y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1 += (f0[i] / sc) * (f0[i] / sc);
        }
        d0 = std::sqrt(d0 / n);
        d1 = std::sqrt(d1 / n);
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h = std::min({h, span, ctl.max_step});
        h = std::max(h, ctl.min_step);
    }

    State k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), ynew(n), err(n);
    State& k1 = f0;
    double t = t0, err_prev = 1e-4;
    bool rejected_last = false;
    long steps = 0;
    while (true) {
        if (++steps > ctl.max_steps) {
            tr.status = IvpStatus::max_steps;
            tr.message = "step limit reached at t=" + std::to_string(t);
            return tr;
        }
        double remaining = std::fabs(t1 - t);
        bool last = false;
        if (h >= remaining) {
            h = remaining;
            last = true;
        }
        const double hs = dir * h;
        for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + hs * a21 * k1[i];
        field(t + c2 * hs, yt, k2);
        for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        field(t + c3 * hs, yt, k3);
        for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        field(t + c4 * hs, yt, k4);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        field(t + c5 * hs, yt, k5);
        for (std::size_t i = 0; i < n; ++i)
            yt[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        field(t + hs, yt, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        const double tnew = last ? t1 : t + hs;
        field(tnew, ynew, k7);
        for (std::size_t i = 0; i < n; ++i)
            err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);

        double en = detail::err_norm(err, y, ynew, ctl);
        if (!std::isfinite(en) || !detail::all_finite(ynew) || !detail::all_finite(k7)) {
            // Shrink and retry; give up only at min_step.
            if (h <= ctl.min_step) {
                tr.status = IvpStatus::non_finite;
                tr.message = "non-finite state near t=" + std::to_string(t);
                return tr;
            }
            h = std::max(0.1 * h, ctl.min_step);
            rejected_last = true;
            continue;
        }
        if (en <= 1.0) {
            t = tnew;
            y.swap(ynew);
            k1.swap(k7);
            tr.t.push_back(t);
            tr.y.push_back(y);
            tr.dy.push_back(k1);
            if (last) return tr;
            if (stop && stop(t, y)) {
                tr.status = IvpStatus::stopped;
                return tr;
            }
            double fac = std::pow(en, 0.17) * std::pow(err_prev, -0.04) / 0.9;
            fac = std::clamp(fac, 0.2, 10.0);
            double hn = h / fac;
            if (rejected_last) hn = std::min(hn, h);
            err_prev = std::max(en, 1e-4);
            h = std::min(hn, ctl.max_step);
            rejected_last = false;
        } else {
            h = h / std::min(10.0, std::pow(en, 0.2) / 0.9);
            rejected_last = true;
        }
        if (h < ctl.min_step) {
            tr.status = IvpStatus::step_underflow;
            tr.message = "step size underflow at t=" + std::to_string(t);
            return tr;
        }
    }
}

// ---------------------------------------------------------------------------
// Banded linear algebra

// Band storage: row i holds columns i-lower_bw .. i+upper_bw.
struct BandedMatrix {
    std::size_t n = 0;
    std::size_t lower_bw = 0;
    std::size_t upper_bw = 0;
    std::vector<double> entries;

    BandedMatrix() = default;
    BandedMatrix(std::size_t n_, std::size_t kl, std::size_t ku)
        : n(n_), lower_bw(kl), upper_bw(ku), entries(n_ * (kl + ku + 1), 0.0) {
        detail::require(n_ >= 1 && kl < n_ && ku < n_, "BandedMatrix: bandwidth must be < n");
    }

    std::size_t width() const { return lower_bw + upper_bw + 1; }
    bool in_band(std::size_t i, std::size_t j) const {
        return j + lower_bw >= i && j <= i + upper_bw;
    }
    double& at(std::size_t i, std::size_t j) {
        if (!in_band(i, j)) throw std::out_of_range("BandedMatrix: entry outside band");
        return entries[i * width() + (j + lower_bw - i)];
    }
    double get(std::size_t i, std::size_t j) const {
        return in_band(i, j) ? entries[i * width() + (j + lower_bw - i)] : 0.0;
    }

    State multiply(const State& x) const {
        State out(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t j0 = i >= lower_bw ? i - lower_bw : 0;
            std::size_t j1 = std::min(n - 1, i + upper_bw);
            double s = 0;
            for (std::size_t j = j0; j <= j1; ++j) s += get(i, j) * x[j];
            out[i] = s;
        }
        return out;
    }

    double norm_inf() const {
        double m = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0;
            for (std::size_t k = 0; k < width(); ++k) s += std::fabs(entries[i * width() + k]);
            m = std::max(m, s);
        }
        return m;
    }
};

// LU with partial pivoting restricted to the band. Row interchanges widen the
// upper band to lower_bw + upper_bw, as in LAPACK's gbtrf.
class BandLU {
public:
    explicit BandLU(const BandedMatrix& a) : n_(a.n), kl_(a.lower_bw), ku_(a.upper_bw + a.lower_bw) {
        w_ = kl_ + ku_ + 1;
        lu_.assign(n_ * w_, 0.0);
        piv_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            std::size_t j0 = i >= a.lower_bw ? i - a.lower_bw : 0;
            std::size_t j1 = std::min(n_ - 1, i + a.upper_bw);
            for (std::size_t j = j0; j <= j1; ++j) ref(i, j) = a.get(i, j);
        }
        const double scale = std::max(a.norm_inf(), std::numeric_limits<double>::min());
        for (std::size_t k = 0; k < n_; ++k) {
            std::size_t last = std::min(n_ - 1, k + kl_);
            std::size_t p = k;
            double best = std::fabs(ref(k, k));
            for (std::size_t i = k + 1; i <= last; ++i) {
                double v = std::fabs(ref(i, k));
                if (v > best) {
                    best = v;
                    p = i;
                }
            }
            if (best <= 64 * std::numeric_limits<double>::epsilon() * scale)
                throw SingularMatrixError("solve_banded: numerically singular at pivot " + std::to_string(k), k);
            piv_[k] = p;
            std::size_t jend = std::min(n_ - 1, k + ku_);
            if (p != k)
                for (std::size_t j = k; j <= jend; ++j) std::swap(ref(k, j), ref(p, j));
            const double d = ref(k, k);
            for (std::size_t i = k + 1; i <= last; ++i) {
                double m = ref(i, k) / d;
                ref(i, k) = m;
                if (m == 0) continue;
                for (std::size_t j = k + 1; j <= jend; ++j) ref(i, j) -= m * ref(k, j);
            }
        }
    }

    State solve(State b) const {
        detail::require(b.size() == n_, "BandLU::solve: size mismatch");
        for (std::size_t k = 0; k < n_; ++k) {
            if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
            std::size_t last = std::min(n_ - 1, k + kl_);
            for (std::size_t i = k + 1; i <= last; ++i) b[i] -= cref(i, k) * b[k];
        }
        for (std::size_t k = n_; k-- > 0;) {
            std::size_t jend = std::min(n_ - 1, k + ku_);
            double s = b[k];
            for (std::size_t j = k + 1; j <= jend; ++j) s -= cref(k, j) * b[j];
            b[k] = s / cref(k, k);
        }
        return b;
    }

private:
    double& ref(std::size_t i, std::size_t j) { return lu_[i * w_ + (j + kl_ - i)]; }
    double cref(std::size_t i, std::size_t j) const { return lu_[i * w_ + (j + kl_ - i)]; }

    std::size_t n_, kl_, ku_, w_;
    std::vector<double> lu_;
    std::vector<std::size_t> piv_;
};

inline State solve_banded(const BandedMatrix& a, const State& rhs) {
    detail::require(rhs.size() == a.n, "solve_banded: rhs size mismatch");
    return BandLU(a).solve(rhs);
}

// Dense Gaussian elimination with partial pivoting, for small systems.
inline State solve_dense(std::vector<std::vector<double>> a, State b) {
    const std::size_t n = b.size();
    detail::require(a.size() == n, "solve_dense: size mismatch");
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::fabs(a[i][k]) > std::fabs(a[p][k])) p = i;
        if (a[p][k] == 0.0) throw SingularMatrixError("solve_dense: singular at pivot " + std::to_string(k), k);
        std::swap(a[k], a[p]);
        std::swap(b[k], b[p]);
        for (std::size_t i = k + 1; i < n; ++i) {
            double m = a[i][k] / a[k][k];
            if (m == 0) continue;
            for (std::size_t j = k; j < n; ++j) a[i][j] -= m * a[k][j];
            b[i] -= m * b[k];
        }
    }
    for (std::size_t k = n; k-- > 0;) {
        double s = b[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= a[k][j] * b[j];
        b[k] = s / a[k][k];
    }
    return b;
}

// Cyclic banded system: a band of half-width bw plus the wrap-around corner
// entries, entry(i, k) giving the coefficient of x[(i + k) mod n] for
// k in [-bw, bw]. Solved with a Woodbury correction on the corner rows.
class CyclicBandSolver {
public:
    CyclicBandSolver(std::size_t n, std::size_t bw, const std::vector<std::vector<double>>& rows)
        : n_(n), bw_(bw) {
        detail::require(n > 4 * bw, "CyclicBandSolver: grid too small for bandwidth");
        BandedMatrix b(n, bw, bw);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k <= 2 * bw; ++k) {
                long j = static_cast<long>(i) + static_cast<long>(k) - static_cast<long>(bw);
                if (j >= 0 && j < static_cast<long>(n)) b.at(i, static_cast<std::size_t>(j)) = rows[i][k];
            }
        lu_.emplace(b);
        // Corner rows: R = {0..bw-1, n-bw..n-1}.
        for (std::size_t r = 0; r < bw; ++r) rset_.push_back(r);
        for (std::size_t r = n - bw; r < n; ++r) rset_.push_back(r);
        const std::size_t m = rset_.size();
        er_.assign(m, State(n, 0.0));
        for (std::size_t a = 0; a < m; ++a) {
            std::size_t i = rset_[a];
            for (std::size_t k = 0; k <= 2 * bw; ++k) {
                long j = static_cast<long>(i) + static_cast<long>(k) - static_cast<long>(bw);
                if (j < 0) er_[a][static_cast<std::size_t>(j + static_cast<long>(n))] += rows[i][k];
                else if (j >= static_cast<long>(n)) er_[a][static_cast<std::size_t>(j - static_cast<long>(n))] += rows[i][k];
            }
        }
        // Z = B^{-1} P_R, capacitance = I + E_R Z.
        z_.assign(m, State());
        for (std::size_t a = 0; a < m; ++a) {
            State e(n, 0.0);
            e[rset_[a]] = 1.0;
            z_[a] = lu_->solve(e);
        }
        cap_.assign(m, std::vector<double>(m, 0.0));
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t c = 0; c < m; ++c) {
                double s = (a == c) ? 1.0 : 0.0;
                for (std::size_t j = 0; j < n; ++j) s += er_[a][j] * z_[c][j];
                cap_[a][c] = s;
            }
    }

    State solve(const State& rhs) const {
        State y = lu_->solve(rhs);
        const std::size_t m = rset_.size();
        State ey(m, 0.0);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t j = 0; j < n_; ++j) ey[a] += er_[a][j] * y[j];
        State w = solve_dense(cap_, ey);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t j = 0; j < n_; ++j) y[j] -= z_[a][j] * w[a];
        return y;
    }

private:
    std::size_t n_, bw_;
    std::optional<BandLU> lu_;
    std::vector<std::size_t> rset_;
    std::vector<State> er_, z_;
    std::vector<std::vector<double>> cap_;
};

// ---------------------------------------------------------------------------
// Fitting

enum class FitModel { pure_power, power_times_log };

struct PowerLogFit {
    double coefficient = 0;
    double exponent = 0;
    double log_exponent = 0;  // q in a x^p |ln x|^q; zero for pure_power
    double rms = 0;
};

// Least squares in log coordinates:
//   pure_power:       ln y = ln a + p ln x
//   power_times_log:  ln y = ln a + p ln x + q ln|ln x|
inline PowerLogFit fit_power_log(const std::vector<double>& xs, const std::vector<double>& ys, FitModel model) {
    if (xs.size() != ys.size()) throw std::invalid_argument("fit_power_log: size mismatch");
    if (xs.size() < 4) throw std::invalid_argument("fit_power_log: need at least 4 points");
    const std::size_t m = xs.size();
    const bool inc = xs[1] > xs[0];
    for (std::size_t i = 0; i < m; ++i) {
        if (!(xs[i] > 0) || !(ys[i] > 0)) throw std::invalid_argument("fit_power_log: nonpositive data");
        if (i > 0 && ((xs[i] > xs[i - 1]) != inc || xs[i] == xs[i - 1]))
            throw std::invalid_argument("fit_power_log: xs must be strictly monotone");
        if (model == FitModel::power_times_log && std::log(xs[i]) == 0.0)
            throw std::invalid_argument("fit_power_log: ln x vanishes at a sample");
    }
    const std::size_t k = model == FitModel::pure_power ? 2 : 3;
    std::vector<State> rows(m, State(k));
    State rhs(m);
    for (std::size_t i = 0; i < m; ++i) {
        double lx = std::log(xs[i]);
        rows[i][0] = 1.0;
        rows[i][1] = lx;
        if (k == 3) rows[i][2] = std::log(std::fabs(lx));
        rhs[i] = std::log(ys[i]);
    }
    // Normal equations on centred columns are adequate at these sizes; solve
    // via Householder QR for safety instead.
    std::vector<State> a = rows;
    State b = rhs;
    for (std::size_t c = 0; c < k; ++c) {
        double nrm = 0;
        for (std::size_t i = c; i < m; ++i) nrm += a[i][c] * a[i][c];
        nrm = std::sqrt(nrm);
        if (nrm == 0) throw std::invalid_argument("fit_power_log: degenerate design");
        double alpha = a[c][c] > 0 ? -nrm : nrm;
        State v(m, 0.0);
        for (std::size_t i = c; i < m; ++i) v[i] = a[i][c];
        v[c] -= alpha;
        double vn = 0;
        for (std::size_t i = c; i < m; ++i) vn += v[i] * v[i];
        if (vn == 0) continue;
        for (std::size_t j = c; j < k; ++j) {
            double s = 0;
            for (std::size_t i = c; i < m; ++i) s += v[i] * a[i][j];
            s = 2 * s / vn;
            for (std::size_t i = c; i < m; ++i) a[i][j] -= s * v[i];
        }
        double s = 0;
        for (std::size_t i = c; i < m; ++i) s += v[i] * b[i];
        s = 2 * s / vn;
        for (std::size_t i = c; i < m; ++i) b[i] -= s * v[i];
    }
    State coef(k);
    for (std::size_t c = k; c-- > 0;) {
        double s = b[c];
        for (std::size_t j = c + 1; j < k; ++j) s -= a[c][j] * coef[j];
        if (a[c][c] == 0) throw std::invalid_argument("fit_power_log: rank deficient");
        coef[c] = s / a[c][c];
    }
    PowerLogFit out;
    out.coefficient = std::exp(coef[0]);
    out.exponent = coef[1];
    out.log_exponent = k == 3 ? coef[2] : 0.0;
    double ss = 0;
    for (std::size_t i = 0; i < m; ++i) {
        double r = rhs[i];
        for (std::size_t j = 0; j < k; ++j) r -= rows[i][j] * coef[j];
        ss += r * r;
    }
    out.rms = std::sqrt(ss / static_cast<double>(m));
    return out;
}

// ---------------------------------------------------------------------------
// Quadrature and differentiation on grids

inline double trapezoid(const std::vector<double>& xs, const std::vector<double>& ys) {
    detail::require(xs.size() == ys.size(), "trapezoid: size mismatch");
    double s = 0;
    for (std::size_t i = 1; i < xs.size(); ++i) s += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
    return s;
}

inline std::vector<double> cumulative_trapezoid(const std::vector<double>& xs, const std::vector<double>& ys) {
    detail::require(xs.size() == ys.size() && !xs.empty(), "cumulative_trapezoid: bad input");
    std::vector<double> out(xs.size(), 0.0);
    for (std::size_t i = 1; i < xs.size(); ++i)
        out[i] = out[i - 1] + 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
    return out;
}

namespace detail {
// Integral over [x0, x1] of the quadratic through (x0,y0), (x1,y1), (x2,y2).
inline double quad_piece(double x0, double x1, double x2, double y0, double y1, double y2, double a, double b) {
    // p(t) = y1 + B t + C t^2 with t = x - x1, so nothing cancels on fine grids.
    const double h0 = x1 - x0, h1 = x2 - x1;
    const double d0 = (y0 - y1) / h0, d1 = (y2 - y1) / h1;
    const double C = (d1 + d0) / (h0 + h1);
    const double B = d1 - C * h1;
    auto prim = [&](double t) { return t * (y1 + t * (B / 2 + t * C / 3)); };
    return prim(b - x1) - prim(a - x1);
}
}  // namespace detail

// Composite Simpson on a possibly nonuniform grid; an odd trailing interval is
// closed with a quadratic through the last three points.
inline double simpson(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    detail::require(n == ys.size(), "simpson: size mismatch");
    if (n < 3) return trapezoid(xs, ys);
    double s = 0;
    std::size_t i = 0;
    for (; i + 2 < n; i += 2)
        s += detail::quad_piece(xs[i], xs[i + 1], xs[i + 2], ys[i], ys[i + 1], ys[i + 2], xs[i], xs[i + 2]);
    if (i + 1 < n)
        s += detail::quad_piece(xs[n - 3], xs[n - 2], xs[n - 1], ys[n - 3], ys[n - 2], ys[n - 1], xs[n - 2],
                                xs[n - 1]);
    return s;
}

// Fornberg's finite-difference weights: w[k][j] approximates the k-th
// derivative at x0 from samples at xs[j], for k = 0..m.
inline std::vector<std::vector<double>> fd_weights(double x0, const std::vector<double>& xs, int m) {
    const int n = static_cast<int>(xs.size());
    detail::require(n > m, "fd_weights: need more nodes than derivative order");
    std::vector<std::vector<double>> c(m + 1, std::vector<double>(n, 0.0));
    double c1 = 1.0, c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        int mn = std::min(i, m);
        double c2 = 1.0, c5 = c4;
        c4 = xs[i] - x0;
        for (int j = 0; j < i; ++j) {
            double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

// k-th derivative of sampled data at every node using a sliding stencil of
// `width` points (shifted one-sided near the ends).
inline std::vector<double> derivative_on_grid(const std::vector<double>& xs, const std::vector<double>& ys, int k,
                                              int width = 7) {
    const int n = static_cast<int>(xs.size());
    detail::require(n == static_cast<int>(ys.size()), "derivative_on_grid: size mismatch");
    width = std::min(width, n);
    detail::require(width > k, "derivative_on_grid: stencil too small");
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        int s = std::clamp(i - width / 2, 0, n - width);
        std::vector<double> sx(xs.begin() + s, xs.begin() + s + width);
        auto w = fd_weights(xs[i], sx, k);
        double v = 0;
        for (int j = 0; j < width; ++j) v += w[k][j] * ys[s + j];
        out[i] = v;
    }
    return out;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    detail::require(n >= 2, "linspace: need n >= 2");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    v.back() = b;
    return v;
}

inline std::vector<double> geomspace(double a, double b, std::size_t n) {
    detail::require(n >= 2 && a > 0 && b > 0, "geomspace: need positive ends");
    std::vector<double> v(n);
    const double la = std::log(a), lb = std::log(b);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = std::exp(la + (lb - la) * static_cast<double>(i) / static_cast<double>(n - 1));
    v.front() = a;
    v.back() = b;
    return v;
}

// Grid on [a, b] with spacing that shrinks geometrically toward both ends,
// reaching min_gap at the endpoints.
inline std::vector<double> clustered_grid(double a, double b, std::size_t n_uniform, double min_gap,
                                          std::size_t n_cluster) {
    detail::require(b > a && min_gap > 0 && n_uniform >= 3, "clustered_grid: bad arguments");
    const double span = b - a;
    const double edge = 0.05 * span;
    std::vector<double> left;
    for (double d : geomspace(min_gap, edge, n_cluster)) left.push_back(a + d);
    std::vector<double> xs;
    xs.push_back(a);
    xs.insert(xs.end(), left.begin(), left.end());
    auto mid = linspace(a + edge, b - edge, n_uniform);
    xs.insert(xs.end(), mid.begin() + 1, mid.end() - 1);
    for (auto it = left.rbegin(); it != left.rend(); ++it) xs.push_back(b - (*it - a));
    xs.push_back(b);
    return xs;
}

// ---------------------------------------------------------------------------
// Nonlinear systems

struct NewtonReport {
    State x;
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

// Damped Newton with a forward-difference Jacobian. The step is halved until
// the residual norm decreases; non-finite residuals count as no decrease.
template <class R>
NewtonReport newton_fd(R&& r, State x, double tol, int max_iter = 50, double fd_rel = 1e-7) {
    auto norm = [](const State& v) {
        double s = 0;
        for (double e : v) s += e * e;
        return std::isfinite(s) ? std::sqrt(s) : std::numeric_limits<double>::infinity();
    };
    NewtonReport rep;
    State f = r(x);
    double fn = norm(f);
    const std::size_t n = x.size();
    for (int it = 0; it < max_iter && fn > tol; ++it) {
        rep.iterations = it + 1;
        std::vector<std::vector<double>> jac(f.size(), std::vector<double>(n));
        for (std::size_t j = 0; j < n; ++j) {
            State xp = x;
            const double h = fd_rel * std::max(1.0, std::fabs(x[j]));
            xp[j] += h;
            State fp = r(xp);
            for (std::size_t i = 0; i < f.size(); ++i) jac[i][j] = (fp[i] - f[i]) / h;
        }
        State step;
        try {
            State negf(f.size());
            for (std::size_t i = 0; i < f.size(); ++i) negf[i] = -f[i];
            step = solve_dense(jac, negf);
        } catch (const SingularMatrixError&) {
            break;
        }
        double t = 1.0;
        bool moved = false;
        for (int k = 0; k < 30; ++k, t *= 0.5) {
            State xt = x;
            for (std::size_t j = 0; j < n; ++j) xt[j] += t * step[j];
            State ft = r(xt);
            double ftn = norm(ft);
            if (ftn < fn) {
                x = std::move(xt);
                f = std::move(ft);
                fn = ftn;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    rep.x = x;
    rep.residual = fn;
    rep.converged = fn <= tol;
    return rep;
}

}  // namespace blowup

#endif
