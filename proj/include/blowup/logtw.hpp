#ifndef BLOWUP_LOGTW_HPP
#define BLOWUP_LOGTW_HPP

#include <cmath>
#include <string>
#include <vector>

#include "models.hpp"
#include "numcore.hpp"
#include "profiles.hpp"

namespace blowup {

struct NoLawError : Error {
    using Error::Error;
};
struct OutOfRangeError : Error {
    using Error::Error;
};

// g(eta) = coefficient (-eta)^power (ln(-eta))^log_power (1 + o(1)), eta -> -inf.
struct AsymptoticLaw {
    double coefficient = 0;
    Rational power;
    Rational log_power;
};

// Reduced log-TW ODE in Region II:
//   c g - l1 lambda g' + l2 lambda^2 g'' = sign g^sigma g^(order)
// The reaction part g^sigma g of the full ODE is not part of this balance.
struct LogTwOde {
    ModelId model;
    int order;
    double rate_term_coefficient;
    double lambda;
    int sign;
    int sigma;
    double lambda1 = 1;
    double lambda2 = 0;
};

inline bool has_logtw_law(ModelId id) {
    return id == ModelId::RD2 || id == ModelId::RD4 || id == ModelId::RD6 || id == ModelId::QWE4 ||
           id == ModelId::NDE3;
}

inline LogTwOde logtw_ode(ModelId id, double lambda) {
    switch (id) {
        case ModelId::RD2: return {id, 2, 0.5, lambda, +1, 2};
        case ModelId::RD4: return {id, 4, 0.5, lambda, -1, 2};
        case ModelId::RD6: return {id, 6, 0.5, lambda, +1, 2};
        case ModelId::QWE4: return {id, 4, 2.0, lambda, -1, 2, 3.0, 1.0};
        case ModelId::NDE3: return {id, 3, 1.0 / 3.0, lambda, +1, 3};
        default:
            throw NoLawError(std::string("no log-TW law for ") + to_string(id) + "; blow-up is self-similar");
    }
}

namespace detail {
inline double factorial(int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}
}  // namespace detail

// Leading balance of c g against s g^sigma D^n g for g = a z^p L^q with
// z = -eta, L = ln z. Powers: p = n/sigma, q = 1/sigma. The n-th derivative
// of z^p L^q is led by p! q (-1)^(n-p-1) (n-p-1)! z^(p-n) L^(q-1), giving
//   a^sigma = c / (s q p! (n-p-1)! (-1)^(p+1)).
inline AsymptoticLaw logtw_law(ModelId id) {
    if (!has_logtw_law(id))
        throw NoLawError(std::string("no log-TW law for ") + to_string(id) + "; blow-up is self-similar");
    const LogTwOde ode = logtw_ode(id, 0.0);
    const int n = ode.order, sigma = ode.sigma;
    if (n % sigma != 0) throw NoLawError("logtw_law: non-integer power in balance");
    const int p = n / sigma;
    const double q = 1.0 / sigma;
    const double parity = (p + 1) % 2 == 0 ? 1.0 : -1.0;
    const double rhs = ode.sign * q * detail::factorial(p) * detail::factorial(n - p - 1) * parity;
    const double as = ode.rate_term_coefficient / rhs;
    if (!(as > 0)) throw NoLawError("logtw_law: balance has no positive root");
    return {std::pow(as, 1.0 / sigma), {p, 1}, {1, sigma}};
}

// Sum of terms coef z^m L^r ell^j with L = ln z, ell = ln L; closed under d/dz.
struct LogTerm {
    double coef;
    double m;
    double r;
    int j;
};

class LogSeries {
public:
    std::vector<LogTerm> terms;

    LogSeries derivative() const {
        LogSeries out;
        for (const auto& t : terms) {
            // d/dz z^m L^r ell^j = z^(m-1) [m L^r ell^j + r L^(r-1) ell^j + j L^(r-1) ell^(j-1)]
            if (t.m != 0) out.add({t.coef * t.m, t.m - 1, t.r, t.j});
            if (t.r != 0) out.add({t.coef * t.r, t.m - 1, t.r - 1, t.j});
            if (t.j != 0) out.add({t.coef * t.j, t.m - 1, t.r - 1, t.j - 1});
        }
        return out;
    }

    LogSeries derivative(int k) const {
        LogSeries s = *this;
        for (int i = 0; i < k; ++i) s = s.derivative();
        return s;
    }

    double eval(double z) const {
        const double L = std::log(z), ell = std::log(L);
        double s = 0;
        for (const auto& t : terms) s += t.coef * std::pow(z, t.m) * std::pow(L, t.r) * std::pow(ell, t.j);
        return s;
    }

    void add(LogTerm t) {
        for (auto& u : terms)
            if (u.m == t.m && u.r == t.r && u.j == t.j) {
                u.coef += t.coef;
                return;
            }
        terms.push_back(t);
    }
};

// Formal correction factor h = 1 + sum_k L^-k P_k(ell) of the ansatz.
// Coefficients from balancing successive orders in 1/L; the free constant at
// first order (a shift of z) is set to zero.
inline std::vector<std::vector<double>> logtw_corrections(ModelId id) {
    switch (id) {
        case ModelId::RD2:
            return {{0.0, 1.0 / 4}, {-3.0 / 8, 1.0 / 8, -1.0 / 32}, {-13.0 / 16, 11.0 / 32, -1.0 / 16, 1.0 / 128}};
        case ModelId::RD4:
        case ModelId::QWE4:
            return {{0.0, 1.0 / 8}, {-15.0 / 32, 1.0 / 32, -1.0 / 128}, {-65.0 / 128, 47.0 / 256, -1.0 / 128, 1.0 / 1024}};
        case ModelId::RD6:
            return {{0.0, 1.0 / 12},
                    {-49.0 / 96, 1.0 / 72, -1.0 / 288},
                    {-637.0 / 1728, 449.0 / 3456, -1.0 / 432, 1.0 / 3456}};
        case ModelId::NDE3:
            return {{0.0, 0.0}, {-10.0 / 27, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}};
        default:
            throw NoLawError("logtw_corrections: no law for model");
    }
}

// Ansatz in z = -eta. n_correction_terms = 1 keeps the leading term only.
inline LogSeries logtw_ansatz(ModelId id, const AsymptoticLaw& law, int n_correction_terms = 1) {
    if (n_correction_terms < 1 || n_correction_terms > 4)
        throw std::invalid_argument("logtw_ansatz: n_correction_terms must be in [1, 4]");
    const double a = law.coefficient, p = law.power.value(), q = law.log_power.value();
    LogSeries s;
    s.add({a, p, q, 0});
    if (n_correction_terms > 1) {
        auto corr = logtw_corrections(id);
        for (int k = 1; k < n_correction_terms; ++k) {
            const auto& poly = corr[static_cast<std::size_t>(k - 1)];
            for (std::size_t j = 0; j < poly.size(); ++j)
                if (poly[j] != 0.0) s.add({a * poly[j], p, q - k, static_cast<int>(j)});
        }
    }
    return s;
}

// Eta-derivatives 0..k of the ansatz at eta < 0.
inline std::vector<double> ansatz_eta_derivatives(const LogSeries& s, double eta, int k) {
    std::vector<double> out;
    LogSeries d = s;
    const double z = -eta;
    for (int i = 0; i <= k; ++i) {
        out.push_back((i % 2 == 0 ? 1.0 : -1.0) * d.eval(z));
        d = d.derivative();
    }
    return out;
}

struct LogTwTerms {
    double rate, drift, drift2, diffusion;
};

inline LogTwTerms logtw_terms(const LogTwOde& ode, const std::vector<double>& g) {
    return {ode.rate_term_coefficient * g[0], -ode.lambda1 * ode.lambda * g[1],
            ode.lambda2 * ode.lambda * ode.lambda * (ode.order >= 2 ? g[2] : 0.0),
            -ode.sign * std::pow(g[0], ode.sigma) * g[static_cast<std::size_t>(ode.order)]};
}

// |sum of ODE terms| / |largest term| at the ansatz, with exact derivatives.
inline double logtw_residual(const LogTwOde& ode, const AsymptoticLaw& law, double eta, int n_correction_terms = 1) {
    if (eta > -10) throw OutOfRangeError("logtw_residual: eta must be <= -10");
    auto s = logtw_ansatz(ode.model, law, n_correction_terms);
    auto g = ansatz_eta_derivatives(s, eta, ode.order);
    auto t = logtw_terms(ode, g);
    double big = std::max({std::fabs(t.rate), std::fabs(t.drift), std::fabs(t.drift2), std::fabs(t.diffusion)});
    return std::fabs(t.rate + t.drift + t.drift2 + t.diffusion) / big;
}

struct LogTwTrajectory {
    ModelId model;
    std::vector<double> etas;
    std::vector<double> g;
    std::vector<double> ratio;  // g / [a (-eta)^p (ln(-eta))^q]
    IvpStatus status = IvpStatus::ok;
    std::string diagnostic;
};

inline LogTwTrajectory integrate_logtw(const LogTwOde& ode, double eta_start, double eta_end,
                                       int n_correction_terms = 1, const IvpControls& ctl = {1e-11, 1e-14}) {
    if (!(eta_start <= -1e3 && -1e3 <= eta_end && eta_end < 0 && eta_start <= eta_end))
        throw OutOfRangeError("integrate_logtw: need eta_start <= -1e3 <= eta_end < 0");
    const AsymptoticLaw law = logtw_law(ode.model);
    const auto s = logtw_ansatz(ode.model, law, n_correction_terms);
    const auto d0 = ansatz_eta_derivatives(s, eta_start, ode.order - 1);
    const int n = ode.order;
    Field field = [&ode, n](double, const State& y, State& dy) {
        for (int i = 0; i + 1 < n; ++i) dy[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i) + 1];
        double lhs = ode.rate_term_coefficient * y[0] - ode.lambda1 * ode.lambda * y[1];
        if (ode.lambda2 != 0) lhs += ode.lambda2 * ode.lambda * ode.lambda * y[2];
        dy[static_cast<std::size_t>(n - 1)] = lhs / (ode.sign * std::pow(y[0], ode.sigma));
    };
    auto tr = integrate_ivp(field, d0, eta_start, eta_end, ctl, [](double, const State& y) { return !(y[0] > 0); });
    LogTwTrajectory out{ode.model, {}, {}, {}, tr.status, tr.message};
    const double a = law.coefficient, p = law.power.value(), q = law.log_power.value();
    for (std::size_t i = 0; i < tr.size(); ++i) {
        if (!(tr.y[i][0] > 0)) break;
        const double z = -tr.t[i];
        out.etas.push_back(tr.t[i]);
        out.g.push_back(tr.y[i][0]);
        out.ratio.push_back(tr.y[i][0] / (a * std::pow(z, p) * std::pow(std::log(z), q)));
    }
    if (tr.status == IvpStatus::stopped)
        out.diagnostic = "solution left the asymptotic bundle (g reached 0) at eta=" + std::to_string(tr.t.back());
    return out;
}

}  // namespace blowup

#endif
