#ifndef BLOWUP_MODELS_HPP
#define BLOWUP_MODELS_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "jet.hpp"
#include "numcore.hpp"

namespace blowup {

struct Rational {
    long num = 0;
    long den = 1;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const { return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den); }
    friend bool operator==(const Rational& a, const Rational& b) { return a.num * b.den == b.num * a.den; }
};

enum class ModelId { RD2, RD2_DIV, RD4, RD6, PME4, TFE4, QWE4, QWE4_DIV, NDE3, NDE3_DIV };
enum class Family { parabolic, wave, dispersion };

inline constexpr std::array<ModelId, 10> all_models = {ModelId::RD2,  ModelId::RD2_DIV, ModelId::RD4,
                                                       ModelId::RD6,  ModelId::PME4,    ModelId::TFE4,
                                                       ModelId::QWE4, ModelId::QWE4_DIV, ModelId::NDE3,
                                                       ModelId::NDE3_DIV};

struct UnknownModelError : Error {
    using Error::Error;
};
struct NoReductionError : Error {
    using Error::Error;
};

struct ModelSpec {
    ModelId id;
    const char* name;
    Family family;
    int spatial_order;
    int nonlinearity_power;
    bool divergent;
    Rational blow_up_rate_exponent;
    const char* pde;
};

inline const char* to_string(Family f) {
    switch (f) {
        case Family::parabolic: return "parabolic";
        case Family::wave: return "wave";
        case Family::dispersion: return "dispersion";
    }
    return "?";
}

inline const std::array<ModelSpec, 10>& registry() {
    static const std::array<ModelSpec, 10> r = {{
        {ModelId::RD2, "RD2", Family::parabolic, 2, 2, false, {1, 2}, "u_t = u^2 (u_xx + u)"},
        {ModelId::RD2_DIV, "RD2_DIV", Family::parabolic, 2, 3, true, {1, 2}, "u_t = (u^3)_xx + u^3"},
        {ModelId::RD4, "RD4", Family::parabolic, 4, 2, false, {1, 2}, "u_t = u^2 (-u_xxxx + u)"},
        {ModelId::RD6, "RD6", Family::parabolic, 6, 2, false, {1, 2}, "u_t = u^2 (u_xxxxxx + u)"},
        {ModelId::PME4, "PME4", Family::parabolic, 4, 3, true, {1, 2}, "u_t = -(u^3)_xxxx + u^3"},
        {ModelId::TFE4, "TFE4", Family::parabolic, 4, 3, true, {1, 2}, "u_t = -(u^2 u_xxx)_x + u^3"},
        {ModelId::QWE4, "QWE4", Family::wave, 4, 2, false, {1, 1}, "u_tt = u^2 (-u_xxxx + u)"},
        {ModelId::QWE4_DIV, "QWE4_DIV", Family::wave, 4, 3, true, {1, 1}, "u_tt = -(u^3)_xxxx + u^3"},
        {ModelId::NDE3, "NDE3", Family::dispersion, 3, 3, false, {1, 3}, "u_t = u^3 (u_xxx + u)"},
        {ModelId::NDE3_DIV, "NDE3_DIV", Family::dispersion, 3, 4, true, {1, 3}, "u_t = (u^4)_xxx + u^4"},
    }};
    return r;
}

inline const ModelSpec& spec(ModelId id) {
    for (const auto& m : registry())
        if (m.id == id) return m;
    throw UnknownModelError("unknown model id");
}

inline const char* to_string(ModelId id) { return spec(id).name; }

inline ModelId parse_model(std::string_view s) {
    std::string up(s);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) {
        return c == '-' ? '_' : static_cast<char>(std::toupper(c));
    });
    for (const auto& m : registry())
        if (up == m.name) return m.id;
    throw UnknownModelError("unknown model '" + std::string(s) + "'");
}

// Separable reduction u = (T-t)^(-alpha) theta(x). The residual takes a jet of
// theta (truncation order >= jet_order) and returns lhs - rhs.
struct OdeDescriptor {
    ModelId model;
    int order;
    int jet_order;
    double lhs_coefficient;
    Rational alpha;
    const char* text;
    std::function<double(const Jet&)> rhs;

    double residual(const Jet& theta) const { return lhs_coefficient * theta.value() - rhs(theta); }
};

inline OdeDescriptor separable_ode(ModelId id) {
    const ModelSpec& m = spec(id);
    const double a = m.blow_up_rate_exponent.value();
    // Rate constant: alpha * theta for first-order time derivatives,
    // alpha (alpha + 1) theta for the wave family.
    const double c = m.family == Family::wave ? a * (a + 1) : a;
    auto d = [](const Jet& j, int k) { return j.derivative(static_cast<std::size_t>(k)); };
    OdeDescriptor o{id, m.spatial_order, m.spatial_order, c, m.blow_up_rate_exponent, "", {}};
    switch (id) {
        case ModelId::RD2:
            o.text = "1/2 th = th^2 (th'' + th)";
            o.rhs = [d](const Jet& t) { double v = t.value(); return v * v * (d(t, 2) + v); };
            break;
        case ModelId::RD2_DIV:
            o.text = "1/2 th = (th^3)'' + th^3";
            o.rhs = [d](const Jet& t) { Jet c3 = ipow(t, 3); return d(c3, 2) + c3.value(); };
            break;
        case ModelId::RD4:
            o.text = "1/2 th = th^2 (-th'''' + th)";
            o.rhs = [d](const Jet& t) { double v = t.value(); return v * v * (-d(t, 4) + v); };
            break;
        case ModelId::RD6:
            o.text = "1/2 th = th^2 (th^(6) + th)";
            o.rhs = [d](const Jet& t) { double v = t.value(); return v * v * (d(t, 6) + v); };
            break;
        case ModelId::PME4:
            o.text = "1/2 th = -(th^3)'''' + th^3";
            o.rhs = [d](const Jet& t) { Jet c3 = ipow(t, 3); return -d(c3, 4) + c3.value(); };
            break;
        case ModelId::TFE4:
            o.text = "1/2 th = -(th^2 th''')' + th^3";
            o.rhs = [d](const Jet& t) {
                Jet t3 = t.d().d().d();
                Jet flux = ipow(t.truncated(t3.order()), 2) * t3;
                return -d(flux, 1) + std::pow(t.value(), 3);
            };
            break;
        case ModelId::QWE4:
            o.text = "2 th = th^2 (-th'''' + th)";
            o.rhs = [d](const Jet& t) { double v = t.value(); return v * v * (-d(t, 4) + v); };
            break;
        case ModelId::QWE4_DIV:
            o.text = "2 th = -(th^3)'''' + th^3";
            o.rhs = [d](const Jet& t) { Jet c3 = ipow(t, 3); return -d(c3, 4) + c3.value(); };
            break;
        case ModelId::NDE3:
            o.text = "1/3 th = th^3 (th''' + th)";
            o.rhs = [d](const Jet& t) { double v = t.value(); return v * v * v * (d(t, 3) + v); };
            break;
        case ModelId::NDE3_DIV:
            o.text = "1/3 th = (th^4)''' + th^4";
            o.rhs = [d](const Jet& t) { Jet c4 = ipow(t, 4); return d(c4, 3) + c4.value(); };
            break;
    }
    return o;
}

// theta = factor * F^power maps the separable ODE onto a normalized F-form;
// separable residual = residual_scale * normalized residual.
struct ScalingReduction {
    ModelId source_model;
    double theta_to_F_factor;
    Rational F_power;
    double residual_scale;
    const char* normalized_text;
    std::function<double(const Jet&)> normalized_residual;

    Jet theta_from_F(const Jet& F) const {
        Jet p = F_power.den == 1 ? ipow(F, static_cast<int>(F_power.num)) : pow(F, F_power.value());
        return p * theta_to_F_factor;
    }
};

inline std::optional<ScalingReduction> find_reduction(ModelId id) {
    auto d = [](const Jet& j, int k) { return j.derivative(static_cast<std::size_t>(k)); };
    const double r2 = std::sqrt(2.0);
    switch (id) {
        case ModelId::PME4:
        case ModelId::QWE4_DIV: {
            const bool wave = id == ModelId::QWE4_DIV;
            return ScalingReduction{id,
                                    wave ? r2 : 1.0 / r2,
                                    {1, 3},
                                    wave ? 2.0 * r2 : std::pow(2.0, -1.5),
                                    "F'''' - F + F^(1/3) = 0",
                                    [d](const Jet& F) { return d(F, 4) - F.value() + std::cbrt(F.value()); }};
        }
        case ModelId::TFE4:
            return ScalingReduction{id, 1.0 / r2, {1, 1}, std::pow(2.0, -1.5), "(F^2 F''')' = F^3 - F",
                                    [d](const Jet& F) {
                                        Jet f3 = F.d().d().d();
                                        Jet flux = ipow(F.truncated(f3.order()), 2) * f3;
                                        double v = F.value();
                                        return d(flux, 1) - v * v * v + v;
                                    }};
        case ModelId::RD2_DIV:
            return ScalingReduction{id, 1.0 / r2, {1, 3}, -std::pow(2.0, -1.5), "F'' + F - F^(1/3) = 0",
                                    [d](const Jet& F) { return d(F, 2) + F.value() - std::cbrt(F.value()); }};
        case ModelId::NDE3_DIV:
            return ScalingReduction{id, std::pow(3.0, -1.0 / 3.0), {1, 4}, -std::pow(3.0, -4.0 / 3.0),
                                    "F''' + F - F^(1/4) = 0",
                                    [d](const Jet& F) {
                                        double v = F.value();
                                        return d(F, 3) + v - std::pow(v, 0.25);
                                    }};
        default:
            return std::nullopt;
    }
}

inline ScalingReduction rescale_separable(ModelId id) {
    auto r = find_reduction(id);
    if (!r) throw NoReductionError(std::string("no scaling reduction registered for ") + to_string(id));
    return *r;
}

}  // namespace blowup

#endif
