#ifndef BLOWUP_JET_HPP
#define BLOWUP_JET_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace blowup {

// Truncated Taylor series c[0] + c[1] h + ... + c[N] h^N about a point.
// c[k] = f^(k)/k!, so products follow the Leibniz rule automatically.
class Jet {
public:
    Jet() = default;
    explicit Jet(std::size_t order, double value = 0.0) : c_(order + 1, 0.0) { c_[0] = value; }

    // Jet of the identity map x at the point x0.
    static Jet variable(double x0, std::size_t order) {
        Jet j(order, x0);
        if (order >= 1) j.c_[1] = 1.0;
        return j;
    }

    // Build from derivative values d[0..N] (d[k] = f^(k)).
    static Jet from_derivatives(const std::vector<double>& d) {
        Jet j(d.empty() ? 0 : d.size() - 1);
        double fact = 1.0;
        for (std::size_t k = 0; k < d.size(); ++k) {
            if (k > 0) fact *= static_cast<double>(k);
            j.c_[k] = d[k] / fact;
        }
        return j;
    }

    std::size_t order() const { return c_.size() - 1; }
    double value() const { return c_[0]; }
    double coeff(std::size_t k) const { return k < c_.size() ? c_[k] : 0.0; }
    double& coeff(std::size_t k) { return c_.at(k); }

    double derivative(std::size_t k) const {
        if (k >= c_.size()) throw std::out_of_range("Jet::derivative: order exceeds truncation");
        double fact = 1.0;
        for (std::size_t i = 2; i <= k; ++i) fact *= static_cast<double>(i);
        return c_[k] * fact;
    }

    // Jet of f'; loses one order.
    Jet d() const {
        if (c_.size() < 2) throw std::out_of_range("Jet::d: nothing left to differentiate");
        Jet r(order() - 1);
        for (std::size_t k = 0; k + 1 < c_.size(); ++k) r.c_[k] = static_cast<double>(k + 1) * c_[k + 1];
        return r;
    }

    Jet truncated(std::size_t order) const {
        Jet r(order);
        for (std::size_t k = 0; k <= order && k < c_.size(); ++k) r.c_[k] = c_[k];
        return r;
    }

    Jet& operator+=(const Jet& o) {
        same(o);
        for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        same(o);
        for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
        return *this;
    }
    Jet& operator*=(double s) {
        for (double& v : c_) v *= s;
        return *this;
    }
    Jet& operator+=(double s) {
        c_[0] += s;
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator+(double s, Jet a) { return a += s; }
    friend Jet operator-(Jet a, double s) { return a += -s; }
    friend Jet operator-(double s, Jet a) {
        a *= -1.0;
        return a += s;
    }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }
    Jet operator-() const {
        Jet r = *this;
        return r *= -1.0;
    }

    friend Jet operator*(const Jet& a, const Jet& b) {
        a.same(b);
        Jet r(a.order());
        for (std::size_t k = 0; k < a.c_.size(); ++k) {
            double s = 0;
            for (std::size_t i = 0; i <= k; ++i) s += a.c_[i] * b.c_[k - i];
            r.c_[k] = s;
        }
        return r;
    }

    friend Jet operator/(const Jet& a, const Jet& b) {
        a.same(b);
        if (b.c_[0] == 0.0) throw std::domain_error("Jet: division by a jet with zero value");
        Jet r(a.order());
        for (std::size_t k = 0; k < a.c_.size(); ++k) {
            double s = a.c_[k];
            for (std::size_t i = 1; i <= k; ++i) s -= b.c_[i] * r.c_[k - i];
            r.c_[k] = s / b.c_[0];
        }
        return r;
    }
    friend Jet operator/(double s, const Jet& b) { return Jet(b.order(), s) / b; }

    friend Jet exp(const Jet& a) {
        Jet r(a.order());
        r.c_[0] = std::exp(a.c_[0]);
        for (std::size_t k = 1; k < a.c_.size(); ++k) {
            double s = 0;
            for (std::size_t i = 1; i <= k; ++i) s += static_cast<double>(i) * a.c_[i] * r.c_[k - i];
            r.c_[k] = s / static_cast<double>(k);
        }
        return r;
    }

    friend Jet log(const Jet& a) {
        if (!(a.c_[0] > 0)) throw std::domain_error("Jet: log of nonpositive value");
        Jet r(a.order());
        r.c_[0] = std::log(a.c_[0]);
        for (std::size_t k = 1; k < a.c_.size(); ++k) {
            double s = a.c_[k];
            for (std::size_t i = 1; i < k; ++i)
                s -= static_cast<double>(i) * r.c_[i] * a.c_[k - i] / static_cast<double>(k);
            r.c_[k] = s / a.c_[0];
        }
        return r;
    }

    // a^p for a > 0 (or integer p).
    friend Jet pow(const Jet& a, double p) {
        if (a.c_[0] == 0.0 && p == std::floor(p) && p >= 0) {
            Jet r(a.order(), 1.0);
            for (int i = 0; i < static_cast<int>(p); ++i) r = r * a;
            return r;
        }
        if (!(a.c_[0] > 0)) throw std::domain_error("Jet: pow of nonpositive value");
        Jet r(a.order());
        r.c_[0] = std::pow(a.c_[0], p);
        for (std::size_t k = 1; k < a.c_.size(); ++k) {
            double s = 0;
            for (std::size_t i = 1; i <= k; ++i)
                s += (p * static_cast<double>(i) - static_cast<double>(k - i)) * a.c_[i] * r.c_[k - i];
            r.c_[k] = s / (static_cast<double>(k) * a.c_[0]);
        }
        return r;
    }

    friend Jet sqrt(const Jet& a) { return pow(a, 0.5); }

    // sin and cos together: s' = c a', c' = -s a'.
    friend std::pair<Jet, Jet> sincos(const Jet& a) {
        Jet s(a.order()), c(a.order());
        s.c_[0] = std::sin(a.c_[0]);
        c.c_[0] = std::cos(a.c_[0]);
        for (std::size_t k = 1; k < a.c_.size(); ++k) {
            double ss = 0, cc = 0;
            for (std::size_t i = 1; i <= k; ++i) {
                ss += static_cast<double>(i) * a.c_[i] * c.c_[k - i];
                cc -= static_cast<double>(i) * a.c_[i] * s.c_[k - i];
            }
            s.c_[k] = ss / static_cast<double>(k);
            c.c_[k] = cc / static_cast<double>(k);
        }
        return {s, c};
    }
    friend Jet sin(const Jet& a) { return sincos(a).first; }
    friend Jet cos(const Jet& a) { return sincos(a).second; }

private:
    void same(const Jet& o) const {
        if (o.c_.size() != c_.size()) throw std::invalid_argument("Jet: order mismatch");
    }
    std::vector<double> c_ = std::vector<double>(1, 0.0);
};

// Integer power by repeated products; valid for any sign of the value.
inline Jet ipow(const Jet& a, int n) {
    Jet r(a.order(), 1.0);
    for (int i = 0; i < n; ++i) r = r * a;
    return r;
}

}  // namespace blowup

#endif
