#ifndef BFLY_SCALED_REAL_HPP
#define BFLY_SCALED_REAL_HPP

#include <cmath>
#include <cstdint>

namespace bfly {

// Real number represented as mantissa * 2^exponent with |mantissa| in
// [0.5, 1), or exactly zero (mantissa = 0, exponent = 0).  The exponent is a
// 64-bit integer, so recurrences whose values decay like (1-x^2)^(m/2) for
// orders m in the tens of thousands stay representable where a plain double
// would flush to zero.  Every operation renormalizes.
struct ScaledReal {
    double mantissa = 0.0;
    std::int64_t exponent = 0;

    static ScaledReal from_double(double v) {
        if (v == 0.0) return {};
        int e = 0;
        const double m = std::frexp(v, &e);
        return ScaledReal{m, e};
    }

    static ScaledReal normalized(double m, std::int64_t e) {
        if (m == 0.0) return {};
        int shift = 0;
        const double m2 = std::frexp(m, &shift);
        return ScaledReal{m2, e + shift};
    }

    bool is_zero() const { return mantissa == 0.0; }

    int sign() const { return mantissa > 0.0 ? 1 : (mantissa < 0.0 ? -1 : 0); }

    // Exact whenever the value fits in double range; graceful underflow to
    // zero (and overflow to +-inf) otherwise.
    double to_double() const {
        if (mantissa == 0.0) return 0.0;
        if (exponent < -1100) return 0.0;
        if (exponent > 1100) return mantissa > 0.0 ? HUGE_VAL : -HUGE_VAL;
        return std::ldexp(mantissa, static_cast<int>(exponent));
    }

    ScaledReal operator-() const { return ScaledReal{-mantissa, exponent}; }

    friend ScaledReal operator*(const ScaledReal& a, const ScaledReal& b) {
        if (a.is_zero() || b.is_zero()) return {};
        return normalized(a.mantissa * b.mantissa, a.exponent + b.exponent);
    }

    friend ScaledReal operator*(const ScaledReal& a, double s) {
        return a * from_double(s);
    }

    friend ScaledReal operator*(double s, const ScaledReal& a) {
        return a * from_double(s);
    }

    friend ScaledReal operator+(const ScaledReal& a, const ScaledReal& b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        const std::int64_t d = a.exponent - b.exponent;
        if (d >= 64) return a;
        if (d <= -64) return b;
        // Align to the larger exponent; the shift stays within double range.
        if (d >= 0)
            return normalized(a.mantissa + std::ldexp(b.mantissa, static_cast<int>(-d)),
                              a.exponent);
        return normalized(std::ldexp(a.mantissa, static_cast<int>(d)) + b.mantissa,
                          b.exponent);
    }

    friend ScaledReal operator-(const ScaledReal& a, const ScaledReal& b) {
        return a + (-b);
    }

    friend ScaledReal operator/(const ScaledReal& a, const ScaledReal& b) {
        return normalized(a.mantissa / b.mantissa, a.exponent - b.exponent);
    }
};

inline ScaledReal sqrt(const ScaledReal& a) {
    if (a.is_zero()) return {};
    double m = a.mantissa;
    std::int64_t e = a.exponent;
    if (e & 1) {
        m *= 2.0;
        e -= 1;
    }
    return ScaledReal::normalized(std::sqrt(m), e / 2);
}

// a^p by binary exponentiation, p >= 0.
inline ScaledReal pow_int(ScaledReal a, std::int64_t p) {
    ScaledReal r = ScaledReal::from_double(1.0);
    while (p > 0) {
        if (p & 1) r = r * a;
        a = a * a;
        p >>= 1;
    }
    return r;
}

} // namespace bfly

#endif
