#include "bfly/legendre.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bfly::legendre {

namespace {

void check_point(double x) {
    if (!(std::abs(x) < 1.0))
        throw std::domain_error("legendre: x must satisfy |x| < 1, got " +
                                std::to_string(x));
}

double coeff_c(int m, int l) {
    const double lm = l - m, lp = l + m;
    return std::sqrt((lm + 1.0) * (lm + 2.0) * (lp + 1.0) * (lp + 2.0) /
                     ((2.0 * l + 1.0) * (2.0 * l + 3.0) * (2.0 * l + 3.0) *
                      (2.0 * l + 5.0)));
}

double coeff_d(int m, int l) {
    return (2.0 * l * (l + 1.0) - 2.0 * static_cast<double>(m) * m - 1.0) /
           ((2.0 * l - 1.0) * (2.0 * l + 3.0));
}

} // namespace

ScaledReal order_prefactor(int m) {
    if (m < 0) throw std::domain_error("legendre: order must be nonnegative");
    ScaledReal p = ScaledReal::from_double(1.0 / std::sqrt(2.0));
    for (int k = 1; k <= m; ++k)
        p = p * ScaledReal::from_double(std::sqrt((2.0 * k + 1.0) / (2.0 * k)));
    return p;
}

FirstValues first_values(int m, double x) {
    return first_values(m, x, order_prefactor(m));
}

FirstValues first_values(int m, double x, const ScaledReal& prefactor) {
    if (m < 0) throw std::domain_error("legendre: order must be nonnegative");
    check_point(x);

    // P(m) = 1/sqrt(2) * prod_{k=1..m} sqrt((2k+1)/(2k)) * (1-x^2)^(m/2).
    const ScaledReal s = ScaledReal::from_double((1.0 - x) * (1.0 + x));
    ScaledReal p_m = prefactor * pow_int(s, m / 2);
    if (m & 1) p_m = p_m * sqrt(s);

    const ScaledReal xs = ScaledReal::from_double(x);
    const ScaledReal x2 = xs * xs;
    const ScaledReal p_m1 =
        xs * p_m * ScaledReal::from_double(std::sqrt(2.0 * m + 3.0));
    const ScaledReal p_m2 =
        (x2 - ScaledReal::from_double(coeff_d(m, m))) * p_m /
        ScaledReal::from_double(coeff_c(m, m));
    const ScaledReal p_m3 =
        (x2 - ScaledReal::from_double(coeff_d(m, m + 1))) * p_m1 /
        ScaledReal::from_double(coeff_c(m, m + 1));
    return FirstValues{p_m, p_m1, p_m2, p_m3};
}

RecurrenceCoefficients::RecurrenceCoefficients(int m, int l_max) : m_(m) {
    ensure(l_max);
}

void RecurrenceCoefficients::ensure(int l_max) {
    if (l_max < m_) l_max = m_;
    const std::size_t need = static_cast<std::size_t>(l_max - m_) + 1;
    if (c_.size() >= need) return;
    c_.reserve(need);
    d_.reserve(need);
    for (int l = m_ + static_cast<int>(c_.size()); l <= l_max; ++l) {
        c_.push_back(coeff_c(m_, l));
        d_.push_back(coeff_d(m_, l));
    }
}

DegreeSweep::DegreeSweep(int m, double x, Parity parity,
                         std::shared_ptr<RecurrenceCoefficients> coeffs)
    : DegreeSweep(m, x, parity, coeffs, first_values(m, x)) {}

DegreeSweep::DegreeSweep(int m, double x, Parity parity,
                         std::shared_ptr<RecurrenceCoefficients> coeffs,
                         const FirstValues& seeds)
    : m_(m), x_(x), x2_(x * x), parity_(parity), coeffs_(std::move(coeffs)) {
    if (parity_ == Parity::even) {
        prev2_ = seeds.p_m;
        prev_ = seeds.p_m2;
    } else {
        prev2_ = seeds.p_m1;
        prev_ = seeds.p_m3;
    }
}

ScaledReal DegreeSweep::next() {
    if (next_j_ == 0) {
        ++next_j_;
        return prev2_;
    }
    if (next_j_ == 1) {
        ++next_j_;
        return prev_;
    }
    // Emit degree l = m + 2j (+1 for odd); the step uses coefficients at
    // l-2 and l-4.
    const int l = next_degree();
    coeffs_->ensure(l - 2);
    const double cl2 = coeffs_->c(l - 2);
    const double dl2 = coeffs_->d(l - 2);
    const double cl4 = coeffs_->c(l - 4);
    const ScaledReal value =
        (ScaledReal::from_double(x2_ - dl2) * prev_ -
         ScaledReal::from_double(cl4) * prev2_) /
        ScaledReal::from_double(cl2);
    prev2_ = prev_;
    prev_ = value;
    ++next_j_;
    return value;
}

DegreeSweep make_sweep(int m, double x, Parity parity) {
    return DegreeSweep(m, x, parity,
                       std::make_shared<RecurrenceCoefficients>(m, m + 8));
}

DegreeSweep make_sweep(int m, double x, Parity parity,
                       std::shared_ptr<RecurrenceCoefficients> coeffs) {
    return DegreeSweep(m, x, parity, std::move(coeffs));
}

ScaledReal chain_value(int m, int l, double x) {
    if (l < m) throw std::domain_error("legendre: degree below order");
    const Parity parity = ((l - m) % 2 == 0) ? Parity::even : Parity::odd;
    DegreeSweep sweep = make_sweep(m, x, parity);
    const int steps = (l - m) / 2;
    ScaledReal v;
    for (int j = 0; j <= steps; ++j) v = sweep.next();
    return v;
}

double derivative(int m, int l, double x, const ScaledReal& p_l,
                  const ScaledReal& p_lm1) {
    check_point(x);
    const double lo = static_cast<double>(l) - m;
    const double hi = static_cast<double>(l) + m;
    const double b = std::sqrt((2.0 * l + 1.0) * lo * hi / (2.0 * l - 1.0));
    const ScaledReal num = ScaledReal::from_double(-static_cast<double>(l) * x) * p_l +
                           ScaledReal::from_double(b) * p_lm1;
    return (num / ScaledReal::from_double((1.0 - x) * (1.0 + x))).to_double();
}

} // namespace bfly::legendre
