#include "bfly/oracles.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>

namespace bfly::oracles {

namespace {
using Big = boost::multiprecision::cpp_bin_float_50;
using BigInt = boost::multiprecision::cpp_int;
} // namespace

Eigen::VectorXd singular_values(const Eigen::MatrixXd& a) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
    return svd.singularValues();
}

double spectral_norm(const Eigen::MatrixXd& a) {
    if (a.size() == 0) return 0.0;
    return singular_values(a)(0);
}

double monomial_weight_integral(int q, int m) {
    if (q < 0 || m < 0)
        throw std::invalid_argument("monomial_weight_integral: negative arg");
    // sum_i (-1)^i C(m,i) * 2/(2q+2i+1), as one exact fraction.
    BigInt num = 0, den = 1;
    BigInt binom = 1;
    for (int i = 0; i <= m; ++i) {
        const BigInt term_den = 2 * q + 2 * i + 1;
        const BigInt signed_binom = (i % 2 == 0) ? binom : -binom;
        num = num * term_den + signed_binom * 2 * den;
        den *= term_den;
        binom = binom * (m - i) / (i + 1);
    }
    return static_cast<double>(Big(num) / Big(den));
}

double reference_legendre(int m, int l, double x) {
    if (m < 0 || l < m)
        throw std::invalid_argument("reference_legendre: need 0 <= m <= l");
    if (!(x > -1.0 && x < 1.0))
        throw std::invalid_argument("reference_legendre: need |x| < 1");

    const Big xb(x);
    const Big one_minus_x2 = (Big(1) - xb) * (Big(1) + xb);

    // Unnormalized P(m,m) = (2m-1)!! (1-x^2)^(m/2), stepped up in degree by
    //   (l-m+1) P(m,l+1) = (2l+1) x P(m,l) - (l+m) P(m,l-1).
    Big p_prev = pow(sqrt(one_minus_x2), m);
    for (int k = 1; k <= m; ++k) p_prev *= 2 * k - 1;
    Big p = p_prev;
    if (l > m) {
        p = (2 * m + 1) * xb * p_prev;
        for (int deg = m + 1; deg < l; ++deg) {
            const Big next =
                ((2 * deg + 1) * xb * p - Big(deg + m) * p_prev) / (deg - m + 1);
            p_prev = p;
            p = next;
        }
    }

    // Normalization sqrt((2l+1)/2 * (l-m)!/(l+m)!).
    Big ratio = Big(2 * l + 1) / 2;
    for (int k = l - m + 1; k <= l + m; ++k) ratio /= k;
    return static_cast<double>(sqrt(ratio) * p);
}

} // namespace bfly::oracles
