#ifndef BFLY_LEGENDRE_HPP
#define BFLY_LEGENDRE_HPP

#include <memory>
#include <vector>

#include "bfly/scaled_real.hpp"

namespace bfly::legendre {

// Degree chains of fixed order m and fixed parity of l-m.  The even chain
// visits l = m, m+2, m+4, ...; the odd chain visits l = m+1, m+3, ...
enum class Parity { even, odd };

struct FirstValues {
    ScaledReal p_m;   // normalized P of degree m
    ScaledReal p_m1;  // degree m+1
    ScaledReal p_m2;  // degree m+2
    ScaledReal p_m3;  // degree m+3
};

// Seed values of the normalized associated Legendre functions of order m at
// x in (-1,1), computed by exponent-tracked products so that orders of
// 50000 and beyond neither underflow nor overflow.
FirstValues first_values(int m, double x);

// (1/sqrt 2) * prod_{k=1..m} sqrt((2k+1)/(2k)); the x-independent part of
// the degree-m seed.  O(m), worth caching when seeding many sweeps.
ScaledReal order_prefactor(int m);
FirstValues first_values(int m, double x, const ScaledReal& prefactor);

// Coefficients c_l, d_l of the three-term relation in the degree,
//   x^2 P(l) = c_{l-2} P(l-2) + d_l P(l) + c_l P(l+2),
// stored for l = m, m+1, ..., l_max.  A single table is shared between the
// sweeps of all nodes of a transform; when shared across threads it must be
// pre-sized (ensure) before the sweeps start.
class RecurrenceCoefficients {
public:
    RecurrenceCoefficients(int m, int l_max);

    int order() const { return m_; }
    double c(int l) const { return c_[static_cast<std::size_t>(l - m_)]; }
    double d(int l) const { return d_[static_cast<std::size_t>(l - m_)]; }
    int l_max() const { return m_ + static_cast<int>(c_.size()) - 1; }

    void ensure(int l_max);

private:
    int m_;
    std::vector<double> c_;
    std::vector<double> d_;
};

// Stateful walk along one degree chain at a fixed point x.  next() returns
// P(m+2j) (even) or P(m+2j+1) (odd) for j = 0, 1, 2, ... at O(1) cost per
// step.  Single-owner mutable state; distinct sweeps are independent.
class DegreeSweep {
public:
    DegreeSweep(int m, double x, Parity parity,
                std::shared_ptr<RecurrenceCoefficients> coeffs);
    DegreeSweep(int m, double x, Parity parity,
                std::shared_ptr<RecurrenceCoefficients> coeffs,
                const FirstValues& seeds);

    ScaledReal next();

    int order() const { return m_; }
    double point() const { return x_; }
    Parity parity() const { return parity_; }
    // Degree emitted by the upcoming next().
    int next_degree() const {
        return m_ + 2 * next_j_ + (parity_ == Parity::odd ? 1 : 0);
    }

private:
    int m_;
    double x_;
    double x2_;
    Parity parity_;
    std::shared_ptr<RecurrenceCoefficients> coeffs_;
    ScaledReal prev2_;  // value two chain steps back
    ScaledReal prev_;   // previous value
    int next_j_ = 0;
};

DegreeSweep make_sweep(int m, double x, Parity parity);
DegreeSweep make_sweep(int m, double x, Parity parity,
                       std::shared_ptr<RecurrenceCoefficients> coeffs);

// P(l) of order m at x by running a fresh sweep; O(l - m) cost.
ScaledReal chain_value(int m, int l, double x);

// d/dx of the normalized function of degree l and order m, from
//   (1-x^2) P'(l) = -l x P(l) + sqrt((2l+1)(l^2-m^2)/(2l-1)) P(l-1).
// p_l and p_lm1 are the values of degrees l and l-1 at x (pass zero for
// p_lm1 when l = m).
double derivative(int m, int l, double x, const ScaledReal& p_l,
                  const ScaledReal& p_lm1);

} // namespace bfly::legendre

#endif
