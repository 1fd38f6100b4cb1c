#ifndef BFLY_ORACLES_HPP
#define BFLY_ORACLES_HPP

#include <Eigen/Dense>

namespace bfly::oracles {

// Reference results computed by routes independent of the fast paths they
// check: dense SVD, exact rational integration, and 50-digit arithmetic
// through the classical one-step degree recurrence.

Eigen::VectorXd singular_values(const Eigen::MatrixXd& a);
double spectral_norm(const Eigen::MatrixXd& a);

// integral over (-1,1) of x^(2q) (1-x^2)^m, by binomial expansion in exact
// rational arithmetic.
double monomial_weight_integral(int q, int m);

// Normalized associated Legendre value of order m and degree l at x,
// evaluated in 50-decimal-digit floating point.
double reference_legendre(int m, int l, double x);

} // namespace bfly::oracles

#endif
