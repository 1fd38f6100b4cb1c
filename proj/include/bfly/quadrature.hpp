#ifndef BFLY_QUADRATURE_HPP
#define BFLY_QUADRATURE_HPP

#include <memory>
#include <optional>
#include <vector>

#include "bfly/legendre.hpp"

namespace bfly::quadrature {

using legendre::Parity;

// Positive zeros and Gauss-Jacobi weights of the normalized associated
// Legendre function of order m and degree m+2n (even) or m+2n+1 (odd).
// The rule integrates (1-x^2)^m p(x) over (-1,1) exactly for even
// polynomials p of degree <= 4n-2 (even) or <= 4n (odd); the odd rule
// carries an extra weight for the node at x = 0.
struct QuadratureRule {
    int m = 0;
    int n = 0;
    Parity parity = Parity::even;
    std::vector<double> nodes;    // strictly increasing in (0,1)
    std::vector<double> weights;  // positive
    std::optional<double> center_weight;  // present iff parity == odd

    int target_degree() const {
        return m + 2 * n + (parity == Parity::odd ? 1 : 0);
    }
};

// All n positive zeros of the designated function, strictly increasing.
// Brackets come from a sign-change scan on a grid in theta = acos(x) that is
// refined until exactly n changes are found; each zero is then polished by
// safeguarded Newton iteration to a relative tolerance of 4 ulp.
std::vector<double> find_zeros(int m, int n, Parity parity);

// Gauss-Jacobi weights at certified zeros, via the closed-form derivative;
// the odd chain additionally yields the center weight at x = 0.
struct Weights {
    std::vector<double> weights;
    std::optional<double> center_weight;
};
Weights compute_weights(int m, int n, Parity parity,
                        const std::vector<double>& nodes);

// find_zeros + compute_weights + invariant checks (ordering, positivity,
// and the per-node residual certificate).
QuadratureRule build_rule(int m, int n, Parity parity);

// Synchronized in-memory cache keyed by (m, n, parity).
class RuleCache {
public:
    std::shared_ptr<const QuadratureRule> get(int m, int n, Parity parity);

private:
    struct Impl;
    std::shared_ptr<Impl> impl_ = make_impl();
    static std::shared_ptr<Impl> make_impl();
};

} // namespace bfly::quadrature

#endif
