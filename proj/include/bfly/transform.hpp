#ifndef BFLY_TRANSFORM_HPP
#define BFLY_TRANSFORM_HPP

#include <memory>

#include "bfly/butterfly.hpp"
#include "bfly/column_source.hpp"
#include "bfly/legendre.hpp"
#include "bfly/quadrature.hpp"

namespace bfly::transform {

using legendre::Parity;
using quadrature::QuadratureRule;

// Columns of the transform matrix A with A(i, j) = sqrt(w_i) * P(m + 2j)
// evaluated at node i (odd parity: degree m + 2j + 1), produced one degree
// step at a time by a sweep per node, so reading all n columns costs one
// recurrence pass per node.  Values convert to doubles per column with the
// column's maximum exponent guarding the underflow cutoff; entries more than
// 2^1100 below the column scale flush to zero.
class LegendreColumnSource final : public ColumnSource {
public:
    LegendreColumnSource(int m, Parity parity, const QuadratureRule& rule);

    Eigen::Index rows() const override { return n_; }
    Eigen::Index cols() const override { return n_; }
    void next_columns(Eigen::Ref<Eigen::MatrixXd> out) override;
    void reset() override;

private:
    int m_;
    Parity parity_;
    Eigen::Index n_;
    std::vector<double> nodes_;
    std::vector<double> sqrt_weights_;
    std::shared_ptr<legendre::RecurrenceCoefficients> coeffs_;
    std::vector<legendre::DegreeSweep> sweeps_;
    Eigen::Index next_col_ = 0;
};

// The butterfly plan of one unitary transform: coefficients of the degree
// chain (m+2j or m+2j+1) to weighted values at the positive quadrature
// nodes.  The inverse map is the transpose.
struct TransformPlan {
    int m = 0;
    Eigen::Index n = 0;
    Parity parity = Parity::even;
    QuadratureRule rule;
    ButterflyPlan plan;
};

TransformPlan build_transform(int m, Eigen::Index n, Parity parity,
                              double epsilon, Eigen::Index block_width = 60);

// Same, around an already computed (e.g. cached) rule for (m, n, parity).
TransformPlan build_transform(QuadratureRule rule, double epsilon,
                              Eigen::Index block_width = 60);

// alpha = A * coeffs.
Eigen::VectorXd forward(const TransformPlan& tp,
                        const Eigen::Ref<const Eigen::VectorXd>& coeffs);

// A^T * values; inverts forward() since A is unitary.
Eigen::VectorXd inverse(const TransformPlan& tp,
                        const Eigen::Ref<const Eigen::VectorXd>& values);

// Entrywise conversion between weighted node values (the convention of
// forward()) and plain node values: multiply or divide by sqrt(w_i).
enum class ScalingDirection { to_weighted, from_weighted };
Eigen::VectorXd node_scaling(const TransformPlan& tp,
                             const Eigen::Ref<const Eigen::VectorXd>& values,
                             ScalingDirection direction);

} // namespace bfly::transform

#endif
