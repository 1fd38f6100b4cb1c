#include "bfly/transform.hpp"

#include <cmath>
#include <stdexcept>

namespace bfly::transform {

using legendre::DegreeSweep;
using legendre::RecurrenceCoefficients;

LegendreColumnSource::LegendreColumnSource(int m, Parity parity,
                                           const QuadratureRule& rule)
    : m_(m),
      parity_(parity),
      n_(static_cast<Eigen::Index>(rule.nodes.size())),
      nodes_(rule.nodes) {
    sqrt_weights_.reserve(rule.weights.size());
    for (const double w : rule.weights) sqrt_weights_.push_back(std::sqrt(w));
    const int l_max = m_ + 2 * static_cast<int>(n_) + 3;
    coeffs_ = std::make_shared<RecurrenceCoefficients>(m_, l_max);
    reset();
}

void LegendreColumnSource::reset() {
    next_col_ = 0;
    sweeps_.clear();
    sweeps_.reserve(static_cast<std::size_t>(n_));
    const ScaledReal prefactor = legendre::order_prefactor(m_);
    for (Eigen::Index i = 0; i < n_; ++i) {
        const legendre::FirstValues seeds =
            legendre::first_values(m_, nodes_[static_cast<std::size_t>(i)], prefactor);
        sweeps_.emplace_back(m_, nodes_[static_cast<std::size_t>(i)], parity_,
                             coeffs_, seeds);
    }
}

void LegendreColumnSource::next_columns(Eigen::Ref<Eigen::MatrixXd> out) {
    if (next_col_ + out.cols() > n_)
        throw std::out_of_range("LegendreColumnSource: past the last column");
    std::vector<ScaledReal> column(static_cast<std::size_t>(n_));
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        std::int64_t e_max = 0;
        bool any = false;
        for (Eigen::Index i = 0; i < n_; ++i) {
            ScaledReal v = sweeps_[static_cast<std::size_t>(i)].next();
            if (!v.is_zero() && (!any || v.exponent > e_max)) {
                e_max = v.exponent;
                any = true;
            }
            column[static_cast<std::size_t>(i)] = v;
        }
        for (Eigen::Index i = 0; i < n_; ++i) {
            const ScaledReal& v = column[static_cast<std::size_t>(i)];
            const double value =
                (v.is_zero() || v.exponent - e_max < -1100) ? 0.0 : v.to_double();
            out(i, j) = sqrt_weights_[static_cast<std::size_t>(i)] * value;
        }
    }
    next_col_ += out.cols();
}

TransformPlan build_transform(int m, Eigen::Index n, Parity parity,
                              double epsilon, Eigen::Index block_width) {
    if (n < 1) throw std::invalid_argument("build_transform: n must be >= 1");
    if (m < 0) throw std::invalid_argument("build_transform: m must be >= 0");
    return build_transform(quadrature::build_rule(m, static_cast<int>(n), parity),
                           epsilon, block_width);
}

TransformPlan build_transform(QuadratureRule rule, double epsilon,
                              Eigen::Index block_width) {
    TransformPlan tp;
    tp.m = rule.m;
    tp.n = rule.n;
    tp.parity = rule.parity;
    tp.rule = std::move(rule);

    LegendreColumnSource source(tp.m, tp.parity, tp.rule);
    tp.plan = build_plan(source, epsilon, block_width);
    return tp;
}

Eigen::VectorXd forward(const TransformPlan& tp,
                        const Eigen::Ref<const Eigen::VectorXd>& coeffs) {
    return apply(tp.plan, coeffs);
}

Eigen::VectorXd inverse(const TransformPlan& tp,
                        const Eigen::Ref<const Eigen::VectorXd>& values) {
    return apply_transpose(tp.plan, values);
}

Eigen::VectorXd node_scaling(const TransformPlan& tp,
                             const Eigen::Ref<const Eigen::VectorXd>& values,
                             ScalingDirection direction) {
    if (values.size() != tp.n)
        throw std::invalid_argument("node_scaling: vector length mismatch");
    Eigen::VectorXd out(tp.n);
    for (Eigen::Index i = 0; i < tp.n; ++i) {
        const double s = std::sqrt(tp.rule.weights[static_cast<std::size_t>(i)]);
        out(i) = direction == ScalingDirection::to_weighted ? values(i) * s
                                                            : values(i) / s;
    }
    return out;
}

} // namespace bfly::transform
