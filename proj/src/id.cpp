#include "bfly/id.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace bfly {

namespace {

std::atomic<std::uint64_t> g_entry_bound_violations{0};

void note_entry_bound(double worst) {
    if (g_entry_bound_violations.fetch_add(1) == 0)
        std::fprintf(stderr,
                     "bfly: interpolation entry magnitude %.3g exceeds 2\n",
                     worst);
}

struct PivotedQr {
    Eigen::MatrixXd w;                  // Householder vectors + R
    std::vector<Eigen::Index> perm;     // column j of w is block column perm[j]
    Eigen::Index steps = 0;
};

// Column-pivoted Householder QR, stopped after k_target steps (or, when
// k_target < 0, at the first step where the largest remaining column norm
// falls below `threshold` and the exact trailing Frobenius residual is below
// `residual_limit`).
PivotedQr pivoted_qr(const Eigen::Ref<const Eigen::MatrixXd>& block,
                     Eigen::Index k_target, double threshold,
                     double residual_limit) {
    const Eigen::Index m = block.rows(), n = block.cols();
    const Eigen::Index k_cap = std::min(m, n);

    PivotedQr qr;
    qr.w = block;
    qr.perm.resize(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) qr.perm[static_cast<std::size_t>(j)] = j;

    Eigen::VectorXd norms(n), norms_ref(n);
    for (Eigen::Index j = 0; j < n; ++j) norms(j) = qr.w.col(j).norm();
    norms_ref = norms;

    Eigen::VectorXd householder(m);

    auto exact_trailing_residual = [&](Eigen::Index k) {
        double sum = 0.0;
        for (Eigen::Index j = k; j < n; ++j) {
            const double t = qr.w.col(j).tail(m - k).norm();
            norms(j) = t;
            norms_ref(j) = t;
            sum += t * t;
        }
        return std::sqrt(sum);
    };

    Eigen::Index j = 0;
    while (j < k_cap) {
        Eigen::Index pivot = j;
        for (Eigen::Index l = j + 1; l < n; ++l)
            if (norms(l) > norms(pivot)) pivot = l;

        if (k_target < 0 && norms(pivot) <= threshold && j > 0) {
            // Candidate stop; certify against exactly recomputed norms.
            if (exact_trailing_residual(j) <= residual_limit) break;
            for (Eigen::Index l = j + 1; l < n; ++l)
                if (norms(l) > norms(pivot)) pivot = l;
        }
        if (k_target >= 0 && j == k_target) break;

        if (pivot != j) {
            qr.w.col(j).swap(qr.w.col(pivot));
            std::swap(norms(j), norms(pivot));
            std::swap(norms_ref(j), norms_ref(pivot));
            std::swap(qr.perm[static_cast<std::size_t>(j)],
                      qr.perm[static_cast<std::size_t>(pivot)]);
        }

        // Householder reflector annihilating w(j+1: , j).
        const Eigen::Index tail = m - j;
        double sigma = qr.w.col(j).tail(tail).norm();
        if (sigma > 0.0) {
            const double alpha = qr.w(j, j) >= 0.0 ? -sigma : sigma;
            householder.head(tail) = qr.w.col(j).tail(tail);
            householder(0) -= alpha;
            const double vnorm2 = householder.head(tail).squaredNorm();
            if (vnorm2 > 0.0) {
                const double beta = 2.0 / vnorm2;
                auto trailing = qr.w.block(j, j + 1, tail, n - j - 1);
                Eigen::RowVectorXd proj =
                    householder.head(tail).transpose() * trailing;
                trailing.noalias() -= beta * householder.head(tail) * proj;
            }
            qr.w(j, j) = alpha;
            qr.w.col(j).tail(tail - 1).setZero();
        }

        // Downdate the running column norms; recompute a column exactly when
        // cancellation has eaten the estimate (LAPACK-style guard).
        for (Eigen::Index l = j + 1; l < n; ++l) {
            if (norms(l) == 0.0) continue;
            double t = qr.w(j, l) / norms(l);
            t = std::max(0.0, (1.0 - t) * (1.0 + t));
            const double ratio = norms(l) / norms_ref(l);
            if (t * ratio * ratio <= 1e-14) {
                norms(l) = qr.w.col(l).tail(m - j - 1).norm();
                norms_ref(l) = norms(l);
            } else {
                norms(l) *= std::sqrt(t);
            }
        }
        ++j;
    }
    qr.steps = j;
    return qr;
}

// T = R11^{-1} R12 by back substitution on the top k rows of the factored
// matrix; rows with a vanishing diagonal carry no information and are
// zeroed.
Eigen::MatrixXd interpolation_coefficients(const Eigen::MatrixXd& w,
                                           Eigen::Index k) {
    const Eigen::Index n = w.cols();
    Eigen::MatrixXd t(k, n - k);
    for (Eigen::Index c = 0; c < n - k; ++c) {
        for (Eigen::Index i = k - 1; i >= 0; --i) {
            double s = w(i, k + c);
            for (Eigen::Index l = i + 1; l < k; ++l) s -= w(i, l) * t(l, c);
            const double diag = w(i, i);
            t(i, c) = (diag == 0.0) ? 0.0 : s / diag;
        }
    }
    return t;
}

// Unpivoted Householder elimination of the first k columns of block[:, perm],
// keeping the top k rows of R.
Eigen::MatrixXd refactor(const Eigen::Ref<const Eigen::MatrixXd>& block,
                         const std::vector<Eigen::Index>& perm, Eigen::Index k) {
    const Eigen::Index m = block.rows(), n = block.cols();
    Eigen::MatrixXd w(m, n);
    for (Eigen::Index j = 0; j < n; ++j)
        w.col(j) = block.col(perm[static_cast<std::size_t>(j)]);
    Eigen::VectorXd householder(m);
    for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::Index tail = m - j;
        const double sigma = w.col(j).tail(tail).norm();
        if (sigma == 0.0) continue;
        const double alpha = w(j, j) >= 0.0 ? -sigma : sigma;
        householder.head(tail) = w.col(j).tail(tail);
        householder(0) -= alpha;
        const double vnorm2 = householder.head(tail).squaredNorm();
        if (vnorm2 > 0.0) {
            const double beta = 2.0 / vnorm2;
            auto trailing = w.block(j, j + 1, tail, n - j - 1);
            Eigen::RowVectorXd proj = householder.head(tail).transpose() * trailing;
            trailing.noalias() -= beta * householder.head(tail) * proj;
        }
        w(j, j) = alpha;
        w.col(j).tail(tail - 1).setZero();
    }
    return w;
}

InterpolativeDecomposition finish_id(PivotedQr&& qr,
                                     const Eigen::Ref<const Eigen::MatrixXd>& block) {
    const Eigen::Index k = qr.steps;
    const Eigen::Index n = block.cols();

    // Swap refinement: while any coefficient exceeds magnitude 2, exchange
    // that selected/non-selected column pair and refactor.  Each swap grows
    // |det R11| by the coefficient's magnitude, so the loop is finite; past
    // the pass cap the bound is only reported, not enforced.
    Eigen::MatrixXd t = interpolation_coefficients(qr.w, k);
    for (int pass = 0; pass < 64 && t.size() > 0; ++pass) {
        Eigen::Index wi = 0, wj = 0;
        const double worst = t.cwiseAbs().maxCoeff(&wi, &wj);
        if (worst <= 2.0) break;
        std::swap(qr.perm[static_cast<std::size_t>(wi)],
                  qr.perm[static_cast<std::size_t>(k + wj)]);
        qr.w = refactor(block, qr.perm, k);
        t = interpolation_coefficients(qr.w, k);
    }

    InterpolativeDecomposition id;
    id.rank = k;
    id.column_indices.assign(qr.perm.begin(), qr.perm.begin() + k);

    id.interpolation = Eigen::MatrixXd::Zero(k, n);
    for (Eigen::Index j = 0; j < k; ++j)
        id.interpolation(j, qr.perm[static_cast<std::size_t>(j)]) = 1.0;
    for (Eigen::Index c = 0; c < n - k; ++c)
        id.interpolation.col(qr.perm[static_cast<std::size_t>(k + c)]) = t.col(c);

    if (k > 0 && n > k) {
        const double worst = t.cwiseAbs().maxCoeff();
        if (worst > 2.0) note_entry_bound(worst);
    }
    return id;
}

} // namespace

InterpolativeDecomposition id_fixed_rank(
    const Eigen::Ref<const Eigen::MatrixXd>& block, Eigen::Index k) {
    if (k < 1 || k > std::min(block.rows(), block.cols()))
        throw std::invalid_argument("id_fixed_rank: rank out of range");
    PivotedQr qr = pivoted_qr(block, k, 0.0, 0.0);
    return finish_id(std::move(qr), block);
}

InterpolativeDecomposition id_adaptive(
    const Eigen::Ref<const Eigen::MatrixXd>& block, double epsilon) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("id_adaptive: epsilon must be positive");
    if (block.rows() < 1 || block.cols() < 1)
        throw std::invalid_argument("id_adaptive: empty block");

    const double fro = block.norm();
    if (fro == 0.0) {
        InterpolativeDecomposition id;
        id.rank = 1;
        id.column_indices = {0};
        id.interpolation = Eigen::MatrixXd::Zero(1, block.cols());
        id.interpolation(0, 0) = 1.0;
        return id;
    }

    const double threshold =
        epsilon * fro / std::sqrt(static_cast<double>(block.cols()));
    PivotedQr qr = pivoted_qr(block, -1, threshold, epsilon * fro);
    return finish_id(std::move(qr), block);
}

Eigen::MatrixXd id_reconstruct(const InterpolativeDecomposition& id,
                               const Eigen::Ref<const Eigen::MatrixXd>& skeleton) {
    if (skeleton.cols() != id.rank)
        throw std::invalid_argument("id_reconstruct: skeleton has " +
                                    std::to_string(skeleton.cols()) +
                                    " columns, expected " +
                                    std::to_string(id.rank));
    return skeleton * id.interpolation;
}

std::uint64_t id_entry_bound_violations() { return g_entry_bound_violations; }

} // namespace bfly
