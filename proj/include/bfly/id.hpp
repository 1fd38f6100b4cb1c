#ifndef BFLY_ID_HPP
#define BFLY_ID_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace bfly {

// Interpolative decomposition of a block A: k columns of A (the skeleton,
// identified by column_indices) and a k x n interpolation matrix such that
//   A(:, column_indices) * interpolation ~= A.
// The columns of `interpolation` at positions column_indices form the k x k
// identity.  Entries are expected to stay within magnitude 2; the pivoted-QR
// construction used here does not enforce that bound, so a violation is
// counted and reported on stderr once rather than treated as an error (see
// id_entry_bound_violations).
struct InterpolativeDecomposition {
    Eigen::Index rank = 0;
    std::vector<Eigen::Index> column_indices;
    Eigen::MatrixXd interpolation;
};

// ID of exactly rank k, 1 <= k <= min(rows, cols), by column-pivoted
// Householder QR and back-substitution of the leading triangle.
InterpolativeDecomposition id_fixed_rank(
    const Eigen::Ref<const Eigen::MatrixXd>& block, Eigen::Index k);

// Smallest rank found by the pivoted sweep whose residual passes the
// relative Frobenius tolerance: the sweep stops at the first k where the
// largest remaining pivot column norm drops below
// epsilon * ||block||_F / sqrt(cols), and the exact trailing residual is
// then certified (and k incremented while it exceeds epsilon * ||block||_F).
// A zero block yields rank 1 with interpolation row (1, 0, ..., 0).
InterpolativeDecomposition id_adaptive(
    const Eigen::Ref<const Eigen::MatrixXd>& block, double epsilon);

// skeleton * interpolation; `skeleton` must have id.rank columns.
Eigen::MatrixXd id_reconstruct(const InterpolativeDecomposition& id,
                               const Eigen::Ref<const Eigen::MatrixXd>& skeleton);

// Running count of interpolation entries seen beyond magnitude 2.
std::uint64_t id_entry_bound_violations();

} // namespace bfly

#endif
