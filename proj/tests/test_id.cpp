#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bfly/id.hpp"
#include "bfly/oracles.hpp"
#include "bfly/quadrature.hpp"
#include "bfly/rng.hpp"
#include "bfly/transform.hpp"

using namespace bfly;

namespace {

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols,
                                std::uint64_t seed) {
    CounterRng rng(seed);
    Eigen::MatrixXd a(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            // Box-Muller on two uniforms mapped into (0,1).
            const double u1 = 0.5 * (rng.next_open() + 1.0);
            const double u2 = 0.5 * (rng.next_open() + 1.0);
            a(i, j) = std::sqrt(-2.0 * std::log(u1 + 1e-300)) *
                      std::cos(2.0 * M_PI * u2);
        }
    }
    return a;
}

Eigen::MatrixXd skeleton_of(const Eigen::MatrixXd& block,
                            const InterpolativeDecomposition& id) {
    Eigen::MatrixXd skel(block.rows(), id.rank);
    for (Eigen::Index j = 0; j < id.rank; ++j)
        skel.col(j) = block.col(id.column_indices[static_cast<std::size_t>(j)]);
    return skel;
}

void check_identity_submatrix(const InterpolativeDecomposition& id) {
    for (Eigen::Index j = 0; j < id.rank; ++j) {
        const Eigen::Index c = id.column_indices[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < id.rank; ++i)
            CHECK(id.interpolation(i, c) == (i == j ? 1.0 : 0.0));
    }
}

} // namespace

TEST_CASE("identity block is reproduced exactly at full rank") {
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
    const auto id = id_fixed_rank(eye, 3);
    CHECK(id.rank == 3);
    std::vector<Eigen::Index> sorted(id.column_indices);
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<Eigen::Index>{0, 1, 2});
    check_identity_submatrix(id);
    CHECK((id_reconstruct(id, skeleton_of(eye, id)) - eye).norm() == 0.0);
}

TEST_CASE("rank-one outer product is exact at k = 1") {
    Eigen::VectorXd u(10), v(8);
    for (int i = 0; i < 10; ++i) u(i) = 0.3 + 0.1 * i;
    for (int j = 0; j < 8; ++j) v(j) = 1.7 - 0.4 * j + 0.01 * j * j;
    const Eigen::MatrixXd a = u * v.transpose();
    const auto id = id_fixed_rank(a, 1);
    const Eigen::MatrixXd rec = id_reconstruct(id, skeleton_of(a, id));
    CHECK((rec - a).norm() <= 1e-14 * a.norm());
}

TEST_CASE("fixed-rank spectral error is within the pivoted-QR bound") {
    const Eigen::MatrixXd a = gaussian_matrix(50, 50, 7);
    const Eigen::Index k = 20;
    const auto id = id_fixed_rank(a, k);
    const Eigen::VectorXd sv = oracles::singular_values(a);
    const double bound = std::sqrt(4.0 * 20.0 * 30.0 + 1.0) * sv(k);
    const double err =
        oracles::spectral_norm(id_reconstruct(id, skeleton_of(a, id)) - a);
    CHECK(err <= bound);
    CHECK(id.interpolation.cwiseAbs().maxCoeff() <= 2.0 + 1e-12);
    check_identity_submatrix(id);
}

TEST_CASE("fixed rank equal to a dimension reconstructs exactly") {
    const Eigen::MatrixXd a = gaussian_matrix(6, 10, 11);
    const auto id = id_fixed_rank(a, 6);  // k = rows < cols
    const Eigen::MatrixXd rec = id_reconstruct(id, skeleton_of(a, id));
    CHECK((rec - a).norm() <= 1e-13 * a.norm());

    const Eigen::MatrixXd b = gaussian_matrix(10, 6, 13);
    const auto idb = id_fixed_rank(b, 6);  // k = cols
    CHECK((id_reconstruct(idb, skeleton_of(b, idb)) - b).norm() == 0.0);
}

TEST_CASE("adaptive keeps full rank when epsilon is below the spectrum") {
    const Eigen::MatrixXd a = gaussian_matrix(8, 6, 3);
    const Eigen::VectorXd sv = oracles::singular_values(a);
    const double eps = 0.1 * sv(5) / a.norm();
    const auto id = id_adaptive(a, eps);
    CHECK(id.rank == 6);
    CHECK((id_reconstruct(id, skeleton_of(a, id)) - a).norm() <=
          1e-13 * a.norm());
}

TEST_CASE("adaptive truncates a graded diagonal at the expected rank") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
    a(0, 0) = 1.0;
    a(1, 1) = 1e-4;
    a(2, 2) = 1e-16;
    const auto id = id_adaptive(a, 1e-8);
    CHECK(id.rank == 2);
    const Eigen::MatrixXd rec = id_reconstruct(id, skeleton_of(a, id));
    CHECK((rec - a).norm() <= 1e-8 * a.norm());
}

TEST_CASE("adaptive compresses a Legendre transform block") {
    const auto rule = quadrature::build_rule(0, 512, legendre::Parity::even);
    transform::LegendreColumnSource source(0, legendre::Parity::even, rule);
    Eigen::MatrixXd cols(512, 60);
    source.next_columns(cols);
    const Eigen::MatrixXd block = cols.topRows(64);

    const auto id = id_adaptive(block, 1e-14);
    CHECK(id.rank < 60);
    const Eigen::MatrixXd rec = id_reconstruct(id, skeleton_of(block, id));
    CHECK((rec - block).norm() <= 1e-14 * block.norm());
}

TEST_CASE("zero block uses the rank-one convention") {
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(5, 7);
    const auto id = id_adaptive(zero, 1e-12);
    CHECK(id.rank == 1);
    CHECK(id.column_indices == std::vector<Eigen::Index>{0});
    CHECK(id.interpolation(0, 0) == 1.0);
    CHECK(id.interpolation.row(0).tail(6).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("argument errors are rejected") {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(4, 4);
    CHECK_THROWS_AS(id_fixed_rank(a, 0), std::invalid_argument);
    CHECK_THROWS_AS(id_fixed_rank(a, 5), std::invalid_argument);
    CHECK_THROWS_AS(id_adaptive(a, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(id_adaptive(a, -1e-3), std::invalid_argument);

    InterpolativeDecomposition id = id_fixed_rank(a, 2);
    CHECK_THROWS_AS(id_reconstruct(id, Eigen::MatrixXd::Zero(4, 3)),
                    std::invalid_argument);
}

TEST_CASE("certified bound and entry bound hold across random ranks") {
    CounterRng pick(99);
    for (int trial = 0; trial < 25; ++trial) {
        const Eigen::Index rows = 20 + static_cast<Eigen::Index>(
                                           pick.next_u64() % 30);
        const Eigen::Index cols = 20 + static_cast<Eigen::Index>(
                                           pick.next_u64() % 30);
        const Eigen::MatrixXd a =
            gaussian_matrix(rows, cols, 1000 + static_cast<std::uint64_t>(trial));
        const Eigen::Index k =
            1 + static_cast<Eigen::Index>(pick.next_u64() %
                                          static_cast<std::uint64_t>(
                                              std::min(rows, cols)));
        const auto id = id_fixed_rank(a, k);
        check_identity_submatrix(id);
        CHECK(id.interpolation.cwiseAbs().maxCoeff() <= 2.0 + 1e-12);
        if (k < std::min(rows, cols)) {
            const Eigen::VectorXd sv = oracles::singular_values(a);
            const double bound =
                std::sqrt(4.0 * static_cast<double>(k) *
                              static_cast<double>(cols - k) +
                          1.0) *
                sv(k);
            const double err = oracles::spectral_norm(
                id_reconstruct(id, skeleton_of(a, id)) - a);
            CHECK(err <= bound);
        }
    }
}

TEST_CASE("adaptive rank is reproducible through the fixed-rank path") {
    const Eigen::MatrixXd lowrank =
        gaussian_matrix(40, 12, 21) * gaussian_matrix(12, 35, 22) +
        1e-9 * gaussian_matrix(40, 35, 23);
    const auto adaptive = id_adaptive(lowrank, 1e-6);
    const auto fixed = id_fixed_rank(lowrank, adaptive.rank);
    const double err_a =
        (id_reconstruct(adaptive, skeleton_of(lowrank, adaptive)) - lowrank)
            .norm();
    const double err_f =
        (id_reconstruct(fixed, skeleton_of(lowrank, fixed)) - lowrank).norm();
    CHECK(err_f <= 10.0 * std::max(err_a, 1e-16 * lowrank.norm()));
}
