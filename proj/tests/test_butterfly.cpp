#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bfly/butterfly.hpp"
#include "bfly/oracles.hpp"
#include "bfly/rng.hpp"
#include "bfly/transform.hpp"

using namespace bfly;

namespace {

// Smooth oscillatory kernel with the complementary low-rank structure the
// multilevel scheme expects.
Eigen::MatrixXd kernel_matrix(Eigen::Index n) {
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            a(i, j) = std::cos(8.0 * M_PI * (i + 0.5) * (j + 0.5) / n) /
                      std::sqrt(static_cast<double>(n));
    return a;
}

Eigen::MatrixXd legendre_dense(int m, Eigen::Index n,
                               legendre::Parity parity) {
    const auto rule = quadrature::build_rule(m, static_cast<int>(n), parity);
    transform::LegendreColumnSource source(m, parity, rule);
    return materialize(source);
}

void check_against_dense(const ButterflyPlan& plan, const Eigen::MatrixXd& a,
                         double tol, int n_vectors, std::uint64_t seed) {
    CounterRng rng(seed);
    for (int t = 0; t < n_vectors; ++t) {
        const Eigen::VectorXd v = rng.unit_vector(a.cols());
        const Eigen::VectorXd err = apply(plan, v) - a * v;
        CHECK(err.cwiseAbs().maxCoeff() <= tol);
        const Eigen::VectorXd w = rng.unit_vector(a.rows());
        const Eigen::VectorXd err_t = apply_transpose(plan, w) - a.transpose() * w;
        CHECK(err_t.cwiseAbs().maxCoeff() <= tol);
    }
}

} // namespace

TEST_CASE("identity source applies as the identity") {
    DenseColumnSource source(Eigen::MatrixXd::Identity(256, 256));
    const ButterflyPlan plan = build_plan(source, 1e-14, 60);

    CounterRng rng(17);
    const Eigen::VectorXd v = rng.unit_vector(256);
    CHECK((apply(plan, v) - v).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK((apply_transpose(plan, v) - v).cwiseAbs().maxCoeff() <= 1e-13);

    const PlanStats st = plan_stats(plan);
    CHECK(st.k_max == 60);
    for (const PlanEvent& ev : plan.events)
        for (const StripeId& sid : ev.ids) CHECK(sid.rank() <= 60);
}

TEST_CASE("eight full-width leaves of a low-rank source give four levels") {
    const Eigen::Index n = 8 * 60;
    CounterRng rng(3);
    Eigen::MatrixXd u(n, 10), w(10, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < 10; ++j) {
            u(i, j) = rng.next_open();
            w(j, i) = rng.next_open();
        }
    const Eigen::MatrixXd a = u * w / static_cast<double>(n);

    DenseColumnSource source(a);
    const ButterflyPlan plan = build_plan(source, 1e-12, 60);
    CHECK(plan.levels == 4);  // 1 + log2(8)
    CHECK(plan.root_groups.size() == 1);
    check_against_dense(plan, a, 1e-11 * a.norm(), 5, 31);
}

TEST_CASE("legendre source matches the dense oracle") {
    const Eigen::MatrixXd a = legendre_dense(0, 512, legendre::Parity::even);
    DenseColumnSource source(a);
    const ButterflyPlan plan = build_plan(source, 1e-14, 60);

    const PlanStats st = plan_stats(plan);
    CHECK(st.k_max <= 120);
    CHECK(st.k_sigma >= 0.0);
    CHECK(st.k_avg <= static_cast<double>(st.k_max));

    check_against_dense(plan, a, 1e-12, 10, 41);

    // Adjoint identity.
    CounterRng rng(43);
    for (int t = 0; t < 10; ++t) {
        const Eigen::VectorXd v = rng.unit_vector(512);
        const Eigen::VectorXd w = rng.unit_vector(512);
        const double lhs = apply(plan, v).dot(w);
        const double rhs = v.dot(apply_transpose(plan, w));
        CHECK(std::abs(lhs - rhs) <= 1e-12);
    }

    // Entry bound on every stored interpolation matrix.
    for (const PlanEvent& ev : plan.events)
        for (const StripeId& sid : ev.ids)
            if (sid.interpolation.size() > 0)
                CHECK(sid.interpolation.cwiseAbs().maxCoeff() <= 2.0 + 1e-12);
}

TEST_CASE("oracle equivalence holds for a generic oscillatory kernel") {
    const Eigen::MatrixXd a = kernel_matrix(300);
    DenseColumnSource source(a);
    const double eps = 1e-13;
    const ButterflyPlan plan = build_plan(source, eps, 60);
    CounterRng rng(57);
    for (int t = 0; t < 100; ++t) {
        const Eigen::VectorXd v = rng.unit_vector(300);
        const double err = (apply(plan, v) - a * v).cwiseAbs().maxCoeff();
        CHECK(err <= 10.0 * eps * a.norm());
    }
}

TEST_CASE("ragged trailing leaf is narrower and still exact") {
    const Eigen::MatrixXd a = kernel_matrix(130);
    DenseColumnSource source(a);
    const ButterflyPlan plan = build_plan(source, 1e-13, 60);

    std::vector<std::uint64_t> widths;
    for (const PlanEvent& ev : plan.events)
        if (ev.kind == PlanEvent::Kind::leaf) widths.push_back(ev.col_count);
    CHECK(widths == std::vector<std::uint64_t>{60, 60, 10});
    check_against_dense(plan, a, 1e-11, 10, 59);
}

TEST_CASE("zero vector maps to zero") {
    DenseColumnSource source(kernel_matrix(64));
    const ButterflyPlan plan = build_plan(source, 1e-13, 16);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(64);
    CHECK(apply(plan, zero).cwiseAbs().maxCoeff() == 0.0);
    CHECK(apply_transpose(plan, zero).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dimension and argument errors are rejected") {
    DenseColumnSource source(kernel_matrix(64));
    const ButterflyPlan plan = build_plan(source, 1e-13, 16);
    CHECK_THROWS_AS(apply(plan, Eigen::VectorXd::Zero(63)),
                    std::invalid_argument);
    CHECK_THROWS_AS(apply_transpose(plan, Eigen::VectorXd::Zero(65)),
                    std::invalid_argument);

    DenseColumnSource bad(kernel_matrix(16));
    CHECK_THROWS_AS(build_plan(bad, 0.0, 8), std::invalid_argument);
    CHECK_THROWS_AS(build_plan(bad, -1.0, 8), std::invalid_argument);
    CHECK_THROWS_AS(build_plan(bad, 1e-10, 1), std::invalid_argument);
}

TEST_CASE("peak build memory stays near the stored plan size") {
    const Eigen::MatrixXd a = legendre_dense(0, 512, legendre::Parity::even);
    DenseColumnSource source(a);
    const ButterflyPlan plan = build_plan(source, 1e-14, 60);
    CHECK(plan.m_max_words >= plan.stored_words);
    CHECK(plan.m_max_words <= 5 * plan.stored_words);
    CHECK(plan_stats(plan).m_max_words == plan.m_max_words);
}

TEST_CASE("depth-first build keeps peak memory and ranks stable while n doubles") {
    PlanStats stats[2];
    int i = 0;
    for (const Eigen::Index n : {1024, 2048}) {
        const auto rule =
            quadrature::build_rule(0, static_cast<int>(n), legendre::Parity::even);
        transform::LegendreColumnSource source(0, legendre::Parity::even, rule);
        const ButterflyPlan plan = build_plan(source, 1e-14, 60);
        CHECK(plan.m_max_words <= 5 * plan.stored_words);
        stats[i++] = plan_stats(plan);
    }
    CHECK(std::abs(stats[1].k_avg - stats[0].k_avg) <= 0.15 * stats[0].k_avg);
}

TEST_CASE("narrow source collapses to a single leaf plan") {
    CounterRng rng(71);
    Eigen::MatrixXd a(40, 7);
    for (Eigen::Index j = 0; j < 7; ++j) a.col(j) = rng.vector(40);
    DenseColumnSource source(a);
    const ButterflyPlan plan = build_plan(source, 1e-13, 60);
    CHECK(plan.levels == 1);
    CHECK(plan.events.size() == 1);
    check_against_dense(plan, a, 1e-12 * a.norm(), 5, 73);
}
