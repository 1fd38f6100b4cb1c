#ifndef BFLY_BUTTERFLY_HPP
#define BFLY_BUTTERFLY_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "bfly/column_source.hpp"
#include "bfly/id.hpp"

namespace bfly {

// One interpolation step of the multilevel representation.  Of the full
// rank x inputs interpolation matrix, only the non-identity block is kept:
// column_indices names the inputs whose columns form the identity, and
// `interpolation` holds the remaining columns (in ascending input order),
// so the step maps z to z[selected] + interpolation * z[others].
struct StripeId {
    std::vector<std::uint64_t> column_indices;
    Eigen::MatrixXd interpolation;  // rank x (inputs - rank)

    Eigen::Index rank() const { return interpolation.rows(); }
    Eigen::Index inputs() const {
        return static_cast<Eigen::Index>(column_indices.size()) +
               interpolation.cols();
    }
};

// Replayable build step.  `leaf` compresses one column range of the source
// into a single full-height stripe.  `merge` pairs the two most recently
// built blocks of equal level: stripe s of the result concatenates the two
// children's stripe-s coefficients, rows split top/bottom, and each half is
// recompressed (ids[2s] top, ids[2s+1] bottom, fed by left_ranks[s] left
// coefficients followed by the right ones).  `promote` does the same halving
// for a lone block so levels realign.  Applying the plan replays the events
// forward over a stack of per-stripe coefficient vectors; the transpose
// replays them backward with every matrix transposed.
struct PlanEvent {
    enum class Kind : std::uint8_t { leaf = 0, merge = 1, promote = 2 };

    Kind kind = Kind::leaf;
    std::uint64_t col_begin = 0;            // leaf only
    std::uint64_t col_count = 0;            // leaf only
    std::vector<std::uint64_t> left_ranks;  // merge: per input stripe
    std::vector<StripeId> ids;  // leaf: 1; merge/promote: per output stripe
};

struct RootStripe {
    std::uint64_t row_begin = 0;
    std::uint64_t row_count = 0;
    Eigen::MatrixXd skeleton;  // row_count x rank, verbatim source columns
};

// Compressed multilevel representation.  Merging runs until one block
// remains or until a further row split would push stripes below
// max(2 * current rank, block_width); the skeletons of every block still
// pending at that point are retained as root stripes, grouped per surviving
// block in stack order.
struct ButterflyPlan {
    std::uint64_t n_rows = 0;
    std::uint64_t n_cols = 0;
    double epsilon = 0.0;
    std::uint64_t block_width = 0;
    std::uint64_t levels = 0;  // deepest level reached by a surviving block

    std::vector<PlanEvent> events;
    std::vector<std::vector<RootStripe>> root_groups;

    // Build telemetry.  Word counts cover stored matrix entries only
    // (skeletons and interpolation matrices, not index maps).
    std::uint64_t m_max_words = 0;
    std::uint64_t stored_words = 0;
    double t_comp_seconds = 0.0;
};

struct PlanStats {
    std::uint64_t k_max = 0;
    double k_avg = 0.0;
    double k_sigma = 0.0;
    std::uint64_t id_count = 0;
    std::uint64_t levels = 0;
    std::uint64_t stored_words = 0;
    std::uint64_t m_max_words = 0;
    double t_comp_seconds = 0.0;
};

// Depth-first construction: each leaf is materialized from the source,
// compressed, and merged with its neighbor as soon as levels align, so peak
// memory stays near the final plan size instead of the dense matrix size.
ButterflyPlan build_plan(ColumnSource& source, double epsilon,
                         Eigen::Index block_width = 60);

Eigen::VectorXd apply(const ButterflyPlan& plan,
                      const Eigen::Ref<const Eigen::VectorXd>& v);
Eigen::VectorXd apply_transpose(const ButterflyPlan& plan,
                                const Eigen::Ref<const Eigen::VectorXd>& w);

// Rank statistics over every ID in the plan, plus stored-word totals and
// build telemetry.
PlanStats plan_stats(const ButterflyPlan& plan);

} // namespace bfly

#endif
