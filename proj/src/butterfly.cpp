#include "bfly/butterfly.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bfly {

namespace {

struct RowRange {
    Eigen::Index begin = 0;
    Eigen::Index count = 0;
};

// Keeps only the non-identity columns of the interpolation matrix; the
// selected columns are an exact identity by construction.
StripeId to_stripe_id(InterpolativeDecomposition&& id) {
    StripeId out;
    out.column_indices.reserve(id.column_indices.size());
    for (const Eigen::Index j : id.column_indices)
        out.column_indices.push_back(static_cast<std::uint64_t>(j));

    const Eigen::Index inputs = id.interpolation.cols();
    std::vector<bool> selected(static_cast<std::size_t>(inputs), false);
    for (const Eigen::Index j : id.column_indices)
        selected[static_cast<std::size_t>(j)] = true;
    out.interpolation.resize(id.rank, inputs - id.rank);
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < inputs; ++j)
        if (!selected[static_cast<std::size_t>(j)])
            out.interpolation.col(c++) = id.interpolation.col(j);
    return out;
}

std::vector<Eigen::Index> complement_indices(const StripeId& sid) {
    const Eigen::Index inputs = sid.inputs();
    std::vector<bool> selected(static_cast<std::size_t>(inputs), false);
    for (const std::uint64_t j : sid.column_indices)
        selected[static_cast<std::size_t>(j)] = true;
    std::vector<Eigen::Index> others;
    others.reserve(static_cast<std::size_t>(inputs - sid.rank()));
    for (Eigen::Index j = 0; j < inputs; ++j)
        if (!selected[static_cast<std::size_t>(j)]) others.push_back(j);
    return others;
}

// z[selected] + interpolation * z[others]
Eigen::VectorXd interp_apply(const StripeId& sid,
                             const Eigen::Ref<const Eigen::VectorXd>& z) {
    const std::vector<Eigen::Index> others = complement_indices(sid);
    Eigen::VectorXd rest(static_cast<Eigen::Index>(others.size()));
    for (std::size_t j = 0; j < others.size(); ++j)
        rest(static_cast<Eigen::Index>(j)) = z(others[j]);
    Eigen::VectorXd out(sid.rank());
    for (Eigen::Index i = 0; i < sid.rank(); ++i)
        out(i) = z(static_cast<Eigen::Index>(sid.column_indices[
            static_cast<std::size_t>(i)]));
    out.noalias() += sid.interpolation * rest;
    return out;
}

// Transpose action: scatter c into the selected slots and interpolation^T c
// into the rest.
void interp_apply_transpose_add(const StripeId& sid,
                                const Eigen::Ref<const Eigen::VectorXd>& c,
                                Eigen::Ref<Eigen::VectorXd> z) {
    for (Eigen::Index i = 0; i < sid.rank(); ++i)
        z(static_cast<Eigen::Index>(
            sid.column_indices[static_cast<std::size_t>(i)])) += c(i);
    if (sid.interpolation.cols() > 0) {
        const std::vector<Eigen::Index> others = complement_indices(sid);
        const Eigen::VectorXd rest = sid.interpolation.transpose() * c;
        for (std::size_t j = 0; j < others.size(); ++j)
            z(others[j]) += rest(static_cast<Eigen::Index>(j));
    }
}

Eigen::MatrixXd select_columns(const Eigen::Ref<const Eigen::MatrixXd>& a,
                               const std::vector<std::uint64_t>& indices) {
    Eigen::MatrixXd out(a.rows(), static_cast<Eigen::Index>(indices.size()));
    for (std::size_t j = 0; j < indices.size(); ++j)
        out.col(static_cast<Eigen::Index>(j)) =
            a.col(static_cast<Eigen::Index>(indices[j]));
    return out;
}

std::uint64_t words(const Eigen::MatrixXd& a) {
    return static_cast<std::uint64_t>(a.rows()) *
           static_cast<std::uint64_t>(a.cols());
}

class PlanBuilder {
public:
    PlanBuilder(ColumnSource& source, double epsilon, Eigen::Index block_width)
        : source_(source),
          epsilon_(epsilon),
          width_(block_width),
          n_rows_(source.rows()),
          n_cols_(source.cols()) {
        partitions_.resize(2);
        partitions_[1] = {RowRange{0, n_rows_}};
    }

    ButterflyPlan run() {
        const auto start = std::chrono::steady_clock::now();
        plan_.n_rows = static_cast<std::uint64_t>(n_rows_);
        plan_.n_cols = static_cast<std::uint64_t>(n_cols_);
        plan_.epsilon = epsilon_;
        plan_.block_width = static_cast<std::uint64_t>(width_);

        Eigen::Index col = 0;
        while (col < n_cols_) {
            const Eigen::Index w = std::min(width_, n_cols_ - col);
            push_leaf(col, w);
            col += w;
            while (stack_.size() >= 2 &&
                   stack_[stack_.size() - 2].level == stack_.back().level) {
                if (!combine_top(false)) break;
            }
        }
        // Force the remaining ragged tail together: raise the shallower
        // block until levels align, then merge, until a combine is refused.
        while (stack_.size() >= 2) {
            const bool aligned =
                stack_[stack_.size() - 2].level == stack_.back().level;
            if (!combine_top(!aligned)) break;
        }
        finish();
        plan_.t_comp_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        return std::move(plan_);
    }

private:
    struct Block {
        int level = 1;
        std::vector<Eigen::MatrixXd> skeletons;  // one per stripe
        // Full-column norms of the source columns behind each skeleton
        // column.  A stripe holds only a row restriction of its columns, so
        // its own Frobenius norm understates the scale the compression
        // tolerance should be relative to; every stripe is compressed to the
        // same precision relative to the full columns instead.
        std::vector<std::vector<double>> column_norms;
    };

    struct Trial {
        PlanEvent event;
        Block out;
        std::uint64_t skeleton_words = 0;
        std::uint64_t interp_words = 0;
    };

    static double norm2(const std::vector<double>& v) {
        double s = 0.0;
        for (const double x : v) s += x * x;
        return std::sqrt(s);
    }

    static std::vector<double> select(const std::vector<double>& v,
                                      const std::vector<std::uint64_t>& idx) {
        std::vector<double> out;
        out.reserve(idx.size());
        for (const std::uint64_t i : idx) out.push_back(v[i]);
        return out;
    }

    const std::vector<RowRange>& partition(int level) {
        if (static_cast<std::size_t>(level) < partitions_.size() &&
            !partitions_[static_cast<std::size_t>(level)].empty())
            return partitions_[static_cast<std::size_t>(level)];
        const std::vector<RowRange> prev = partition(level - 1);
        std::vector<RowRange> next;
        next.reserve(prev.size() * 2);
        for (const RowRange& r : prev) {
            const Eigen::Index top = (r.count + 1) / 2;
            next.push_back(RowRange{r.begin, top});
            next.push_back(RowRange{r.begin + top, r.count - top});
        }
        if (partitions_.size() <= static_cast<std::size_t>(level))
            partitions_.resize(static_cast<std::size_t>(level) + 1);
        partitions_[static_cast<std::size_t>(level)] = std::move(next);
        return partitions_[static_cast<std::size_t>(level)];
    }

    void note_peak(std::uint64_t transient) {
        peak_words_ =
            std::max(peak_words_, plan_words_ + pending_words_ + transient);
    }

    void push_leaf(Eigen::Index begin, Eigen::Index count) {
        Eigen::MatrixXd raw(n_rows_, count);
        source_.next_columns(raw);
        note_peak(words(raw));

        InterpolativeDecomposition id = id_adaptive(raw, epsilon_);

        Block block;
        block.level = 1;
        PlanEvent ev;
        ev.kind = PlanEvent::Kind::leaf;
        ev.col_begin = static_cast<std::uint64_t>(begin);
        ev.col_count = static_cast<std::uint64_t>(count);
        ev.ids.push_back(to_stripe_id(std::move(id)));
        block.skeletons.push_back(select_columns(raw, ev.ids[0].column_indices));
        std::vector<double> norms(static_cast<std::size_t>(count));
        for (Eigen::Index j = 0; j < count; ++j)
            norms[static_cast<std::size_t>(j)] = raw.col(j).norm();
        block.column_norms.push_back(select(norms, ev.ids[0].column_indices));

        plan_words_ += words(ev.ids[0].interpolation);
        pending_words_ += words(block.skeletons[0]);
        note_peak(words(raw));

        plan_.events.push_back(std::move(ev));
        stack_.push_back(std::move(block));
    }

    // Compresses one row-split half of a stripe into the trial.  Returns
    // false when the half's rank crowds its row count (no room left for
    // another halving), which marks this level as final.
    bool append_half(Trial& trial, const Eigen::Ref<const Eigen::MatrixXd>& half,
                     const std::vector<double>& input_norms) {
        const double block_norm = half.norm();
        double eps = epsilon_;
        if (block_norm > 0.0)
            eps = std::min(0.5, std::max(epsilon_, epsilon_ * norm2(input_norms) /
                                                        block_norm));
        InterpolativeDecomposition id = id_adaptive(half, eps);
        if (10 * id.rank > 9 * half.rows()) return false;
        StripeId sid = to_stripe_id(std::move(id));
        Eigen::MatrixXd skel = select_columns(half, sid.column_indices);
        trial.interp_words += words(sid.interpolation);
        trial.skeleton_words += words(skel);
        note_peak(trial.skeleton_words + trial.interp_words);
        trial.out.column_norms.push_back(select(input_norms, sid.column_indices));
        trial.event.ids.push_back(std::move(sid));
        trial.out.skeletons.push_back(std::move(skel));
        return true;
    }

    // Merges the top two blocks (promote = false) or raises the top block
    // one level (promote = true).  Returns false without changing the stack
    // when the refinement stops paying for itself: stripes may not drop
    // below the block width, and the new interpolation matrices plus halved
    // skeletons must not outgrow the parent skeletons they replace (an
    // incompressible block, like the identity, fails this on the first
    // merge and is kept whole).  A refused level caps all later merges.
    bool combine_top(bool promote) {
        Block& upper = stack_.back();
        const int level_out = upper.level + 1;
        if (level_out > level_cap_) return false;

        Eigen::Index min_new_rows = n_rows_;
        for (const RowRange& r : partition(level_out))
            min_new_rows = std::min(min_new_rows, r.count);
        if (min_new_rows < width_) {
            level_cap_ = upper.level;
            return false;
        }

        const Block* left = promote ? &upper : &stack_[stack_.size() - 2];
        const Block* right = promote ? nullptr : &upper;
        const std::vector<RowRange>& part_out = partition(level_out);

        Trial trial;
        trial.event.kind =
            promote ? PlanEvent::Kind::promote : PlanEvent::Kind::merge;
        trial.out.level = level_out;
        trial.out.skeletons.reserve(part_out.size());

        bool ok = true;
        const std::size_t stripes_in = left->skeletons.size();
        for (std::size_t s = 0; s < stripes_in && ok; ++s) {
            const Eigen::MatrixXd& ls = left->skeletons[s];
            const Eigen::Index top_rows = part_out[2 * s].count;
            if (right) {
                const Eigen::MatrixXd& rs = right->skeletons[s];
                trial.event.left_ranks.push_back(
                    static_cast<std::uint64_t>(ls.cols()));
                Eigen::MatrixXd concat(ls.rows(), ls.cols() + rs.cols());
                concat.leftCols(ls.cols()) = ls;
                concat.rightCols(rs.cols()) = rs;
                std::vector<double> norms = left->column_norms[s];
                norms.insert(norms.end(), right->column_norms[s].begin(),
                             right->column_norms[s].end());
                note_peak(trial.skeleton_words + trial.interp_words + words(concat));
                ok = append_half(trial, concat.topRows(top_rows), norms) &&
                     append_half(trial,
                                 concat.bottomRows(concat.rows() - top_rows),
                                 norms);
            } else {
                ok = append_half(trial, ls.topRows(top_rows),
                                 left->column_norms[s]) &&
                     append_half(trial, ls.bottomRows(ls.rows() - top_rows),
                                 left->column_norms[s]);
            }
        }

        std::uint64_t freed = 0;
        for (const Eigen::MatrixXd& s : left->skeletons) freed += words(s);
        if (right)
            for (const Eigen::MatrixXd& s : right->skeletons) freed += words(s);
        if (!ok ||
            10 * (trial.skeleton_words + trial.interp_words) > 17 * freed) {
            level_cap_ = upper.level;
            return false;
        }
        pending_words_ += trial.skeleton_words;
        note_peak(trial.interp_words);
        pending_words_ -= freed;
        plan_words_ += trial.interp_words;

        stack_.pop_back();
        if (!promote) stack_.pop_back();
        plan_.events.push_back(std::move(trial.event));
        stack_.push_back(std::move(trial.out));
        return true;
    }

    void finish() {
        plan_.levels = 0;
        plan_.root_groups.reserve(stack_.size());
        for (Block& block : stack_) {
            plan_.levels = std::max<std::uint64_t>(
                plan_.levels, static_cast<std::uint64_t>(block.level));
            const std::vector<RowRange>& part = partition(block.level);
            std::vector<RootStripe> group;
            group.reserve(block.skeletons.size());
            for (std::size_t s = 0; s < block.skeletons.size(); ++s) {
                RootStripe rs;
                rs.row_begin = static_cast<std::uint64_t>(part[s].begin);
                rs.row_count = static_cast<std::uint64_t>(part[s].count);
                rs.skeleton = std::move(block.skeletons[s]);
                group.push_back(std::move(rs));
            }
            plan_.root_groups.push_back(std::move(group));
        }
        stack_.clear();

        std::uint64_t stored = 0;
        for (const PlanEvent& ev : plan_.events)
            for (const StripeId& sid : ev.ids) stored += words(sid.interpolation);
        for (const auto& group : plan_.root_groups)
            for (const RootStripe& rs : group) stored += words(rs.skeleton);
        plan_.stored_words = stored;
        plan_.m_max_words = std::max(peak_words_, stored);
    }

    ColumnSource& source_;
    double epsilon_;
    Eigen::Index width_;
    Eigen::Index n_rows_;
    Eigen::Index n_cols_;

    ButterflyPlan plan_;
    std::vector<Block> stack_;
    std::vector<std::vector<RowRange>> partitions_;
    int level_cap_ = std::numeric_limits<int>::max();

    std::uint64_t plan_words_ = 0;
    std::uint64_t pending_words_ = 0;
    std::uint64_t peak_words_ = 0;
};

using CoeffStack = std::vector<std::vector<Eigen::VectorXd>>;

} // namespace

ButterflyPlan build_plan(ColumnSource& source, double epsilon,
                         Eigen::Index block_width) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("build_plan: epsilon must be positive");
    if (block_width < 2)
        throw std::invalid_argument("build_plan: block_width must be >= 2");
    if (source.rows() < 1 || source.cols() < 1)
        throw std::invalid_argument("build_plan: empty source");
    return PlanBuilder(source, epsilon, block_width).run();
}

Eigen::VectorXd apply(const ButterflyPlan& plan,
                      const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() != static_cast<Eigen::Index>(plan.n_cols))
        throw std::invalid_argument("apply: vector length " +
                                    std::to_string(v.size()) + ", expected " +
                                    std::to_string(plan.n_cols));

    CoeffStack stack;
    for (const PlanEvent& ev : plan.events) {
        switch (ev.kind) {
        case PlanEvent::Kind::leaf: {
            stack.push_back({interp_apply(
                ev.ids[0],
                v.segment(static_cast<Eigen::Index>(ev.col_begin),
                          static_cast<Eigen::Index>(ev.col_count)))});
            break;
        }
        case PlanEvent::Kind::merge: {
            std::vector<Eigen::VectorXd> right = std::move(stack.back());
            stack.pop_back();
            std::vector<Eigen::VectorXd> left = std::move(stack.back());
            stack.pop_back();
            std::vector<Eigen::VectorXd> out(2 * left.size());
            for (std::size_t s = 0; s < left.size(); ++s) {
                Eigen::VectorXd z(left[s].size() + right[s].size());
                z << left[s], right[s];
                out[2 * s] = interp_apply(ev.ids[2 * s], z);
                out[2 * s + 1] = interp_apply(ev.ids[2 * s + 1], z);
            }
            stack.push_back(std::move(out));
            break;
        }
        case PlanEvent::Kind::promote: {
            std::vector<Eigen::VectorXd> parent = std::move(stack.back());
            stack.pop_back();
            std::vector<Eigen::VectorXd> out(2 * parent.size());
            for (std::size_t s = 0; s < parent.size(); ++s) {
                out[2 * s] = interp_apply(ev.ids[2 * s], parent[s]);
                out[2 * s + 1] = interp_apply(ev.ids[2 * s + 1], parent[s]);
            }
            stack.push_back(std::move(out));
            break;
        }
        }
    }

    if (stack.size() != plan.root_groups.size())
        throw std::runtime_error("apply: plan events and root groups disagree");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(plan.n_rows));
    for (std::size_t g = 0; g < plan.root_groups.size(); ++g) {
        const auto& group = plan.root_groups[g];
        const auto& coeffs = stack[g];
        for (std::size_t s = 0; s < group.size(); ++s)
            out.segment(static_cast<Eigen::Index>(group[s].row_begin),
                        static_cast<Eigen::Index>(group[s].row_count))
                .noalias() += group[s].skeleton * coeffs[s];
    }
    return out;
}

Eigen::VectorXd apply_transpose(const ButterflyPlan& plan,
                                const Eigen::Ref<const Eigen::VectorXd>& w) {
    if (w.size() != static_cast<Eigen::Index>(plan.n_rows))
        throw std::invalid_argument("apply_transpose: vector length " +
                                    std::to_string(w.size()) + ", expected " +
                                    std::to_string(plan.n_rows));

    CoeffStack stack;
    for (const auto& group : plan.root_groups) {
        std::vector<Eigen::VectorXd> coeffs(group.size());
        for (std::size_t s = 0; s < group.size(); ++s)
            coeffs[s].noalias() =
                group[s].skeleton.transpose() *
                w.segment(static_cast<Eigen::Index>(group[s].row_begin),
                          static_cast<Eigen::Index>(group[s].row_count));
        stack.push_back(std::move(coeffs));
    }

    Eigen::VectorXd out(static_cast<Eigen::Index>(plan.n_cols));
    for (auto it = plan.events.rbegin(); it != plan.events.rend(); ++it) {
        const PlanEvent& ev = *it;
        switch (ev.kind) {
        case PlanEvent::Kind::leaf: {
            std::vector<Eigen::VectorXd> state = std::move(stack.back());
            stack.pop_back();
            auto segment =
                out.segment(static_cast<Eigen::Index>(ev.col_begin),
                            static_cast<Eigen::Index>(ev.col_count));
            segment.setZero();
            interp_apply_transpose_add(ev.ids[0], state[0], segment);
            break;
        }
        case PlanEvent::Kind::merge: {
            std::vector<Eigen::VectorXd> merged = std::move(stack.back());
            stack.pop_back();
            const std::size_t stripes_in = merged.size() / 2;
            std::vector<Eigen::VectorXd> left(stripes_in), right(stripes_in);
            for (std::size_t s = 0; s < stripes_in; ++s) {
                Eigen::VectorXd z =
                    Eigen::VectorXd::Zero(ev.ids[2 * s].inputs());
                interp_apply_transpose_add(ev.ids[2 * s], merged[2 * s], z);
                interp_apply_transpose_add(ev.ids[2 * s + 1], merged[2 * s + 1],
                                           z);
                const Eigen::Index kl = static_cast<Eigen::Index>(ev.left_ranks[s]);
                left[s] = z.head(kl);
                right[s] = z.tail(z.size() - kl);
            }
            stack.push_back(std::move(left));
            stack.push_back(std::move(right));
            break;
        }
        case PlanEvent::Kind::promote: {
            std::vector<Eigen::VectorXd> child = std::move(stack.back());
            stack.pop_back();
            const std::size_t stripes_in = child.size() / 2;
            std::vector<Eigen::VectorXd> parent(stripes_in);
            for (std::size_t s = 0; s < stripes_in; ++s) {
                parent[s] = Eigen::VectorXd::Zero(ev.ids[2 * s].inputs());
                interp_apply_transpose_add(ev.ids[2 * s], child[2 * s],
                                           parent[s]);
                interp_apply_transpose_add(ev.ids[2 * s + 1], child[2 * s + 1],
                                           parent[s]);
            }
            stack.push_back(std::move(parent));
            break;
        }
        }
    }
    return out;
}

PlanStats plan_stats(const ButterflyPlan& plan) {
    PlanStats st;
    st.levels = plan.levels;
    st.stored_words = plan.stored_words;
    st.m_max_words = plan.m_max_words;
    st.t_comp_seconds = plan.t_comp_seconds;

    double sum = 0.0, sum2 = 0.0;
    for (const PlanEvent& ev : plan.events) {
        for (const StripeId& sid : ev.ids) {
            const std::uint64_t k =
                static_cast<std::uint64_t>(sid.interpolation.rows());
            st.k_max = std::max(st.k_max, k);
            sum += static_cast<double>(k);
            sum2 += static_cast<double>(k) * static_cast<double>(k);
            ++st.id_count;
        }
    }
    if (st.id_count > 0) {
        st.k_avg = sum / static_cast<double>(st.id_count);
        const double var =
            std::max(0.0, sum2 / static_cast<double>(st.id_count) -
                              st.k_avg * st.k_avg);
        st.k_sigma = std::sqrt(var);
    }
    return st;
}

} // namespace bfly
