#include "bfly/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace bfly {

namespace {

class Writer {
public:
    explicit Writer(std::ostream& os) : os_(os) {}

    void bytes(const char* p, std::size_t n) {
        os_.write(p, static_cast<std::streamsize>(n));
        if (!os_) throw SerializationError("write failed", offset_);
        offset_ += n;
    }

    void u8(std::uint8_t v) { bytes(reinterpret_cast<const char*>(&v), 1); }

    void u64(std::uint64_t v) {
        char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        bytes(buf, 8);
    }

    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void matrix(const Eigen::MatrixXd& a) {
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index i = 0; i < a.rows(); ++i) f64(a(i, j));
    }

private:
    std::ostream& os_;
    std::uint64_t offset_ = 0;
};

class Reader {
public:
    explicit Reader(std::istream& is) : is_(is) {}

    std::uint64_t offset() const { return offset_; }

    void bytes(char* p, std::size_t n) {
        is_.read(p, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is_.gcount()) != n)
            throw SerializationError("truncated input", offset_);
        offset_ += n;
    }

    std::uint8_t u8() {
        char c;
        bytes(&c, 1);
        return static_cast<std::uint8_t>(c);
    }

    std::uint64_t u64() {
        char buf[8];
        bytes(buf, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i]))
                 << (8 * i);
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    // Guards count fields before they are used as allocation sizes.
    std::uint64_t count(std::uint64_t limit) {
        const std::uint64_t v = u64();
        if (v > limit)
            throw SerializationError("implausible count " + std::to_string(v),
                                     offset_ - 8);
        return v;
    }

    Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd a(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = f64();
        return a;
    }

    void magic(const char* expected, std::size_t n) {
        std::string got(n, '\0');
        const std::uint64_t at = offset_;
        bytes(got.data(), n);
        if (got != std::string(expected, n))
            throw SerializationError("bad magic", at);
    }

private:
    std::istream& is_;
    std::uint64_t offset_ = 0;
};

constexpr std::uint64_t kCountLimit = 1ull << 40;

void write_stripe_id(Writer& w, const StripeId& sid) {
    w.u64(static_cast<std::uint64_t>(sid.interpolation.rows()));
    w.u64(static_cast<std::uint64_t>(sid.interpolation.cols()));
    for (const std::uint64_t idx : sid.column_indices) w.u64(idx);
    w.matrix(sid.interpolation);
}

StripeId read_stripe_id(Reader& r) {
    StripeId sid;
    const std::uint64_t rank = r.count(kCountLimit);
    const std::uint64_t inputs = r.count(kCountLimit);
    sid.column_indices.resize(rank);
    for (std::uint64_t i = 0; i < rank; ++i) sid.column_indices[i] = r.u64();
    sid.interpolation = r.matrix(static_cast<Eigen::Index>(rank),
                                 static_cast<Eigen::Index>(inputs));
    return sid;
}

} // namespace

void save_plan(const ButterflyPlan& plan, std::ostream& os) {
    Writer w(os);
    w.bytes("BFLY1", 5);
    w.u64(plan.n_rows);
    w.u64(plan.n_cols);
    w.f64(plan.epsilon);
    w.u64(plan.block_width);
    w.u64(plan.levels);

    w.u64(plan.events.size());
    for (const PlanEvent& ev : plan.events) {
        w.u8(static_cast<std::uint8_t>(ev.kind));
        switch (ev.kind) {
        case PlanEvent::Kind::leaf:
            w.u64(ev.col_begin);
            w.u64(ev.col_count);
            break;
        case PlanEvent::Kind::merge:
            w.u64(ev.left_ranks.size());
            for (const std::uint64_t k : ev.left_ranks) w.u64(k);
            break;
        case PlanEvent::Kind::promote:
            break;
        }
        w.u64(ev.ids.size());
        for (const StripeId& sid : ev.ids) write_stripe_id(w, sid);
    }

    w.u64(plan.root_groups.size());
    for (const auto& group : plan.root_groups) {
        w.u64(group.size());
        for (const RootStripe& rs : group) {
            w.u64(rs.row_begin);
            w.u64(rs.row_count);
            w.u64(static_cast<std::uint64_t>(rs.skeleton.cols()));
            w.matrix(rs.skeleton);
        }
    }
}

ButterflyPlan load_plan(std::istream& is) {
    Reader r(is);
    ButterflyPlan plan;
    r.magic("BFLY1", 5);
    plan.n_rows = r.count(kCountLimit);
    plan.n_cols = r.count(kCountLimit);
    plan.epsilon = r.f64();
    plan.block_width = r.count(kCountLimit);
    plan.levels = r.count(kCountLimit);

    const std::uint64_t n_events = r.count(kCountLimit);
    plan.events.reserve(n_events);
    for (std::uint64_t e = 0; e < n_events; ++e) {
        PlanEvent ev;
        const std::uint8_t kind = r.u8();
        if (kind > 2)
            throw SerializationError("unknown event kind", r.offset() - 1);
        ev.kind = static_cast<PlanEvent::Kind>(kind);
        switch (ev.kind) {
        case PlanEvent::Kind::leaf:
            ev.col_begin = r.u64();
            ev.col_count = r.u64();
            break;
        case PlanEvent::Kind::merge: {
            const std::uint64_t s = r.count(kCountLimit);
            ev.left_ranks.resize(s);
            for (std::uint64_t i = 0; i < s; ++i) ev.left_ranks[i] = r.u64();
            break;
        }
        case PlanEvent::Kind::promote:
            break;
        }
        const std::uint64_t n_ids = r.count(kCountLimit);
        ev.ids.reserve(n_ids);
        for (std::uint64_t i = 0; i < n_ids; ++i) ev.ids.push_back(read_stripe_id(r));
        plan.events.push_back(std::move(ev));
    }

    const std::uint64_t n_groups = r.count(kCountLimit);
    plan.root_groups.reserve(n_groups);
    std::uint64_t stored = 0;
    for (std::uint64_t g = 0; g < n_groups; ++g) {
        const std::uint64_t n_stripes = r.count(kCountLimit);
        std::vector<RootStripe> group;
        group.reserve(n_stripes);
        for (std::uint64_t s = 0; s < n_stripes; ++s) {
            RootStripe rs;
            rs.row_begin = r.u64();
            rs.row_count = r.count(kCountLimit);
            const std::uint64_t rank = r.count(kCountLimit);
            rs.skeleton = r.matrix(static_cast<Eigen::Index>(rs.row_count),
                                   static_cast<Eigen::Index>(rank));
            group.push_back(std::move(rs));
        }
        plan.root_groups.push_back(std::move(group));
    }

    for (const PlanEvent& ev : plan.events)
        for (const StripeId& sid : ev.ids)
            stored += static_cast<std::uint64_t>(sid.interpolation.size());
    for (const auto& group : plan.root_groups)
        for (const RootStripe& rs : group)
            stored += static_cast<std::uint64_t>(rs.skeleton.size());
    plan.stored_words = stored;
    plan.m_max_words = 0;  // build telemetry does not travel with the file
    plan.t_comp_seconds = 0.0;
    return plan;
}

void save_transform_plan(const transform::TransformPlan& tp, std::ostream& os) {
    save_plan(tp.plan, os);
    Writer w(os);
    w.bytes("LTRN", 4);
    w.u64(static_cast<std::uint64_t>(tp.m));
    w.u8(tp.parity == legendre::Parity::odd ? 1 : 0);
    w.u64(static_cast<std::uint64_t>(tp.n));
    for (const double x : tp.rule.nodes) w.f64(x);
    for (const double wt : tp.rule.weights) w.f64(wt);
    w.u8(tp.rule.center_weight.has_value() ? 1 : 0);
    if (tp.rule.center_weight) w.f64(*tp.rule.center_weight);
}

transform::TransformPlan load_transform_plan(std::istream& is) {
    transform::TransformPlan tp;
    tp.plan = load_plan(is);
    Reader r(is);
    r.magic("LTRN", 4);
    tp.m = static_cast<int>(r.count(1ull << 32));
    tp.parity = r.u8() ? legendre::Parity::odd : legendre::Parity::even;
    tp.n = static_cast<Eigen::Index>(r.count(kCountLimit));
    tp.rule.m = tp.m;
    tp.rule.n = static_cast<int>(tp.n);
    tp.rule.parity = tp.parity;
    tp.rule.nodes.resize(static_cast<std::size_t>(tp.n));
    for (double& x : tp.rule.nodes) x = r.f64();
    tp.rule.weights.resize(static_cast<std::size_t>(tp.n));
    for (double& wt : tp.rule.weights) wt = r.f64();
    if (r.u8()) tp.rule.center_weight = r.f64();
    return tp;
}

void save_transform_plan_file(const transform::TransformPlan& tp,
                              const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw SerializationError("cannot open " + path + " for writing", 0);
    save_transform_plan(tp, os);
}

transform::TransformPlan load_transform_plan_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw SerializationError("cannot open " + path, 0);
    return load_transform_plan(is);
}

void save_rule_file(const quadrature::QuadratureRule& rule,
                    const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw SerializationError("cannot open " + path + " for writing", 0);
    Writer w(os);
    w.bytes("QDRL1", 5);
    w.u64(static_cast<std::uint64_t>(rule.m));
    w.u64(static_cast<std::uint64_t>(rule.n));
    w.u8(rule.parity == legendre::Parity::odd ? 1 : 0);
    for (const double x : rule.nodes) w.f64(x);
    for (const double wt : rule.weights) w.f64(wt);
    w.u8(rule.center_weight.has_value() ? 1 : 0);
    if (rule.center_weight) w.f64(*rule.center_weight);
}

quadrature::QuadratureRule load_rule_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw SerializationError("cannot open " + path, 0);
    Reader r(is);
    quadrature::QuadratureRule rule;
    r.magic("QDRL1", 5);
    rule.m = static_cast<int>(r.count(1ull << 32));
    rule.n = static_cast<int>(r.count(1ull << 32));
    rule.parity = r.u8() ? legendre::Parity::odd : legendre::Parity::even;
    rule.nodes.resize(static_cast<std::size_t>(rule.n));
    for (double& x : rule.nodes) x = r.f64();
    rule.weights.resize(static_cast<std::size_t>(rule.n));
    for (double& wt : rule.weights) wt = r.f64();
    if (r.u8()) rule.center_weight = r.f64();
    return rule;
}

} // namespace bfly
