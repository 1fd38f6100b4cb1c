// Command-line harness: benchmark rows in the layout of the reference
// tables, a property-based verification suite, plan files, and quadrature
// dumps.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bfly/oracles.hpp"
#include "bfly/rng.hpp"
#include "bfly/serialize.hpp"
#include "bfly/transform.hpp"

using namespace bfly;
using legendre::Parity;

namespace {

constexpr int kTestVectors = 20;

struct CommonOpts {
    double eps = 1e-14;
    Eigen::Index block_width = 60;
    std::uint64_t seed = 0;
    std::string output = "csv";
    std::uint64_t dense_budget = 1ull << 30;
    std::string cache_dir;
};

Parity parse_parity(const std::string& s) {
    if (s == "even") return Parity::even;
    if (s == "odd") return Parity::odd;
    throw CLI::ValidationError("--parity", "expected 'even' or 'odd'");
}

std::string parity_name(Parity p) { return p == Parity::even ? "even" : "odd"; }

double time_call(const std::function<void()>& fn) {
    fn();  // warm up
    int reps = 1;
    for (;;) {
        const auto t0 = std::chrono::steady_clock::now();
        for (int r = 0; r < reps; ++r) fn();
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        if (dt >= 0.05 || reps >= (1 << 20)) return dt / reps;
        reps *= 4;
    }
}

quadrature::QuadratureRule obtain_rule(int m, int n, Parity parity,
                                       const std::string& cache_dir) {
    if (!cache_dir.empty()) {
        std::ostringstream name;
        name << cache_dir << "/quad_m" << m << "_n" << n << "_"
             << parity_name(parity) << ".bin";
        std::ifstream probe(name.str(), std::ios::binary);
        if (probe.good()) {
            quadrature::QuadratureRule rule = load_rule_file(name.str());
            if (rule.m == m && rule.n == n && rule.parity == parity) return rule;
        }
        quadrature::QuadratureRule rule = quadrature::build_rule(m, n, parity);
        save_rule_file(rule, name.str());
        return rule;
    }
    return quadrature::build_rule(m, n, parity);
}

// One (n, m, parity) experiment: plan construction, timings, and accuracy
// against the dense reference when it fits the memory budget.
struct BenchmarkRow {
    int n = 0;
    int m = 0;
    Parity parity = Parity::even;
    std::uint64_t k_max = 0;
    double k_avg = 0.0;
    double k_sigma = 0.0;
    std::optional<double> t_dir;
    double t_fwd = 0.0;
    double t_inv = 0.0;
    double t_quad = 0.0;
    double t_comp = 0.0;
    std::uint64_t m_max = 0;
    std::optional<double> eps_fwd;
    double eps_inv = 0.0;
};

BenchmarkRow run_row(int n, int m, Parity parity, const CommonOpts& opts) {
    BenchmarkRow row;
    row.n = n;
    row.m = m;
    row.parity = parity;

    const auto t0 = std::chrono::steady_clock::now();
    const quadrature::QuadratureRule rule =
        obtain_rule(m, n, parity, opts.cache_dir);
    row.t_quad =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    transform::LegendreColumnSource source(m, parity, rule);
    const ButterflyPlan plan = build_plan(source, opts.eps, opts.block_width);
    const PlanStats st = plan_stats(plan);
    row.k_max = st.k_max;
    row.k_avg = st.k_avg;
    row.k_sigma = st.k_sigma;
    row.t_comp = st.t_comp_seconds;
    row.m_max = st.m_max_words;

    CounterRng rng(opts.seed);
    std::vector<Eigen::VectorXd> vs;
    for (int t = 0; t < kTestVectors; ++t) vs.push_back(rng.unit_vector(n));

    row.t_fwd = time_call([&] { apply(plan, vs[0]); });
    row.t_inv = time_call([&] { apply_transpose(plan, vs[0]); });

    const bool dense_fits =
        8ull * static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n) <=
        opts.dense_budget;
    if (dense_fits) {
        source.reset();
        const Eigen::MatrixXd a = materialize(source);
        Eigen::VectorXd sink(n);
        row.t_dir = time_call([&] { sink.noalias() = a * vs[0]; });
        double worst = 0.0;
        for (const auto& v : vs)
            worst =
                std::max(worst, (apply(plan, v) - a * v).cwiseAbs().maxCoeff());
        row.eps_fwd = worst;
    }

    double worst_rt = 0.0;
    for (const auto& v : vs) {
        const Eigen::VectorXd back = apply_transpose(plan, apply(plan, v));
        worst_rt = std::max(worst_rt, (back - v).cwiseAbs().maxCoeff());
    }
    row.eps_inv = worst_rt;
    return row;
}

std::string format_time(const std::optional<double>& t, bool no_times) {
    if (no_times || !t.has_value()) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", *t);
    return buf;
}

std::string format_eps(const std::optional<double>& e) {
    if (!e.has_value()) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", *e);
    return buf;
}

void print_rows_csv(const std::vector<BenchmarkRow>& rows, bool no_times,
                    std::ostream& os) {
    os << "n,m,parity,k_max,k_avg,k_sigma,t_dir,t_fwd,t_inv,t_quad,t_comp,"
          "m_max,eps_fwd,eps_inv\n";
    for (const BenchmarkRow& r : rows) {
        char k_avg[32], k_sig[32];
        std::snprintf(k_avg, sizeof k_avg, "%.1f", r.k_avg);
        std::snprintf(k_sig, sizeof k_sig, "%.1f", r.k_sigma);
        os << r.n << ',' << r.m << ',' << parity_name(r.parity) << ','
           << r.k_max << ',' << k_avg << ',' << k_sig << ','
           << format_time(r.t_dir, no_times) << ','
           << format_time(r.t_fwd, no_times) << ','
           << format_time(r.t_inv, no_times) << ','
           << format_time(r.t_quad, no_times) << ','
           << format_time(r.t_comp, no_times) << ',' << r.m_max << ','
           << format_eps(r.eps_fwd) << ',' << format_eps(r.eps_inv) << '\n';
    }
}

void print_rows_json(const std::vector<BenchmarkRow>& rows, bool no_times,
                     std::ostream& os) {
    nlohmann::json out = nlohmann::json::array();
    for (const BenchmarkRow& r : rows) {
        nlohmann::json j;
        j["n"] = r.n;
        j["m"] = r.m;
        j["parity"] = parity_name(r.parity);
        j["k_max"] = r.k_max;
        j["k_avg"] = r.k_avg;
        j["k_sigma"] = r.k_sigma;
        if (no_times) {
            j["t_dir"] = nullptr;
            j["t_fwd"] = nullptr;
            j["t_inv"] = nullptr;
            j["t_quad"] = nullptr;
            j["t_comp"] = nullptr;
        } else {
            if (r.t_dir) j["t_dir"] = *r.t_dir; else j["t_dir"] = nullptr;
            j["t_fwd"] = r.t_fwd;
            j["t_inv"] = r.t_inv;
            j["t_quad"] = r.t_quad;
            j["t_comp"] = r.t_comp;
        }
        j["m_max"] = r.m_max;
        if (r.eps_fwd) j["eps_fwd"] = *r.eps_fwd; else j["eps_fwd"] = nullptr;
        j["eps_inv"] = r.eps_inv;
        out.push_back(j);
    }
    os << out.dump(2) << '\n';
}

// ---- verify ----------------------------------------------------------

struct VerifyState {
    bool all_ok = true;

    void report(const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "PASS " : "FAIL ") << name;
        if (!detail.empty()) std::cout << ": " << detail;
        std::cout << '\n';
        if (!ok) all_ok = false;
    }
};

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, CounterRng& rng) {
    Eigen::MatrixXd a(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double u1 = 0.5 * (rng.next_open() + 1.0);
            const double u2 = 0.5 * (rng.next_open() + 1.0);
            a(i, j) = std::sqrt(-2.0 * std::log(u1 + 1e-300)) *
                      std::cos(2.0 * M_PI * u2);
        }
    return a;
}

void verify_id_bounds(VerifyState& vs, std::uint64_t seed, int trials) {
    CounterRng rng(seed);
    double worst_ratio = 0.0, worst_entry = 0.0;
    std::string instance;
    for (int t = 0; t < trials; ++t) {
        const Eigen::Index rows = 16 + static_cast<Eigen::Index>(rng.next_u64() % 33);
        const Eigen::Index cols = 16 + static_cast<Eigen::Index>(rng.next_u64() % 33);
        const Eigen::MatrixXd a = gaussian(rows, cols, rng);
        const Eigen::Index k =
            1 + static_cast<Eigen::Index>(
                    rng.next_u64() % static_cast<std::uint64_t>(std::min(rows, cols)));
        const auto id = id_fixed_rank(a, k);
        worst_entry = std::max(
            worst_entry,
            id.interpolation.size() > 0 ? id.interpolation.cwiseAbs().maxCoeff() : 0.0);
        if (k < std::min(rows, cols)) {
            Eigen::MatrixXd skel(rows, k);
            for (Eigen::Index j = 0; j < k; ++j)
                skel.col(j) = a.col(id.column_indices[static_cast<std::size_t>(j)]);
            const double err = oracles::spectral_norm(id_reconstruct(id, skel) - a);
            const double bound =
                std::sqrt(4.0 * static_cast<double>(k) *
                              static_cast<double>(cols - k) +
                          1.0) *
                oracles::singular_values(a)(k);
            const double ratio = bound > 0.0 ? err / bound : 0.0;
            if (ratio > worst_ratio) {
                worst_ratio = ratio;
                std::ostringstream os;
                os << "rows=" << rows << " cols=" << cols << " k=" << k;
                instance = os.str();
            }
        }
    }
    char detail[160];
    std::snprintf(detail, sizeof detail,
                  "worst error/bound %.3f, worst entry %.3f", worst_ratio,
                  worst_entry);
    const bool ok = worst_ratio <= 1.0 && worst_entry <= 2.0 + 1e-12;
    vs.report("id-certified-bounds", ok,
              ok ? detail : detail + (" [" + instance + "]"));
}

void verify_exactness(VerifyState& vs, std::uint64_t seed, double perturb) {
    CounterRng rng(seed + 1);
    double worst = 0.0;
    std::string instance = "none";
    for (const int m : {0, 1, 2, 8}) {
        for (const int n : {1, 3, 16}) {
            for (const Parity parity : {Parity::even, Parity::odd}) {
                quadrature::QuadratureRule rule = quadrature::build_rule(m, n, parity);
                for (double& w : rule.weights) w *= 1.0 + perturb;
                if (rule.center_weight) *rule.center_weight *= 1.0 + perturb;
                const int q_max = parity == Parity::even ? 2 * n - 1 : 2 * n;
                for (int trial = 0; trial < 10; ++trial) {
                    std::vector<double> coeff(static_cast<std::size_t>(q_max) + 1);
                    for (double& c : coeff) c = rng.next_open();
                    double exact = 0.0, scale = 0.0, got = 0.0;
                    for (int q = 0; q <= q_max; ++q) {
                        const double iq = oracles::monomial_weight_integral(q, m);
                        exact += coeff[static_cast<std::size_t>(q)] * iq;
                        scale += std::abs(coeff[static_cast<std::size_t>(q)]) * iq;
                    }
                    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
                        const double x2 = rule.nodes[j] * rule.nodes[j];
                        double p = 0.0;
                        for (std::size_t q = coeff.size(); q-- > 0;)
                            p = p * x2 + coeff[q];
                        got += rule.weights[j] * std::pow(1.0 - x2, m) * p;
                    }
                    if (rule.center_weight) got += *rule.center_weight * coeff[0];
                    const double rel = std::abs(got - exact) / scale;
                    if (rel > worst) {
                        worst = rel;
                        std::ostringstream os;
                        os << "m=" << m << " n=" << n << " parity="
                           << parity_name(parity) << " trial=" << trial;
                        instance = os.str();
                    }
                }
            }
        }
    }
    char detail[160];
    std::snprintf(detail, sizeof detail, "worst relative error %.3e", worst);
    const bool ok = worst <= 1e-12;
    vs.report("quadrature-exactness", ok,
              ok ? detail : detail + (" [" + instance + "]"));
}

void verify_recurrence(VerifyState& vs) {
    double worst = 0.0;
    std::string instance = "none";
    for (const int m : {0, 3}) {
        const auto rule = quadrature::build_rule(m, 3, Parity::even);
        for (const double x : rule.nodes) {
            for (const Parity parity : {Parity::even, Parity::odd}) {
                auto sweep = legendre::make_sweep(m, x, parity);
                for (int j = 0; 2 * j <= 120; ++j) {
                    const int l = m + 2 * j + (parity == Parity::odd ? 1 : 0);
                    const double got = sweep.next().to_double();
                    const double ref = oracles::reference_legendre(m, l, x);
                    // The sweep crosses the defining zeros of the node's own
                    // rule, where a pure ratio is ill-posed; scale by the
                    // O(1) amplitude of the normalized functions instead.
                    const double rel =
                        std::abs(got - ref) / std::max(std::abs(ref), 1.0);
                    if (rel > worst) {
                        worst = rel;
                        std::ostringstream os;
                        os << "m=" << m << " l=" << l << " x=" << x;
                        instance = os.str();
                    }
                }
            }
        }
    }
    char detail[160];
    std::snprintf(detail, sizeof detail, "worst relative error %.3e", worst);
    const bool ok = worst <= 1e-12;
    vs.report("recurrence-oracle", ok, ok ? detail : detail + (" [" + instance + "]"));
}

void verify_transform(VerifyState& vs, std::uint64_t seed, double eps,
                      Eigen::Index block_width) {
    double worst_adj = 0.0, worst_rt = 0.0;
    for (const Parity parity : {Parity::even, Parity::odd}) {
        const auto tp = transform::build_transform(2, 128, parity, eps, block_width);
        CounterRng rng(seed + 2);
        for (int t = 0; t < 10; ++t) {
            const Eigen::VectorXd v = rng.unit_vector(128);
            const Eigen::VectorXd w = rng.unit_vector(128);
            worst_adj = std::max(
                worst_adj, std::abs(transform::forward(tp, v).dot(w) -
                                    v.dot(transform::inverse(tp, w))));
            const Eigen::VectorXd back =
                transform::inverse(tp, transform::forward(tp, v));
            worst_rt = std::max(worst_rt, (back - v).cwiseAbs().maxCoeff());
        }
    }
    char detail[96];
    std::snprintf(detail, sizeof detail, "worst mismatch %.3e", worst_adj);
    vs.report("adjoint-identity", worst_adj <= 1e-12, detail);
    std::snprintf(detail, sizeof detail, "worst error %.3e", worst_rt);
    vs.report("round-trip", worst_rt <= 1e-11, detail);
}

// ---- plan ------------------------------------------------------------

std::vector<double> read_vector_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(line, &used);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": not a number: '" + line + "'");
        }
        values.push_back(v);
    }
    return values;
}

void write_vector(const Eigen::VectorXd& v, std::ostream& os) {
    char buf[40];
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", v(i));
        os << buf << '\n';
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"butterfly-compressed associated Legendre transforms"};
    app.require_subcommand(1);

    CommonOpts opts;
    int arg_n = 0, arg_m = 0;
    std::string arg_parity = "even";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--eps", opts.eps, "compression tolerance");
        cmd->add_option("--block-width", opts.block_width, "leaf column width");
        cmd->add_option("--seed", opts.seed, "test vector seed");
        cmd->add_option("--cache-dir", opts.cache_dir,
                        "directory for quadrature rule files");
    };

    // bench
    auto* bench = app.add_subcommand("bench", "timing and accuracy rows");
    std::vector<int> bench_n, bench_m;
    std::string bench_parity = "even";
    bool no_times = false;
    bench->add_option("--n", bench_n, "transform sizes")
        ->required()
        ->delimiter(',');
    bench->add_option("--m", bench_m, "orders (one per size, or one for all)")
        ->required()
        ->delimiter(',');
    bench->add_option("--parity", bench_parity, "even|odd|both");
    bench->add_option("--output", opts.output, "csv|json");
    bench->add_option("--dense-budget", opts.dense_budget,
                      "bytes allowed for the dense reference matrix");
    bench->add_flag("--no-times", no_times,
                    "replace timing columns with NA for reproducible output");
    add_common(bench);

    // verify
    auto* verify = app.add_subcommand("verify", "property suite");
    double perturb = 0.0;
    verify->add_option("--perturb", perturb,
                       "relative perturbation injected into quadrature weights");
    add_common(verify);

    // plan
    auto* plan_cmd = app.add_subcommand("plan", "plan files");
    plan_cmd->require_subcommand(1);
    std::string plan_file, vec_file, out_file;
    auto* plan_build = plan_cmd->add_subcommand("build", "write a plan file");
    plan_build->add_option("file", plan_file, "output path")->required();
    plan_build->add_option("--n", arg_n, "transform size")->required();
    plan_build->add_option("--m", arg_m, "order")->required();
    plan_build->add_option("--parity", arg_parity, "even|odd");
    add_common(plan_build);
    auto* plan_apply = plan_cmd->add_subcommand("apply", "apply a plan file");
    plan_apply->add_option("file", plan_file, "plan path")->required();
    plan_apply->add_option("vector", vec_file, "input vector, one number per line")
        ->required();
    plan_apply->add_option("--out", out_file, "output path (default stdout)");
    bool apply_inverse = false;
    plan_apply->add_flag("--inverse", apply_inverse, "apply the transpose");
    auto* plan_info = plan_cmd->add_subcommand("info", "print plan statistics");
    plan_info->add_option("file", plan_file, "plan path")->required();

    // quad
    auto* quad = app.add_subcommand("quad", "print nodes and weights as CSV");
    quad->add_option("--n", arg_n, "node count")->required();
    quad->add_option("--m", arg_m, "order")->required();
    quad->add_option("--parity", arg_parity, "even|odd");
    add_common(quad);

    CLI11_PARSE(app, argc, argv);

    try {
        if (bench->parsed()) {
            if (bench_m.size() == 1 && bench_n.size() > 1)
                bench_m.assign(bench_n.size(), bench_m[0]);
            if (bench_m.size() != bench_n.size()) {
                std::cerr << "bench: --n and --m must have matching lengths\n";
                return 2;
            }
            std::vector<Parity> parities;
            if (bench_parity == "both")
                parities = {Parity::even, Parity::odd};
            else
                parities = {parse_parity(bench_parity)};
            std::vector<BenchmarkRow> rows;
            for (std::size_t i = 0; i < bench_n.size(); ++i)
                for (const Parity parity : parities)
                    rows.push_back(run_row(bench_n[i], bench_m[i], parity, opts));
            if (opts.output == "json")
                print_rows_json(rows, no_times, std::cout);
            else
                print_rows_csv(rows, no_times, std::cout);
            return 0;
        }

        if (verify->parsed()) {
            VerifyState vs;
            verify_id_bounds(vs, opts.seed, 40);
            verify_exactness(vs, opts.seed, perturb);
            verify_recurrence(vs);
            verify_transform(vs, opts.seed, opts.eps, opts.block_width);
            std::cout << (vs.all_ok ? "all properties passed\n"
                                    : "property failures detected\n");
            return vs.all_ok ? 0 : 1;
        }

        if (plan_build->parsed()) {
            const auto tp = transform::build_transform(
                obtain_rule(arg_m, arg_n, parse_parity(arg_parity), opts.cache_dir),
                opts.eps, opts.block_width);
            save_transform_plan_file(tp, plan_file);
            return 0;
        }

        if (plan_apply->parsed()) {
            const auto tp = load_transform_plan_file(plan_file);
            const std::vector<double> raw = read_vector_file(vec_file);
            if (static_cast<Eigen::Index>(raw.size()) != tp.n) {
                std::cerr << "plan apply: vector has " << raw.size()
                          << " entries, plan expects " << tp.n << '\n';
                return 2;
            }
            Eigen::VectorXd v =
                Eigen::Map<const Eigen::VectorXd>(raw.data(),
                                                  static_cast<Eigen::Index>(raw.size()));
            const Eigen::VectorXd out = apply_inverse ? transform::inverse(tp, v)
                                                      : transform::forward(tp, v);
            if (out_file.empty()) {
                write_vector(out, std::cout);
            } else {
                std::ofstream os(out_file);
                if (!os) throw std::runtime_error("cannot open " + out_file);
                write_vector(out, os);
            }
            return 0;
        }

        if (plan_info->parsed()) {
            const auto tp = load_transform_plan_file(plan_file);
            const PlanStats st = plan_stats(tp.plan);
            char k_avg[32], k_sig[32];
            std::snprintf(k_avg, sizeof k_avg, "%.6f", st.k_avg);
            std::snprintf(k_sig, sizeof k_sig, "%.6f", st.k_sigma);
            std::cout << "n: " << tp.n << '\n'
                      << "m: " << tp.m << '\n'
                      << "parity: " << parity_name(tp.parity) << '\n'
                      << "epsilon: " << tp.plan.epsilon << '\n'
                      << "block_width: " << tp.plan.block_width << '\n'
                      << "levels: " << st.levels << '\n'
                      << "ids: " << st.id_count << '\n'
                      << "k_max: " << st.k_max << '\n'
                      << "k_avg: " << k_avg << '\n'
                      << "k_sigma: " << k_sig << '\n'
                      << "stored_words: " << st.stored_words << '\n';
            return 0;
        }

        if (quad->parsed()) {
            const quadrature::QuadratureRule rule = obtain_rule(
                arg_m, arg_n, parse_parity(arg_parity), opts.cache_dir);
            std::cout << "j,node,weight\n";
            char node[40], weight[40];
            for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
                std::snprintf(node, sizeof node, "%.17g", rule.nodes[j]);
                std::snprintf(weight, sizeof weight, "%.17g", rule.weights[j]);
                std::cout << j << ',' << node << ',' << weight << '\n';
            }
            if (rule.center_weight) {
                std::snprintf(weight, sizeof weight, "%.17g", *rule.center_weight);
                std::cout << rule.nodes.size() << ",0," << weight << '\n';
            }
            return 0;
        }
    } catch (const SerializationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
