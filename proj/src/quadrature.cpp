#include "bfly/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace bfly::quadrature {

using legendre::DegreeSweep;
using legendre::FirstValues;
using legendre::RecurrenceCoefficients;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Evaluates the target function P(L) of one chain, and its derivative via
// the opposite-parity value at degree L-1, reusing the O(m) order prefactor
// and one shared coefficient table across all evaluation points.
class ChainEvaluator {
public:
    ChainEvaluator(int m, int n, Parity parity)
        : m_(m),
          n_(n),
          parity_(parity),
          degree_(m + 2 * n + (parity == Parity::odd ? 1 : 0)),
          prefactor_(legendre::order_prefactor(m)),
          coeffs_(std::make_shared<RecurrenceCoefficients>(m, degree_ + 2)) {}

    int degree() const { return degree_; }

    ScaledReal value(double x) const {
        const FirstValues seeds = legendre::first_values(m_, x, prefactor_);
        DegreeSweep sweep(m_, x, parity_, coeffs_, seeds);
        ScaledReal v;
        for (int j = 0; j <= n_; ++j) v = sweep.next();
        return v;
    }

    // Value of P(L) and d/dx P(L); the derivative needs P(L-1) from the
    // opposite-parity chain.
    void value_and_derivative(double x, ScaledReal& value_out,
                              double& derivative_out) const {
        const FirstValues seeds = legendre::first_values(m_, x, prefactor_);
        DegreeSweep main(m_, x, parity_, coeffs_, seeds);
        ScaledReal v;
        for (int j = 0; j <= n_; ++j) v = main.next();

        ScaledReal below;  // P(L-1)
        if (parity_ == Parity::odd) {
            DegreeSweep aux(m_, x, legendre::Parity::even, coeffs_, seeds);
            for (int j = 0; j <= n_; ++j) below = aux.next();
        } else {
            // L-1 = m + 2(n-1) + 1; for n = 0 the degree L-1 = m-1 does not
            // exist and the derivative term vanishes with its coefficient.
            if (n_ >= 1) {
                DegreeSweep aux(m_, x, legendre::Parity::odd, coeffs_, seeds);
                for (int j = 0; j <= n_ - 1; ++j) below = aux.next();
            }
        }
        value_out = v;
        derivative_out = legendre::derivative(m_, degree_, x, v, below);
    }

private:
    int m_;
    int n_;
    Parity parity_;
    int degree_;
    ScaledReal prefactor_;
    std::shared_ptr<RecurrenceCoefficients> coeffs_;
};

std::string describe(int m, int n, Parity parity) {
    std::ostringstream os;
    os << "(m=" << m << ", n=" << n << ", parity="
       << (parity == Parity::even ? "even" : "odd") << ")";
    return os.str();
}

struct Bracket {
    double lo, hi;       // f changes sign across [lo, hi]
    int sign_lo;
};

// Sign-change scan over theta = acos(x) in (0, pi/2); the grid is refined
// until exactly n changes appear.  The theta step starts at a quarter of the
// minimal zero spacing of the chain, so a single refinement is the rare
// case, and failing to reach n changes at all signals a genuine problem.
std::vector<Bracket> bracket_zeros(const ChainEvaluator& eval, int m, int n,
                                   Parity parity) {
    const int degree = eval.degree();
    long grid = 2L * (degree + 2);
    for (int attempt = 0; attempt < 7; ++attempt, grid *= 2) {
        // The odd chain vanishes at x = 0 exactly; offset the grid half a
        // step so the center zero is not sampled.
        const double offset = parity == Parity::odd ? 0.5 : 0.0;
        std::vector<Bracket> brackets;
        double x_prev = parity == Parity::odd
                            ? std::cos(kPi / 2.0 * (1.0 - offset / grid))
                            : 0.0;
        int sign_prev = eval.value(x_prev).sign();
        bool clean = sign_prev != 0;
        for (long t = 1; t < grid && clean; ++t) {
            const double theta = kPi / 2.0 * (1.0 - (t + offset) / grid);
            const double x = std::cos(theta);
            const int s = eval.value(x).sign();
            if (s == 0) {
                // Landed exactly on a zero; nudge the grid.
                clean = false;
                break;
            }
            if (s != sign_prev)
                brackets.push_back(Bracket{x_prev, x, sign_prev});
            x_prev = x;
            sign_prev = s;
        }
        if (clean && static_cast<int>(brackets.size()) == n) return brackets;
    }
    throw std::runtime_error("quadrature: sign-change scan failed to isolate " +
                             std::to_string(n) + " zeros for " +
                             describe(m, n, parity));
}

double polish_zero(const ChainEvaluator& eval, Bracket b, int m, int n,
                   Parity parity) {
    double lo = b.lo, hi = b.hi;
    int sign_lo = b.sign_lo;
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 100; ++iter) {
        ScaledReal f;
        double fp;
        eval.value_and_derivative(x, f, fp);
        const double fv = f.to_double();
        if (fv == 0.0) return x;

        if ((f.sign() == sign_lo)) lo = x; else hi = x;

        double step = fp != 0.0 ? -fv / fp : 0.0;
        double next = x + step;
        if (!(next > lo && next < hi) || step == 0.0) {
            next = 0.5 * (lo + hi);
            step = next - x;
        }
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * x)
            return next;
        x = next;
    }
    std::ostringstream os;
    os << "quadrature: Newton failed to converge for " << describe(m, n, parity)
       << " in bracket [" << lo << ", " << hi << "]";
    throw std::runtime_error(os.str());
}

} // namespace

std::vector<double> find_zeros(int m, int n, Parity parity) {
    if (n < 1) throw std::invalid_argument("find_zeros: n must be >= 1");
    if (m < 0) throw std::invalid_argument("find_zeros: m must be >= 0");

    const ChainEvaluator eval(m, n, parity);
    std::vector<Bracket> brackets = bracket_zeros(eval, m, n, parity);
    std::vector<double> zeros;
    zeros.reserve(static_cast<std::size_t>(n));
    for (const Bracket& b : brackets)
        zeros.push_back(polish_zero(eval, b, m, n, parity));
    std::sort(zeros.begin(), zeros.end());
    return zeros;
}

Weights compute_weights(int m, int n, Parity parity,
                        const std::vector<double>& nodes) {
    const ChainEvaluator eval(m, n, parity);
    const double scale =
        2.0 * (2.0 * m + 4.0 * n + (parity == Parity::odd ? 3.0 : 1.0));

    Weights out;
    out.weights.reserve(nodes.size());
    for (const double x : nodes) {
        ScaledReal f;
        double fp;
        eval.value_and_derivative(x, f, fp);
        if (fp == 0.0 || !std::isfinite(fp))
            throw std::runtime_error(
                "quadrature: vanishing derivative at node of " +
                describe(m, n, parity));
        out.weights.push_back(scale / ((1.0 - x) * (1.0 + x) * fp * fp));
    }
    if (parity == Parity::odd) {
        ScaledReal f;
        double fp;
        eval.value_and_derivative(0.0, f, fp);
        if (fp == 0.0 || !std::isfinite(fp))
            throw std::runtime_error(
                "quadrature: vanishing center derivative of " +
                describe(m, n, parity));
        out.center_weight = (2.0 * m + 4.0 * n + 3.0) / (fp * fp);
    }
    return out;
}

QuadratureRule build_rule(int m, int n, Parity parity) {
    QuadratureRule rule;
    rule.m = m;
    rule.n = n;
    rule.parity = parity;
    rule.nodes = find_zeros(m, n, parity);

    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const bool ordered = rule.nodes[j] > 0.0 && rule.nodes[j] < 1.0 &&
                             (j == 0 || rule.nodes[j] > rule.nodes[j - 1]);
        if (!ordered)
            throw std::runtime_error("quadrature: nodes out of order for " +
                                     describe(m, n, parity));
    }

    Weights w = compute_weights(m, n, parity, rule.nodes);
    rule.weights = std::move(w.weights);
    rule.center_weight = w.center_weight;
    for (const double wj : rule.weights)
        if (!(wj > 0.0))
            throw std::runtime_error("quadrature: nonpositive weight for " +
                                     describe(m, n, parity));

    // Residual certificate: each node must sit on its zero to within a tiny
    // fraction of the local node spacing.  Two double-precision limits cap
    // how small that fraction can get: the quantization of the stored node
    // (nodes cluster near 1 like 1/n^2, so a few ulps can exceed 1e-11 of
    // the spacing there), and the roundoff of the degree-L recurrence that
    // evaluates the residual, which grows like L^(3/2) eps.
    const ChainEvaluator eval(m, n, parity);
    const double eps = std::numeric_limits<double>::epsilon();
    const double degree = static_cast<double>(eval.degree());
    const double recurrence_noise = 8.0 * eps * degree * std::sqrt(degree);
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const double x = rule.nodes[j];
        const double left = j == 0 ? x : x - rule.nodes[j - 1];
        const double right =
            j + 1 == rule.nodes.size() ? 1.0 - x : rule.nodes[j + 1] - x;
        const double spacing = std::min(left, right);
        const double slack =
            std::max({1e-11 * spacing, recurrence_noise * spacing, 32.0 * eps * x});
        ScaledReal f;
        double fp;
        eval.value_and_derivative(x, f, fp);
        if (!(std::abs(f.to_double()) <= std::abs(fp) * slack))
            throw std::runtime_error("quadrature: residual certificate failed for " +
                                     describe(m, n, parity));
    }
    return rule;
}

struct RuleCache::Impl {
    std::mutex mu;
    std::map<std::tuple<int, int, int>, std::shared_ptr<const QuadratureRule>> rules;
};

std::shared_ptr<RuleCache::Impl> RuleCache::make_impl() {
    return std::make_shared<Impl>();
}

std::shared_ptr<const QuadratureRule> RuleCache::get(int m, int n, Parity parity) {
    const auto key = std::make_tuple(m, n, static_cast<int>(parity));
    {
        std::lock_guard<std::mutex> lock(impl_->mu);
        auto it = impl_->rules.find(key);
        if (it != impl_->rules.end()) return it->second;
    }
    auto rule = std::make_shared<const QuadratureRule>(build_rule(m, n, parity));
    std::lock_guard<std::mutex> lock(impl_->mu);
    auto [it, inserted] = impl_->rules.emplace(key, std::move(rule));
    return it->second;
}

} // namespace bfly::quadrature
