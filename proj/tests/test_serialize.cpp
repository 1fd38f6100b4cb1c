#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <sstream>

#include "bfly/rng.hpp"
#include "bfly/serialize.hpp"

using namespace bfly;
using legendre::Parity;

namespace {

std::string to_bytes(const transform::TransformPlan& tp) {
    std::ostringstream os(std::ios::binary);
    save_transform_plan(tp, os);
    return os.str();
}

} // namespace

TEST_CASE("write-read-write produces identical bytes") {
    const auto tp = transform::build_transform(2, 64, Parity::odd, 1e-13);
    const std::string first = to_bytes(tp);

    std::istringstream is(first, std::ios::binary);
    const auto loaded = load_transform_plan(is);
    const std::string second = to_bytes(loaded);
    CHECK(first.size() == second.size());
    CHECK(first == second);
}

TEST_CASE("applied results are bit-identical after a round trip") {
    const auto tp = transform::build_transform(0, 128, Parity::even, 1e-14);
    std::stringstream buffer(std::ios::in | std::ios::out | std::ios::binary);
    save_transform_plan(tp, buffer);
    buffer.seekg(0);
    const auto loaded = load_transform_plan(buffer);

    CounterRng rng(23);
    const Eigen::VectorXd v = rng.unit_vector(128);
    const Eigen::VectorXd a = transform::forward(tp, v);
    const Eigen::VectorXd b = transform::forward(loaded, v);
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(),
                      sizeof(double) * static_cast<std::size_t>(a.size())) == 0);

    const Eigen::VectorXd ta = transform::inverse(tp, v);
    const Eigen::VectorXd tb = transform::inverse(loaded, v);
    CHECK(std::memcmp(ta.data(), tb.data(),
                      sizeof(double) * static_cast<std::size_t>(ta.size())) == 0);
}

TEST_CASE("loaded metadata matches the source plan") {
    const auto tp = transform::build_transform(5, 32, Parity::odd, 1e-12, 8);
    std::stringstream buffer(std::ios::in | std::ios::out | std::ios::binary);
    save_transform_plan(tp, buffer);
    buffer.seekg(0);
    const auto loaded = load_transform_plan(buffer);
    CHECK(loaded.m == 5);
    CHECK(loaded.n == 32);
    CHECK(loaded.parity == Parity::odd);
    CHECK(loaded.plan.epsilon == 1e-12);
    CHECK(loaded.plan.block_width == 8);
    CHECK(loaded.rule.nodes == tp.rule.nodes);
    CHECK(loaded.rule.weights == tp.rule.weights);
    REQUIRE(loaded.rule.center_weight.has_value());
    CHECK(*loaded.rule.center_weight == *tp.rule.center_weight);
    CHECK(loaded.plan.stored_words == tp.plan.stored_words);
}

TEST_CASE("bad magic reports the offset") {
    std::istringstream is("XYZZY-not-a-plan", std::ios::binary);
    try {
        load_plan(is);
        FAIL("expected SerializationError");
    } catch (const SerializationError& e) {
        CHECK(e.offset() == 0);
    }
}

TEST_CASE("truncation reports an offset past the header") {
    const auto tp = transform::build_transform(0, 16, Parity::even, 1e-12, 4);
    const std::string bytes = to_bytes(tp);
    std::istringstream is(bytes.substr(0, bytes.size() / 2), std::ios::binary);
    try {
        load_transform_plan(is);
        FAIL("expected SerializationError");
    } catch (const SerializationError& e) {
        CHECK(e.offset() > 5);
        CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }
}

TEST_CASE("corrupt event kind is rejected") {
    const auto tp = transform::build_transform(0, 16, Parity::even, 1e-12, 4);
    std::string bytes = to_bytes(tp);
    // First event kind byte sits right after the fixed header and count.
    const std::size_t kind_at = 5 + 8 * 5 + 8;
    bytes[kind_at] = 9;
    std::istringstream is(bytes, std::ios::binary);
    CHECK_THROWS_AS(load_transform_plan(is), SerializationError);
}

TEST_CASE("quadrature rule files round trip") {
    const auto rule = quadrature::build_rule(3, 12, Parity::odd);
    const std::string path = "rule_roundtrip.bin";
    save_rule_file(rule, path);
    const auto loaded = load_rule_file(path);
    CHECK(loaded.m == rule.m);
    CHECK(loaded.n == rule.n);
    CHECK(loaded.parity == rule.parity);
    CHECK(loaded.nodes == rule.nodes);
    CHECK(loaded.weights == rule.weights);
    REQUIRE(loaded.center_weight.has_value());
    CHECK(*loaded.center_weight == *rule.center_weight);
    std::remove(path.c_str());
}
