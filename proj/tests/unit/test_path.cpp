#include <doctest.h>

#include <map>
#include <optional>
#include <set>

#include "support.hpp"
#include "vinf/error.hpp"
#include "vinf/fixtures.hpp"
#include "vinf/path_test.hpp"

using namespace vinf;

namespace {

/// Trace oracle that hides some positions.
class HolesTrace final : public path::TraceOracle {
public:
    HolesTrace(const Trace& t, std::set<std::size_t> holes) : t_(t), holes_(std::move(holes)) {}
    std::optional<float> activation(std::size_t flat) const override {
        if (holes_.count(flat) || flat >= t_.values.size()) return std::nullopt;
        return t_.values[flat];
    }

private:
    const Trace& t_;
    std::set<std::size_t> holes_;
};

}  // namespace

TEST_SUITE("path") {

TEST_CASE("derived paths match the hashlib oracle") {
    const auto& o = testing::oracles()["paths"];
    auto c = path::Challenge::from_seed(o["seed"].get<std::uint64_t>());
    CHECK(to_hex(ByteSpan(c.rho)) == o["rho"].get<std::string>());
    auto arch = fixtures::iris_arch();
    auto paths = path::derive_paths(arch, c, 5);
    REQUIRE(paths.size() == 5);
    for (std::size_t p = 0; p < 5; ++p) CHECK(paths[p].nodes == o["paths"][p].get<std::vector<std::size_t>>());
}

TEST_CASE("paths have one in-range node per layer; layer indexing is output first") {
    auto arch = fixtures::iris_arch();
    auto paths = path::derive_paths(arch, path::Challenge::from_seed(3), 20);
    for (const auto& p : paths) {
        REQUIRE(p.nodes.size() == 4);
        for (std::size_t l = 0; l <= 3; ++l) CHECK(p.at_layer(l) < arch.widths[l]);
        CHECK(p.at_layer(3) == p.nodes.front());
    }
    CHECK_THROWS_AS(path::derive_paths(arch, path::Challenge::from_seed(3), 0), Error);
}

TEST_CASE("cover_outputs starts path p at output node p mod width") {
    auto arch = fixtures::iris_arch();
    auto paths = path::derive_paths(arch, path::Challenge::from_seed(8), path::PathOptions{7, true});
    for (std::size_t p = 0; p < paths.size(); ++p) CHECK(paths[p].at_layer(3) == p % 3);
}

TEST_CASE("challenge stream indices are unbiased over a small bound") {
    path::ChallengeStream s(path::Challenge::from_seed(1), 0);
    std::map<std::size_t, int> counts;
    const int n = 30000;
    for (int i = 0; i < n; ++i) ++counts[s.uniform(3)];
    for (auto [k, c] : counts) CHECK(std::abs(c - n / 3) < 4 * 82);  // 4 sigma
    CHECK_THROWS_AS(s.uniform(0), Error);
}

TEST_CASE("honest trace passes in strict mode") {
    auto m = load_model(testing::fixture("iris_model.json"));
    std::vector<float> q{0.3f, 0.6f, 0.2f, 0.9f};
    auto t = eval_trace(m, q);
    path::InMemoryModel mo(m);
    path::InMemoryTrace to(t);
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto r = path::rand_path_test(m.arch, mo, to, q, path::Challenge::from_seed(s), {4, false}, 0.0);
        CHECK(r.accept);
        CHECK(r.paths_checked == 4);
        CHECK(r.residuals.size() == 16);
    }
}

TEST_CASE("a tampered node on the path fails the local check") {
    auto m = fixtures::f1();
    std::vector<float> q{0.5f, -0.5f};
    auto t = eval_trace(m, q);
    auto c = path::Challenge::from_seed(4);
    auto p = path::derive_paths(m.arch, c, 1).front();
    const std::size_t hit = m.arch.offset(2) + p.at_layer(2);
    t.values[hit] += 0.01f;
    path::InMemoryModel mo(m);
    path::InMemoryTrace to(t);
    auto r = path::rand_path_test(m.arch, mo, to, q, c, {1, false}, 1e-4);
    CHECK_FALSE(r.accept);
    CHECK(r.failure == path::Failure::LocalCheck);
    CHECK(r.failing_node == hit);
}

TEST_CASE("a trace for another query fails the input anchor") {
    auto m = fixtures::f1();
    std::vector<float> q{0.5f, -0.5f};
    auto t = eval_trace(m, std::vector<float>{0.4f, -0.4f});
    path::InMemoryModel mo(m);
    path::InMemoryTrace to(t);
    auto r = path::rand_path_test(m.arch, mo, to, q, path::Challenge::from_seed(1), {1, false}, 1e-4);
    CHECK_FALSE(r.accept);
    CHECK(r.failure == path::Failure::InputAnchor);
    CHECK(*r.failing_node < 2);
    CHECK_THROWS_AS(path::rand_path_test(m.arch, mo, to, std::vector<float>{1.0f}, path::Challenge::from_seed(1),
                                         {1, false}, 1e-4),
                    ShapeError);
}

TEST_CASE("missing values reject") {
    auto m = fixtures::f1();
    std::vector<float> q{0.5f, -0.5f};
    auto t = eval_trace(m, q);
    path::InMemoryModel mo(m);
    HolesTrace holes(t, {2, 3});  // the whole hidden layer
    auto r = path::rand_path_test(m.arch, mo, holes, q, path::Challenge::from_seed(1), {1, false}, 1e-4);
    CHECK_FALSE(r.accept);
    CHECK(r.failure == path::Failure::MissingValue);
}

TEST_CASE("strawman test checks one non-input node") {
    auto m = fixtures::f1();
    std::vector<float> q{0.5f, -0.5f};
    auto t = eval_trace(m, q);
    std::set<std::size_t> chosen;
    for (std::uint64_t s = 0; s < 64; ++s) {
        auto c = path::Challenge::from_seed(s);
        auto n = path::strawman_node(m.arch, c);
        CHECK(n >= 2);
        CHECK(n < 6);
        chosen.insert(n);
        auto bad = t;
        bad.values[n] += 1.0f;
        path::InMemoryModel mo(m);
        path::InMemoryTrace good_o(t), bad_o(bad);
        CHECK(path::strawman_test(m.arch, mo, good_o, c, 0.0).accept);
        CHECK_FALSE(path::strawman_test(m.arch, mo, bad_o, c, 0.0).accept);
    }
    CHECK(chosen.size() == 4);
}

}
