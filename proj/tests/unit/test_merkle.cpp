#include <doctest.h>

#include <set>

#include "support.hpp"
#include "vinf/error.hpp"
#include "vinf/fixtures.hpp"
#include "vinf/merkle.hpp"

using namespace vinf;

TEST_SUITE("merkle") {

TEST_CASE("roots match the hashlib oracle") {
    const auto& o = testing::oracles();
    for (const char* key : {"single_leaf", "two_leaf", "five_leaf"}) {
        CAPTURE(key);
        auto values = testing::hex_values(o[key]["values"]);
        auto cm = vc::commit_vec({}, values);
        CHECK(to_hex(cm.root) == o[key]["root"].get<std::string>());
        CHECK(cm.length == values.size());
    }
}

TEST_CASE("model and trace commitments match the hashlib oracle") {
    const auto& o = testing::oracles();
    auto cm = vc::commit_to_model({}, fixtures::f1());
    CHECK(to_hex(cm.root) == o["f1_model"]["root"].get<std::string>());
    CHECK(cm.length == o["f1_model"]["length"].get<std::size_t>());
    auto iris = load_model(testing::fixture("iris_model.json"));
    CHECK(to_hex(vc::commit_to_model({}, iris).root) == o["iris_model"]["root"].get<std::string>());

    auto t = eval_trace(fixtures::f1(), o["f1_trace"]["query"].get<std::vector<float>>());
    CHECK(to_hex(vc::commit_trace({}, t).root) == o["f1_trace"]["root"].get<std::string>());
    CHECK(vc::commit_trace({}, t, 4) == vc::commit_trace({}, t, 1));
    CHECK(vc::commit_vec({}, vc::trace_leaves(t)) == vc::commit_trace({}, t));
}

TEST_CASE("padding and depth") {
    CHECK(vc::padded_length(1) == 1);
    CHECK(vc::padded_length(5) == 8);
    CHECK(vc::padded_length(8) == 8);
    CHECK(vc::tree_depth(1) == 0);
    CHECK(vc::tree_depth(5) == 3);
    CHECK(vc::tree_depth(12288) == 14);
}

TEST_CASE("every position opens and verifies; wrong values and indices fail") {
    std::vector<Bytes> values;
    for (int i = 0; i < 11; ++i) values.push_back(Bytes{static_cast<std::uint8_t>(i), 7});
    vc::VcParams pp;
    auto tree = vc::MerkleTree::build(pp, values);
    auto cm = tree.commitment();
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto p = tree.open(i, values[i]);
        CHECK(p.siblings.size() == 4);
        CHECK(vc::verify_opening(pp, cm, i, values[i], p));
        CHECK_FALSE(vc::verify_opening(pp, cm, i, values[(i + 1) % values.size()], p));
        CHECK_FALSE(vc::verify_opening(pp, cm, (i + 1) % values.size(), values[i], p));
    }
    CHECK_THROWS_AS(tree.open(11, values[0]), IndexError);
}

TEST_CASE("commitment parameters bound the length") {
    vc::VcParams small{4};
    std::vector<Bytes> five(5, Bytes{1});
    CHECK_THROWS_AS(vc::commit_vec(small, five), Error);
    CHECK_THROWS_AS(vc::commit_vec({}, std::vector<Bytes>{}), Error);
    auto cm = vc::commit_vec({}, five);
    auto p = vc::open({}, five, 2);
    CHECK_FALSE(vc::verify_opening(small, cm, 2, five[2], p));
}

TEST_CASE("opening wire format round trip and exact layout") {
    std::vector<Bytes> values{Bytes{1, 2}, Bytes{3}, Bytes{4, 5, 6}};
    auto p = vc::open({}, values, 2);
    auto wire = vc::serialize_opening(p);
    CHECK(wire.size() == 8 + 8 + 4 + 3 + 2 + 2 * 32);
    CHECK(std::string(wire.begin(), wire.begin() + 8) == "VINF-OPN");
    CHECK(wire[8] == 2);
    CHECK(wire[16] == 3);
    CHECK(wire[23] == 2);
    CHECK(vc::deserialize_opening(wire) == p);
    for (std::size_t cut : {std::size_t{0}, std::size_t{7}, std::size_t{20}, wire.size() - 1}) {
        Bytes b(wire.begin(), wire.begin() + static_cast<std::ptrdiff_t>(cut));
        CHECK_THROWS_AS(vc::deserialize_opening(b), ParseError);
    }
    wire.push_back(0);
    CHECK_THROWS_AS(vc::deserialize_opening(wire), ParseError);
}

TEST_CASE("sibling substitution is rejected on every level") {
    std::vector<Bytes> values;
    for (int i = 0; i < 16; ++i) values.push_back(Bytes{static_cast<std::uint8_t>(i)});
    auto cm = vc::commit_vec({}, values);
    auto p = vc::open({}, values, 5);
    for (std::size_t s = 0; s < p.siblings.size(); ++s) {
        auto q = p;
        q.siblings[s][0] ^= 0x80;
        CHECK_FALSE(vc::verify_opening({}, cm, 5, values[5], q));
    }
    auto shorter = p;
    shorter.siblings.pop_back();
    CHECK_FALSE(vc::verify_opening({}, cm, 5, values[5], shorter));
}

TEST_CASE("hybrid row commitment indexes rows layer-major") {
    vc::FloatMatrix a{2, 3, {1, 2, 3, 4, 5, 6}};
    vc::FloatMatrix b{3, 2, {7, 8, 9, 10, 11, 12}};
    std::vector<vc::TracedLayer> layers{{vc::LayerKind::MatMul, &a, &b}, {vc::LayerKind::ElementWise, &a, &b}};
    auto h = vc::HybridTraceCommitment::build({}, layers);
    CHECK(h.leaf_count() == 5);
    CHECK(h.leaf_index(1, 2) == 4);
    std::vector<Bytes> rows{vc::encode_floats(a.row(0)), vc::encode_floats(a.row(1)), vc::encode_floats(b.row(0)),
                            vc::encode_floats(b.row(1)), vc::encode_floats(b.row(2))};
    CHECK(h.commitment() == vc::commit_vec({}, rows));
    auto p = h.open_row(1, 1);
    CHECK(vc::verify_opening({}, h.commitment(), 3, rows[3], p));
    CHECK_THROWS_AS(h.open_row(0, 2), IndexError);
}

TEST_CASE("float encoding is little-endian IEEE") {
    auto b = vc::encode_floats(std::vector<float>{1.0f});
    CHECK(b == Bytes{0x00, 0x00, 0x80, 0x3f});
    CHECK(vc::decode_floats(b) == std::vector<float>{1.0f});
    CHECK_THROWS_AS(vc::decode_floats(Bytes{1, 2, 3}), ParseError);
}

}
