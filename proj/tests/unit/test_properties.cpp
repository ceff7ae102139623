#include <doctest.h>

#include <bit>
#include <cmath>
#include <memory>
#include <random>

#include "vinf/merkle.hpp"
#include "vinf/path_test.hpp"
#include "vinf/protocol.hpp"
#include "vinf/refereed.hpp"

using namespace vinf;

namespace {

Architecture random_arch(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> depth(1, 4), width(1, 7), act(0, 2);
    std::vector<std::size_t> widths;
    const int L = depth(rng);
    for (int l = 0; l <= L; ++l) widths.push_back(static_cast<std::size_t>(width(rng)));
    auto a = Architecture::dense(widths, static_cast<Activation>(act(rng)), static_cast<Activation>(act(rng)));
    a.has_bias = rng() % 4 != 0;
    return a;
}

std::vector<float> random_query(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> u(-2.0f, 2.0f);
    std::vector<float> q(n);
    for (float& x : q) x = u(rng);
    return q;
}

}  // namespace

TEST_SUITE("property") {

TEST_CASE("honest sessions on random models accept bit-exactly") {
    std::mt19937_64 rng(101);
    for (int i = 0; i < 150; ++i) {
        auto arch = random_arch(rng);
        auto m = gen_random_model(rng(), arch);
        proto::ProtocolConfig cfg = proto::ProtocolConfig::strict();
        cfg.num_paths = 1 + rng() % 4;
        cfg.cover_outputs = rng() % 2;
        auto pp = proto::gen_params(128, arch, cfg);
        auto t = proto::run_honest(pp, m, random_query(arch.input_width(), rng), path::Challenge::from_seed(rng()));
        auto r = proto::replay(pp, t);
        INFO("model ", i, ": ", proto::to_string(r.reason), " ", r.detail);
        CHECK(r.accept);
    }
}

TEST_CASE("a path through a tampered node always rejects") {
    std::mt19937_64 rng(202);
    std::size_t visited = 0;
    for (int i = 0; i < 300; ++i) {
        auto arch = random_arch(rng);
        auto m = gen_random_model(rng(), arch);
        auto q = random_query(arch.input_width(), rng);
        auto t = eval_trace(m, q);
        std::uniform_int_distribution<std::size_t> pos(arch.input_width(), arch.trace_size() - 1);
        const std::size_t node = pos(rng);
        t.values[node] = std::nextafter(t.values[node], 1e30f) + static_cast<float>(rng() % 3);
        auto c = path::Challenge::from_seed(rng());
        path::PathOptions opts{1 + rng() % 3, false};
        auto [layer, idx] = arch.locate(node);
        bool on_path = false;
        for (const auto& p : path::derive_paths(arch, c, opts)) on_path |= p.at_layer(layer) == idx;
        auto rep = path::rand_path_test(arch, path::InMemoryModel(m), path::InMemoryTrace(t), q, c, opts, 0.0);
        if (on_path) {
            ++visited;
            CHECK_FALSE(rep.accept);
        }
    }
    CHECK(visited > 50);
}

TEST_CASE("random vectors open and verify at every sampled index") {
    std::mt19937_64 rng(303);
    vc::VcParams params;
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 1 + rng() % 300;
        std::vector<Bytes> values(n);
        for (auto& v : values) {
            v.resize(rng() % 40);
            for (auto& b : v) b = static_cast<std::uint8_t>(rng());
        }
        auto tree = vc::MerkleTree::build(params, values);
        auto cm = tree.commitment();
        CHECK(cm == vc::commit_vec(params, values, 3));
        const std::size_t k = rng() % n;
        auto proof = vc::deserialize_opening(vc::serialize_opening(tree.open(k, values[k])));
        CHECK(proof.siblings.size() == vc::tree_depth(n));
        CHECK(vc::verify_opening(params, cm, k, values[k], proof));
        Bytes other = values[k];
        other.push_back(0x5a);
        CHECK_FALSE(vc::verify_opening(params, cm, k, other, proof));
        if (n > 1) CHECK_FALSE(vc::verify_opening(params, cm, (k + 1) % n, values[k], proof));
    }
}

TEST_CASE("refereed game: the honest party wins against a single divergence in either seat") {
    std::mt19937_64 rng(404);
    ref::RefereeConfig cfg;
    for (int i = 0; i < 60; ++i) {
        auto arch = random_arch(rng);
        auto model = std::make_shared<const Model>(gen_random_model(rng(), arch));
        auto q = random_query(arch.input_width(), rng);
        auto honest_values = eval_trace(*model, q).values;
        auto bad = honest_values;
        std::uniform_int_distribution<std::size_t> pos(arch.input_width(), arch.trace_size() - 1);
        bad[pos(rng)] += 0.5f;
        const auto cm = vc::commit_to_model(cfg.vc, *model);
        const std::size_t n = ref::last_index(arch.trace_size());
        for (bool honest_first : {true, false}) {
            ref::TraceParty h(cfg.vc, model, honest_values), c(cfg.vc, model, bad);
            auto v = honest_first ? ref::run_bisection(h, c, arch, cm, q, cfg) : ref::run_bisection(c, h, arch, cm, q, cfg);
            CHECK(v.winner == (honest_first ? ref::Winner::P1 : ref::Winner::P2));
            CHECK(v.rounds == static_cast<std::size_t>(std::countr_zero(n)));
        }
    }
}

TEST_CASE("serialization round trips on random objects") {
    std::mt19937_64 rng(505);
    for (int i = 0; i < 50; ++i) {
        auto arch = random_arch(rng);
        auto m = gen_random_model(rng(), arch);
        CHECK(deserialize_model(serialize_model(m)) == m);
        CHECK(deserialize_model_text(serialize_model_text(m)) == m);
        auto q = random_query(arch.input_width(), rng);
        auto t = eval_trace(m, q);
        CHECK(deserialize_trace(serialize_trace(t)) == t);

        proto::ProtocolConfig cfg;
        cfg.num_paths = 1 + rng() % 5;
        cfg.tol = std::ldexp(1.0, -static_cast<int>(rng() % 30));
        auto pp = proto::gen_params(128, arch, cfg);
        CHECK(proto::params_from_json(proto::params_to_json(pp)) == pp);
        auto tr = proto::run_honest(pp, m, q, path::Challenge::from_seed(rng()));
        CHECK(proto::deserialize_transcript(proto::serialize_transcript(tr)) == tr);
        CHECK(proto::deserialize_proof2(proto::serialize_proof2(*tr.proof2)) == *tr.proof2);
    }
}

}
