#include "vinf/bench.hpp"

#include <chrono>
#include <random>
#include <vector>

#include <json.hpp>

#include "vinf/merkle.hpp"
#include "vinf/parallel.hpp"

namespace vinf::bench {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

CommitBench run_commit_bench(const SyntheticShape& shape, unsigned threads, std::uint64_t seed) {
    CommitBench out;
    out.shape = shape;
    out.threads = threads;

    std::vector<vc::FloatMatrix> tensors(shape.tensors());
    parallel_for(tensors.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ull * (t + 1)));
            std::normal_distribution<float> n(0.0f, 1.0f);
            auto& m = tensors[t];
            m.rows = shape.rows;
            m.cols = shape.cols;
            m.data.resize(shape.rows * shape.cols);
            for (float& v : m.data) v = n(rng);
        }
    });
    // Alternate matrix-multiply inputs and element-wise outputs; both commit
    // the same tensor here, which is all the benchmark needs.
    std::vector<vc::TracedLayer> layers;
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        vc::TracedLayer l;
        l.kind = t % 2 == 0 ? vc::LayerKind::MatMul : vc::LayerKind::ElementWise;
        l.input = &tensors[t];
        l.output = &tensors[t];
        layers.push_back(l);
    }

    vc::VcParams params;
    auto t0 = Clock::now();
    auto single = vc::HybridTraceCommitment::build(params, layers, 1);
    out.commit_seconds_single = seconds_since(t0);
    t0 = Clock::now();
    auto threaded = vc::HybridTraceCommitment::build(params, layers, threads);
    out.commit_seconds_threaded = seconds_since(t0);
    if (!(single.commitment() == threaded.commitment())) throw Error("threaded commitment differs");

    const auto cm = single.commitment();
    out.leaf_count = cm.length;
    out.depth = vc::tree_depth(cm.length);
    out.root_hex = to_hex(cm.root);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> row(0, shape.rows - 1);
    std::vector<vc::OpeningProof> proofs;
    std::size_t value_bytes = 0;
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        proofs.push_back(single.open_row(t, row(rng)));
        const std::size_t sz = vc::serialize_opening(proofs.back()).size();
        if (t == 0) out.opening_bytes = sz;
        out.path_proof_bytes += sz;
        value_bytes += proofs.back().value.size();
    }
    out.path_openings = proofs.size();
    out.path_overhead_bytes = out.path_proof_bytes - value_bytes;

    t0 = Clock::now();
    for (const auto& p : proofs) {
        auto decoded = vc::deserialize_opening(vc::serialize_opening(p));
        if (!vc::verify_opening(params, cm, decoded.index, decoded.value, decoded))
            throw Error("benchmark opening failed to verify");
    }
    out.verify_ms = seconds_since(t0) * 1e3;
    return out;
}

std::string to_json(const CommitBench& b) {
    nlohmann::ordered_json j;
    j["shape"] = "llama-synthetic";
    j["tensors"] = b.shape.tensors();
    j["rows"] = b.shape.rows;
    j["cols"] = b.shape.cols;
    j["bytes_committed"] = b.shape.bytes();
    j["leaf_count"] = b.leaf_count;
    j["depth"] = b.depth;
    j["root"] = b.root_hex;
    j["threads"] = b.threads;
    j["commit_seconds_single"] = b.commit_seconds_single;
    j["commit_seconds_threaded"] = b.commit_seconds_threaded;
    j["opening_bytes"] = b.opening_bytes;
    j["path_openings"] = b.path_openings;
    j["path_proof_bytes"] = b.path_proof_bytes;
    j["path_overhead_bytes"] = b.path_overhead_bytes;
    j["verify_ms"] = b.verify_ms;
    return j.dump();
}

}  // namespace vinf::bench
