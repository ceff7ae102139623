#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace vinf::bench {

/// Synthetic transformer-shaped trace: `blocks` blocks of `tensors_per_block`
/// activation tensors, each rows x cols float32, committed row-wise.
struct SyntheticShape {
    std::size_t blocks = 32;
    std::size_t tensors_per_block = 6;
    std::size_t rows = 64;
    std::size_t cols = 4096;

    std::size_t tensors() const { return blocks * tensors_per_block; }
    std::size_t bytes() const { return tensors() * rows * cols * sizeof(float); }
};

struct CommitBench {
    SyntheticShape shape;
    unsigned threads = 1;
    std::size_t leaf_count = 0;
    std::size_t depth = 0;
    std::string root_hex;
    double commit_seconds_single = 0.0;
    double commit_seconds_threaded = 0.0;
    std::size_t opening_bytes = 0;       // one serialized row opening
    std::size_t path_openings = 0;       // one row per tensor
    std::size_t path_proof_bytes = 0;    // all of them, serialized
    std::size_t path_overhead_bytes = 0; // path_proof_bytes minus the row values
    double verify_ms = 0.0;              // checking every path opening
};

/// Fills the tensors from `seed`, commits once single-threaded and once
/// with `threads` workers, then opens and verifies one random row per tensor.
CommitBench run_commit_bench(const SyntheticShape& shape, unsigned threads, std::uint64_t seed);

std::string to_json(const CommitBench& b);

}  // namespace vinf::bench
