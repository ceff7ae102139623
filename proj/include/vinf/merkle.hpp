#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "vinf/bytes.hpp"
#include "vinf/hash.hpp"
#include "vinf/model.hpp"

namespace vinf::vc {

/// Public parameters of the Merkle vector commitment. The hash is fixed to
/// SHA-256; only the maximum vector length is configurable.
struct VcParams {
    std::uint64_t max_len = std::uint64_t{1} << 40;

    bool operator==(const VcParams&) const = default;
};

struct Commitment {
    Digest root{};
    std::uint64_t length = 0;

    bool operator==(const Commitment&) const = default;
};

struct OpeningProof {
    std::uint64_t index = 0;
    Bytes value;
    std::vector<Digest> siblings;  // bottom-up

    bool operator==(const OpeningProof&) const = default;
};

std::size_t padded_length(std::uint64_t n);
/// ceil(log2(padded_length(n))), the sibling count of every opening.
std::size_t tree_depth(std::uint64_t n);

Digest leaf_hash(std::uint64_t index, ByteSpan value);
Digest node_hash(const Digest& left, const Digest& right);

/// Provides the bytes of leaf `i`; must be safe to call concurrently.
using LeafSource = std::function<ByteSpan(std::size_t)>;

/// Full Merkle tree kept in memory for repeated openings.
///
/// Leaves are H(0x00 || le64(i) || value); inner nodes H(0x01 || l || r).
/// The vector is padded to a power of two with H(0x00 || le64(i)).
class MerkleTree {
public:
    MerkleTree() = default;

    static MerkleTree build(const VcParams& params, std::size_t n, const LeafSource& leaf, unsigned threads = 1);
    static MerkleTree build(const VcParams& params, std::span<const Bytes> values, unsigned threads = 1);

    Commitment commitment() const;
    const Digest& root() const { return levels_.back().front(); }
    std::size_t size() const noexcept { return length_; }
    std::size_t depth() const noexcept { return levels_.empty() ? 0 : levels_.size() - 1; }

    /// Opening for position i; `value` must be the committed bytes.
    OpeningProof open(std::size_t i, ByteSpan value) const;

private:
    std::size_t length_ = 0;
    std::vector<std::vector<Digest>> levels_;  // levels_[0] = leaves
};

Commitment commit_vec(const VcParams& params, std::span<const Bytes> values, unsigned threads = 1);
OpeningProof open(const VcParams& params, std::span<const Bytes> values, std::size_t i);
bool verify_opening(const VcParams& params, const Commitment& cm, std::size_t i, ByteSpan value,
                    const OpeningProof& proof);

/// Wire form: "VINF-OPN", le64 index, le32 value length, value, le16 sibling
/// count, siblings.
void write_opening(ByteWriter& w, const OpeningProof& proof);
OpeningProof read_opening(ByteReader& r);
Bytes serialize_opening(const OpeningProof& proof);
OpeningProof deserialize_opening(ByteSpan data);

Bytes encode_floats(std::span<const float> values);
std::vector<float> decode_floats(ByteSpan bytes);

// ---------------------------------------------------------------------------
// Model and trace commitments

/// Leaf i = fan-in row (incoming weights then bias) of the i-th non-input
/// node, layer-major.
std::vector<Bytes> model_leaves(const Model& model);
Commitment commit_to_model(const VcParams& params, const Model& model);

/// Node-per-leaf layout: leaf i is the 4-byte encoding of trace value i.
std::vector<Bytes> trace_leaves(const Trace& trace);
Commitment commit_trace(const VcParams& params, const Trace& trace, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Hybrid row-wise trace commitment for tensor-shaped traces

enum class LayerKind : std::uint8_t { MatMul, ElementWise };

struct FloatMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    std::span<const float> row(std::size_t r) const { return std::span<const float>(data).subspan(r * cols, cols); }
};

/// One traced layer. Matrix-multiplication layers commit their input
/// activations; element-wise layers commit their output.
struct TracedLayer {
    LayerKind kind = LayerKind::ElementWise;
    const FloatMatrix* input = nullptr;
    const FloatMatrix* output = nullptr;

    const FloatMatrix& committed() const;
};

/// Leaves are committed rows, layer-major then row-major.
class HybridTraceCommitment {
public:
    static HybridTraceCommitment build(const VcParams& params, std::span<const TracedLayer> layers,
                                       unsigned threads = 1);

    const Commitment& commitment() const { return cm_; }
    std::size_t leaf_count() const { return cm_.length; }
    /// Leaf index of (layer, row).
    std::size_t leaf_index(std::size_t layer, std::size_t row) const;
    std::span<const std::size_t> first_leaf() const { return first_leaf_; }

    OpeningProof open_row(std::size_t layer, std::size_t row) const;

private:
    Commitment cm_;
    MerkleTree tree_;
    std::vector<const FloatMatrix*> tensors_;
    std::vector<std::size_t> first_leaf_;
};

}  // namespace vinf::vc
