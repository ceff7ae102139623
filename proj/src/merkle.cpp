#include "vinf/merkle.hpp"

#include <bit>
#include <cstring>

#include "vinf/error.hpp"
#include "vinf/parallel.hpp"

namespace vinf::vc {

namespace {

constexpr std::string_view kOpeningMagic = "VINF-OPN";
constexpr std::uint8_t kLeafTag = 0x00;
constexpr std::uint8_t kNodeTag = 0x01;

void check_length(const VcParams& params, std::uint64_t n) {
    if (n == 0) throw Error("cannot commit to an empty vector");
    if (n > params.max_len)
        throw Error("vector length " + std::to_string(n) + " exceeds max_len " + std::to_string(params.max_len));
}

}  // namespace

std::size_t padded_length(std::uint64_t n) { return n <= 1 ? 1 : std::bit_ceil(n); }

std::size_t tree_depth(std::uint64_t n) { return static_cast<std::size_t>(std::countr_zero(padded_length(n))); }

Digest leaf_hash(std::uint64_t index, ByteSpan value) {
    Sha256 h;
    return h.update_u8(kLeafTag).update_u64(index).update(value).finish();
}

Digest node_hash(const Digest& left, const Digest& right) {
    Sha256 h;
    return h.update_u8(kNodeTag).update(left).update(right).finish();
}

// ---------------------------------------------------------------------------

MerkleTree MerkleTree::build(const VcParams& params, std::size_t n, const LeafSource& leaf, unsigned threads) {
    check_length(params, n);
    MerkleTree t;
    t.length_ = n;
    std::size_t width = padded_length(n);
    std::vector<Digest> level(width);
    parallel_for(width, threads, [&](std::size_t begin, std::size_t end) {
        Sha256 h;
        for (std::size_t i = begin; i < end; ++i) {
            h.update_u8(kLeafTag).update_u64(i);
            if (i < n) h.update(leaf(i));
            level[i] = h.finish();
        }
    });
    t.levels_.push_back(std::move(level));
    while (t.levels_.back().size() > 1) {
        const auto& below = t.levels_.back();
        std::vector<Digest> up(below.size() / 2);
        unsigned lvl_threads = up.size() >= 4096 ? threads : 1;
        parallel_for(up.size(), lvl_threads, [&](std::size_t begin, std::size_t end) {
            Sha256 h;
            for (std::size_t i = begin; i < end; ++i)
                up[i] = h.update_u8(kNodeTag).update(below[2 * i]).update(below[2 * i + 1]).finish();
        });
        t.levels_.push_back(std::move(up));
    }
    return t;
}

MerkleTree MerkleTree::build(const VcParams& params, std::span<const Bytes> values, unsigned threads) {
    return build(params, values.size(), [&values](std::size_t i) { return ByteSpan(values[i]); }, threads);
}

Commitment MerkleTree::commitment() const { return Commitment{root(), length_}; }

OpeningProof MerkleTree::open(std::size_t i, ByteSpan value) const {
    if (i >= length_) throw IndexError("opening index " + std::to_string(i) + " >= length " + std::to_string(length_));
    OpeningProof p;
    p.index = i;
    p.value.assign(value.begin(), value.end());
    std::size_t pos = i;
    for (std::size_t l = 0; l + 1 < levels_.size(); ++l) {
        p.siblings.push_back(levels_[l][pos ^ 1]);
        pos >>= 1;
    }
    return p;
}

Commitment commit_vec(const VcParams& params, std::span<const Bytes> values, unsigned threads) {
    return MerkleTree::build(params, values, threads).commitment();
}

OpeningProof open(const VcParams& params, std::span<const Bytes> values, std::size_t i) {
    if (i >= values.size()) throw IndexError("opening index out of range");
    return MerkleTree::build(params, values).open(i, values[i]);
}

bool verify_opening(const VcParams& params, const Commitment& cm, std::size_t i, ByteSpan value,
                    const OpeningProof& proof) {
    if (cm.length == 0 || cm.length > params.max_len) return false;
    if (i >= cm.length || proof.index != i) return false;
    if (proof.value.size() != value.size() || !std::equal(value.begin(), value.end(), proof.value.begin()))
        return false;
    if (proof.siblings.size() != tree_depth(cm.length)) return false;
    Digest acc = leaf_hash(i, value);
    std::size_t pos = i;
    for (const auto& sib : proof.siblings) {
        acc = (pos & 1) ? node_hash(sib, acc) : node_hash(acc, sib);
        pos >>= 1;
    }
    return acc == cm.root;
}

// ---------------------------------------------------------------------------
// Wire format

void write_opening(ByteWriter& w, const OpeningProof& proof) {
    if (proof.value.size() > UINT32_MAX || proof.siblings.size() > UINT16_MAX)
        throw Error("opening proof too large to encode");
    w.raw(kOpeningMagic);
    w.u64(proof.index);
    w.u32(static_cast<std::uint32_t>(proof.value.size()));
    w.raw(proof.value);
    w.u16(static_cast<std::uint16_t>(proof.siblings.size()));
    for (const auto& s : proof.siblings) w.raw(s);
}

OpeningProof read_opening(ByteReader& r) {
    r.expect_magic(kOpeningMagic);
    OpeningProof p;
    p.index = r.u64();
    std::uint32_t len = r.u32();
    auto value = r.raw(len, "opening value");
    p.value.assign(value.begin(), value.end());
    std::uint16_t n = r.u16();
    p.siblings.resize(n);
    for (auto& s : p.siblings) {
        auto b = r.raw(32, "sibling hash");
        std::memcpy(s.data(), b.data(), 32);
    }
    return p;
}

Bytes serialize_opening(const OpeningProof& proof) {
    ByteWriter w;
    write_opening(w, proof);
    return std::move(w).bytes();
}

OpeningProof deserialize_opening(ByteSpan data) {
    ByteReader r(data);
    auto p = read_opening(r);
    r.expect_done("opening proof");
    return p;
}

Bytes encode_floats(std::span<const float> values) {
    Bytes out(values.size() * sizeof(float));
    std::memcpy(out.data(), values.data(), out.size());
    return out;
}

std::vector<float> decode_floats(ByteSpan bytes) {
    if (bytes.size() % sizeof(float) != 0) throw ParseError("float payload not a multiple of 4 bytes", bytes.size());
    std::vector<float> out(bytes.size() / sizeof(float));
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

// ---------------------------------------------------------------------------
// Model / trace

std::vector<Bytes> model_leaves(const Model& model) {
    model.validate();
    std::vector<Bytes> leaves;
    leaves.reserve(model.arch.weight_rows());
    for (std::size_t l = 1; l <= model.arch.num_layers(); ++l)
        for (std::size_t j = 0; j < model.arch.widths[l]; ++j) leaves.push_back(encode_floats(model.fan_in_row(l, j)));
    return leaves;
}

Commitment commit_to_model(const VcParams& params, const Model& model) {
    return commit_vec(params, model_leaves(model));
}

std::vector<Bytes> trace_leaves(const Trace& trace) {
    std::vector<Bytes> leaves;
    leaves.reserve(trace.values.size());
    for (float v : trace.values) leaves.push_back(encode_floats(std::span<const float>(&v, 1)));
    return leaves;
}

Commitment commit_trace(const VcParams& params, const Trace& trace, unsigned threads) {
    const auto* base = reinterpret_cast<const std::uint8_t*>(trace.values.data());
    return MerkleTree::build(
               params, trace.values.size(),
               [base](std::size_t i) { return ByteSpan(base + i * sizeof(float), sizeof(float)); }, threads)
        .commitment();
}

// ---------------------------------------------------------------------------
// Hybrid

const FloatMatrix& TracedLayer::committed() const {
    const FloatMatrix* m = kind == LayerKind::MatMul ? input : output;
    if (!m) throw Error("traced layer is missing the tensor its kind commits to");
    return *m;
}

HybridTraceCommitment HybridTraceCommitment::build(const VcParams& params, std::span<const TracedLayer> layers,
                                                   unsigned threads) {
    if (layers.empty()) throw Error("hybrid commitment needs at least one tensor");
    HybridTraceCommitment h;
    std::vector<std::pair<std::size_t, std::size_t>> leaf_of;  // (tensor, row)
    for (const auto& layer : layers) {
        const FloatMatrix& m = layer.committed();
        if (m.rows == 0 || m.cols == 0 || m.data.size() != m.rows * m.cols)
            throw ShapeError("hybrid commitment: empty or malformed tensor");
        h.first_leaf_.push_back(leaf_of.size());
        for (std::size_t r = 0; r < m.rows; ++r) leaf_of.emplace_back(h.tensors_.size(), r);
        h.tensors_.push_back(&m);
    }
    const auto& tensors = h.tensors_;
    auto leaf = [&tensors, &leaf_of](std::size_t i) {
        auto [t, r] = leaf_of[i];
        auto row = tensors[t]->row(r);
        return ByteSpan(reinterpret_cast<const std::uint8_t*>(row.data()), row.size_bytes());
    };
    h.tree_ = MerkleTree::build(params, leaf_of.size(), leaf, threads);
    h.cm_ = h.tree_.commitment();
    return h;
}

std::size_t HybridTraceCommitment::leaf_index(std::size_t layer, std::size_t row) const {
    if (layer >= tensors_.size() || row >= tensors_[layer]->rows) throw IndexError("hybrid row out of range");
    return first_leaf_[layer] + row;
}

OpeningProof HybridTraceCommitment::open_row(std::size_t layer, std::size_t row) const {
    auto r = tensors_.at(layer)->row(row);
    return tree_.open(leaf_index(layer, row), ByteSpan(reinterpret_cast<const std::uint8_t*>(r.data()), r.size_bytes()));
}

}  // namespace vinf::vc
