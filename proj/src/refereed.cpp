#include "vinf/refereed.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include <json.hpp>

#include "vinf/error.hpp"

namespace vinf::ref {

Bytes encode_entry(const HashedTraceEntry& e) {
    Bytes out(4 + 32);
    std::memcpy(out.data(), &e.a, 4);
    std::memcpy(out.data() + 4, e.prefix.data(), 32);
    return out;
}

std::optional<HashedTraceEntry> decode_entry(ByteSpan bytes) {
    if (bytes.size() != 36) return std::nullopt;
    HashedTraceEntry e;
    std::memcpy(&e.a, bytes.data(), 4);
    std::memcpy(e.prefix.data(), bytes.data() + 4, 32);
    return e;
}

Digest chain(const Digest& prefix, float a) {
    std::uint8_t buf[4];
    std::memcpy(buf, &a, 4);
    Sha256 h;
    return h.update(prefix).update(ByteSpan(buf, 4)).finish();
}

Digest empty_prefix() { return sha256(ByteSpan{}); }

std::size_t last_index(std::size_t num_real) {
    if (num_real == 0) throw Error("hashed trace needs at least one activation");
    return num_real <= 2 ? 1 : std::bit_ceil(num_real - 1);
}

HashedTrace build_hashed_trace(std::span<const float> values) {
    HashedTrace h;
    h.num_real = values.size();
    const std::size_t n = last_index(values.size());
    h.entries.reserve(n + 1);
    Digest prefix = empty_prefix();
    for (std::size_t k = 0; k <= n; ++k) {
        float a = k < values.size() ? values[k] : 0.0f;
        h.entries.push_back({a, prefix});
        prefix = chain(prefix, a);
    }
    return h;
}

vc::Commitment commit_hashed_trace(const vc::VcParams& params, const HashedTrace& h) {
    std::vector<Bytes> leaves;
    leaves.reserve(h.entries.size());
    for (const auto& e : h.entries) leaves.push_back(encode_entry(e));
    return vc::commit_vec(params, leaves);
}

// ---------------------------------------------------------------------------

TraceParty::TraceParty(const vc::VcParams& params, std::shared_ptr<const Model> model, std::vector<float> values)
    : model_(std::move(model)), hashed_(build_hashed_trace(values)) {
    leaves_.reserve(hashed_.entries.size());
    for (const auto& e : hashed_.entries) leaves_.push_back(encode_entry(e));
    tree_ = vc::MerkleTree::build(params, leaves_);
    model_tree_ = vc::MerkleTree::build(params, vc::model_leaves(*model_));
}

std::optional<vc::OpeningProof> TraceParty::open(std::size_t k) {
    if (k >= leaves_.size()) return std::nullopt;
    return tree_.open(k, leaves_[k]);
}

std::optional<FinalOpening> TraceParty::final_open(std::size_t first, std::size_t ell) {
    if (first > ell || ell >= leaves_.size()) return std::nullopt;
    FinalOpening f;
    for (std::size_t i = first; i <= ell; ++i) f.entries.push_back(tree_.open(i, leaves_[i]));
    const Architecture& arch = model_->arch;
    if (ell >= arch.input_width() && ell < arch.trace_size()) {
        auto [layer, node] = arch.locate(ell);
        f.weights = model_tree_.open(arch.weight_row_index(layer, node), vc::encode_floats(model_->fan_in_row(layer, node)));
    }
    return f;
}

std::unique_ptr<TraceParty> make_honest_party(const vc::VcParams& params, std::shared_ptr<const Model> model,
                                              std::span<const float> qry) {
    Trace t = eval_trace(*model, qry);
    return std::make_unique<TraceParty>(params, std::move(model), std::move(t.values));
}

std::string_view to_string(Winner w) {
    switch (w) {
        case Winner::P1: return "P1";
        case Winner::P2: return "P2";
        case Winner::BothRejected: return "both-rejected";
    }
    return "?";
}

// ---------------------------------------------------------------------------

namespace {

std::optional<HashedTraceEntry> checked_open(Party& p, const vc::VcParams& params, const vc::Commitment& cm,
                                             std::size_t k) {
    auto proof = p.open(k);
    if (!proof || !vc::verify_opening(params, cm, k, proof->value, *proof)) return std::nullopt;
    return decode_entry(proof->value);
}

bool same(const HashedTraceEntry& x, const HashedTraceEntry& y) {
    return std::bit_cast<std::uint32_t>(x.a) == std::bit_cast<std::uint32_t>(y.a) && x.prefix == y.prefix;
}

nlohmann::json value_json(const std::optional<HashedTraceEntry>& e) {
    if (!e) return nullptr;
    if (!std::isfinite(e->a)) return std::to_string(e->a);
    return e->a;
}

/// Resolves a round where either party may have misbehaved. Returns true
/// (and fills the verdict) when the game ends here.
bool settle(bool bad1, bool bad2, std::size_t index, const std::string& why, Verdict& v) {
    if (!bad1 && !bad2) return false;
    v.winner = bad1 && bad2 ? Winner::BothRejected : bad1 ? Winner::P2 : Winner::P1;
    v.failing_index = index;
    v.reason = why;
    return true;
}

}  // namespace

StepCheck referee_verify_step(const Architecture& arch, const RefereeConfig& cfg, const vc::Commitment& cm_model,
                              const vc::Commitment& cm_party, std::span<const float> qry, std::size_t ell,
                              const FinalOpening& opening) {
    StepCheck r;
    const std::size_t real = arch.trace_size();
    const bool is_input = ell < arch.input_width();
    const bool is_padding = ell >= real;
    if (ell == 0) {
        r.reason = "entry 0 has no predecessor";
        return r;
    }
    const std::size_t first = (is_input || is_padding) ? ell - 1 : arch.offset(arch.locate(ell).first - 1);
    if (opening.entries.size() != ell - first + 1) {
        r.reason = "wrong number of opened entries";
        return r;
    }
    std::vector<HashedTraceEntry> e;
    for (std::size_t i = 0; i < opening.entries.size(); ++i) {
        const auto& p = opening.entries[i];
        if (!vc::verify_opening(cfg.vc, cm_party, first + i, p.value, p)) {
            r.reason = "entry " + std::to_string(first + i) + " opening does not verify";
            return r;
        }
        auto d = decode_entry(p.value);
        if (!d) {
            r.reason = "entry " + std::to_string(first + i) + " malformed";
            return r;
        }
        e.push_back(*d);
    }
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
        if (e[i + 1].prefix != chain(e[i].prefix, e[i].a)) {
            r.reason = "prefix chain broken at entry " + std::to_string(first + i + 1);
            return r;
        }
    }
    const float claimed = e.back().a;
    float expect;
    if (is_padding) {
        expect = 0.0f;
    } else if (is_input) {
        expect = qry[ell];
    } else {
        auto [layer, node] = arch.locate(ell);
        if (!opening.weights) {
            r.reason = "weights for node " + std::to_string(ell) + " not opened";
            return r;
        }
        const auto& w = *opening.weights;
        if (w.value.size() != 4 * arch.fan_in(layer) ||
            !vc::verify_opening(cfg.vc, cm_model, arch.weight_row_index(layer, node), w.value, w)) {
            r.reason = "weight opening for node " + std::to_string(ell) + " does not verify";
            return r;
        }
        auto row = vc::decode_floats(w.value);
        std::vector<float> parents;
        for (std::size_t i = 0; i < arch.widths[layer - 1]; ++i) parents.push_back(e[i].a);
        expect = neuron_output(arch.activation(layer), row, parents);
    }
    r.exact = std::bit_cast<std::uint32_t>(claimed) == std::bit_cast<std::uint32_t>(expect);
    r.residual = std::isfinite(claimed) ? std::abs(static_cast<double>(claimed) - static_cast<double>(expect))
                                        : std::numeric_limits<double>::infinity();
    // Input and padding entries are copies, so only exact agreement counts.
    const bool tolerant = cfg.tol > 0.0 && !is_input && !is_padding;
    r.ok = r.exact || (tolerant && r.residual <= cfg.tol);
    if (!r.ok)
        r.reason = is_padding ? "padding entry is not zero"
                   : is_input ? "input entry does not match the query"
                              : "local check failed at node " + std::to_string(ell);
    return r;
}

Verdict run_bisection(Party& p1, Party& p2, const Architecture& arch, const vc::Commitment& cm_model,
                      std::span<const float> qry, const RefereeConfig& cfg) {
    arch.validate();
    if (qry.size() != arch.input_width()) throw ShapeError("query length does not match the input layer");
    const std::size_t n = last_index(arch.trace_size());
    const std::size_t k_in = arch.input_width() - 1;
    const vc::Commitment c1 = p1.commitment();
    const vc::Commitment c2 = p2.commitment();

    Verdict v;
    if (settle(c1.length != n + 1, c2.length != n + 1, n, "hashed trace commitment has the wrong length", v))
        return v;

    auto a1 = checked_open(p1, cfg.vc, c1, n);
    auto a2 = checked_open(p2, cfg.vc, c2, n);
    if (settle(!a1, !a2, n, "could not open the final entry", v)) return v;
    if (same(*a1, *a2)) throw Error("parties agree on the final entry; nothing to referee");

    // Expected entries for the input prefix, derived from the query.
    std::vector<HashedTraceEntry> anchor;
    {
        Digest prefix = empty_prefix();
        for (float x : qry) {
            anchor.push_back({x, prefix});
            prefix = chain(prefix, x);
        }
    }

    std::size_t k = 0, ell = n;
    while (ell > k + 1) {
        ++v.rounds;
        const std::size_t u = (k + ell) / 2;
        std::optional<HashedTraceEntry> e1[3], e2[3];
        const std::size_t idx[3] = {k, ell, u};
        bool bad1 = false, bad2 = false;
        for (int i = 0; i < 3; ++i) {
            e1[i] = checked_open(p1, cfg.vc, c1, idx[i]);
            e2[i] = checked_open(p2, cfg.vc, c2, idx[i]);
            bad1 |= !e1[i];
            bad2 |= !e2[i];
        }
        nlohmann::json rec{{"round", v.rounds}, {"k", k}, {"l", ell}, {"u", u},
                           {"a1", value_json(e1[2])}, {"a2", value_json(e2[2])}};
        if (settle(bad1, bad2, u, "opening refused or invalid", v)) {
            rec["decision"] = "forfeit";
            v.log.push_back(rec.dump());
            return v;
        }
        if (k <= k_in && settle(!same(*e1[0], anchor[k]), !same(*e2[0], anchor[k]), k,
                                "entry " + std::to_string(k) + " does not match the query", v)) {
            rec["decision"] = "input-mismatch";
            v.log.push_back(rec.dump());
            return v;
        }
        if (!same(*e1[2], *e2[2])) {
            ell = u;
            rec["decision"] = "l<-u";
        } else {
            k = u;
            rec["decision"] = "k<-u";
        }
        v.log.push_back(rec.dump());
    }

    const bool special = ell < arch.input_width() || ell >= arch.trace_size();
    const std::size_t first = special ? ell - 1 : arch.offset(arch.locate(ell).first - 1);
    auto f1 = p1.final_open(first, ell);
    auto f2 = p2.final_open(first, ell);
    StepCheck s1, s2;
    if (f1) s1 = referee_verify_step(arch, cfg, cm_model, c1, qry, ell, *f1);
    else s1.reason = "refused the final opening";
    if (f2) s2 = referee_verify_step(arch, cfg, cm_model, c2, qry, ell, *f2);
    else s2.reason = "refused the final opening";

    v.failing_index = ell;
    if (s1.ok != s2.ok) {
        v.winner = s1.ok ? Winner::P1 : Winner::P2;
        v.reason = s1.ok ? s2.reason : s1.reason;
    } else if (!s1.ok) {
        v.winner = Winner::BothRejected;
        v.reason = "both parties failed the final step";
    } else if (s1.exact != s2.exact) {
        v.winner = s1.exact ? Winner::P1 : Winner::P2;
        v.reason = "only one party matches the recomputation exactly";
    } else if (s1.residual != s2.residual) {
        v.winner = s1.residual < s2.residual ? Winner::P1 : Winner::P2;
        v.reason = "smaller local-check residual";
    } else {
        v.winner = Winner::BothRejected;
        v.reason = "indistinguishable final step";
    }
    auto party_json = [](const StepCheck& s) {
        return nlohmann::json{{"ok", s.ok}, {"exact", s.exact},
                              {"residual", std::isfinite(s.residual) ? nlohmann::json(s.residual) : nlohmann::json("inf")}};
    };
    nlohmann::json fin{{"final", ell}, {"p1", party_json(s1)}, {"p2", party_json(s2)},
                       {"winner", std::string(to_string(v.winner))}};
    v.log.push_back(fin.dump());
    return v;
}

}  // namespace vinf::ref
