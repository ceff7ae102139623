#include "vinf/protocol.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <unordered_map>

#include <json.hpp>

#include "vinf/error.hpp"

namespace vinf::proto {

namespace {

constexpr std::string_view kTranscriptMagic = "VINF-TXN";
constexpr std::string_view kParamsMagic = "VINF-PPS";
constexpr std::uint32_t kParamsVersion = 1;

void write_arch(ByteWriter& w, const Architecture& a) {
    w.u32(static_cast<std::uint32_t>(a.num_layers()));
    for (auto d : a.widths) w.u64(d);
    for (auto act : a.activations) w.u8(static_cast<std::uint8_t>(act));
    w.u8(static_cast<std::uint8_t>(a.out_fn));
    w.u8(a.has_bias ? 1 : 0);
}

void write_commitment(ByteWriter& w, const vc::Commitment& c) {
    w.raw(c.root);
    w.u64(c.length);
}

vc::Commitment read_commitment(ByteReader& r) {
    vc::Commitment c;
    auto b = r.raw(32, "commitment root");
    std::memcpy(c.root.data(), b.data(), 32);
    c.length = r.u64();
    return c;
}

void write_floats(ByteWriter& w, std::span<const float> v) {
    w.u64(v.size());
    w.f32s(v);
}

std::vector<float> read_floats(ByteReader& r) {
    std::uint64_t n = r.u64();
    if (n > r.remaining() / 4) r.fail("float vector length exceeds input");
    return r.f32s(n);
}

bool values_match(float claimed, float expect, double tol) {
    if (tol == 0.0) return claimed == expect;
    return std::isfinite(claimed) && std::abs(static_cast<double>(claimed) - static_cast<double>(expect)) <= tol;
}

VerifyResult reject(Reason r, std::string detail) {
    VerifyResult v;
    v.accept = false;
    v.reason = r;
    v.detail = std::move(detail);
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

void PublicParams::validate() const {
    arch.validate();
    if (num_paths == 0) throw Error("num_paths must be at least 1");
    if (!(tol >= 0.0) || !std::isfinite(tol)) throw Error("tol must be a finite non-negative number");
    if (vc.max_len == 0) throw Error("max_len must be positive");
    if (arch.trace_size() > vc.max_len) throw Error("trace does not fit max_len");
}

PublicParams gen_params(std::uint32_t security_bits, const Architecture& arch, const ProtocolConfig& config) {
    PublicParams pp;
    pp.vc.max_len = config.max_len;
    pp.arch = arch;
    pp.num_paths = config.num_paths;
    pp.tol = config.tol;
    pp.cover_outputs = config.cover_outputs;
    pp.security_bits = security_bits;
    pp.validate();
    return pp;
}

Bytes encode_params(const PublicParams& pp) {
    ByteWriter w;
    w.raw(kParamsMagic);
    w.u32(kParamsVersion);
    w.u32(pp.security_bits);
    w.u64(pp.vc.max_len);
    w.u64(pp.num_paths);
    w.u64(std::bit_cast<std::uint64_t>(pp.tol));
    w.u8(pp.cover_outputs ? 1 : 0);
    write_arch(w, pp.arch);
    return std::move(w).bytes();
}

Digest params_hash(const PublicParams& pp) { return sha256(encode_params(pp)); }

std::string params_to_json(const PublicParams& pp) {
    nlohmann::json j;
    j["version"] = kParamsVersion;
    j["security_bits"] = pp.security_bits;
    j["max_len"] = pp.vc.max_len;
    j["num_paths"] = pp.num_paths;
    j["tol"] = pp.tol;
    j["cover_outputs"] = pp.cover_outputs;
    nlohmann::json a;
    a["layer_widths"] = pp.arch.widths;
    auto acts = nlohmann::json::array();
    for (auto x : pp.arch.activations) acts.push_back(std::string(to_string(x)));
    a["activation"] = acts;
    a["out_fn"] = std::string(to_string(pp.arch.out_fn));
    a["has_bias"] = pp.arch.has_bias;
    j["architecture"] = a;
    return j.dump(2) + "\n";
}

PublicParams params_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("params JSON: ") + e.what(), e.byte);
    }
    try {
        if (j.at("version").get<std::uint32_t>() != kParamsVersion) throw ParseError("unsupported params version", 0);
        PublicParams pp;
        pp.security_bits = j.at("security_bits").get<std::uint32_t>();
        pp.vc.max_len = j.at("max_len").get<std::uint64_t>();
        pp.num_paths = j.at("num_paths").get<std::size_t>();
        pp.tol = j.at("tol").get<double>();
        pp.cover_outputs = j.at("cover_outputs").get<bool>();
        const auto& a = j.at("architecture");
        pp.arch.widths = a.at("layer_widths").get<std::vector<std::size_t>>();
        for (const auto& x : a.at("activation")) pp.arch.activations.push_back(parse_activation(x.get<std::string>()));
        pp.arch.out_fn = parse_out_fn(a.at("out_fn").get<std::string>());
        pp.arch.has_bias = a.at("has_bias").get<bool>();
        pp.validate();
        return pp;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("params JSON schema: ") + e.what(), 0);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(std::string("params JSON schema: ") + e.what(), 0);
    }
}

// ---------------------------------------------------------------------------
// Prover

ProverState::ProverState(const PublicParams& pp, std::shared_ptr<const Model> model, std::vector<float> qry)
    : pp_(pp), model_(std::move(model)), qry_(std::move(qry)) {
    pp_.validate();
    model_->validate();
    if (model_->arch != pp_.arch) throw ShapeError("model architecture differs from the public parameters");
    trace_ = eval_trace(*model_, qry_);
    model_leaves_ = vc::model_leaves(*model_);
    model_tree_ = vc::MerkleTree::build(pp_.vc, model_leaves_);
    commit();
}

void ProverState::commit() {
    const auto* base = reinterpret_cast<const std::uint8_t*>(trace_.values.data());
    trace_tree_ = vc::MerkleTree::build(pp_.vc, trace_.values.size(),
                                        [base](std::size_t i) { return ByteSpan(base + 4 * i, 4); });
}

void ProverState::replace_trace(Trace t) {
    t.check_shape(pp_.arch);
    trace_ = std::move(t);
    commit();
}

Proof1 make_proof1(const ProverState& state) {
    Proof1 p;
    p.claimed_output = apply_out_fn(state.params().arch.out_fn, state.trace().layer(state.params().arch.num_layers()));
    p.trace_commitment = state.trace_tree().commitment();
    return p;
}

std::pair<Proof1, ProverState> prove1(const PublicParams& pp, std::shared_ptr<const Model> model,
                                      std::span<const float> qry) {
    if (qry.size() != pp.arch.input_width()) throw ShapeError("query length does not match the input layer");
    ProverState state(pp, std::move(model), std::vector<float>(qry.begin(), qry.end()));
    Proof1 p = make_proof1(state);
    return {std::move(p), std::move(state)};
}

std::pair<Proof1, ProverState> prove1(const PublicParams& pp, const Model& model, std::span<const float> qry) {
    return prove1(pp, std::make_shared<const Model>(model), qry);
}

OpeningDemand opening_demand(const PublicParams& pp, const path::Challenge& rho) {
    const Architecture& a = pp.arch;
    OpeningDemand d;
    for (const auto& p : path::derive_paths(a, rho, pp.path_options())) {
        for (std::size_t l = a.num_layers(); l >= 1; --l) {
            std::size_t j = p.at_layer(l);
            d.weights.emplace_back(l, j);
            d.activations.push_back(a.offset(l) + j);
            std::size_t pbase = a.offset(l - 1);
            for (std::size_t i = 0; i < a.widths[l - 1]; ++i) d.activations.push_back(pbase + i);
        }
    }
    std::size_t obase = a.offset(a.num_layers());
    for (std::size_t i = 0; i < a.output_width(); ++i) d.activations.push_back(obase + i);
    std::sort(d.weights.begin(), d.weights.end());
    d.weights.erase(std::unique(d.weights.begin(), d.weights.end()), d.weights.end());
    std::sort(d.activations.begin(), d.activations.end());
    d.activations.erase(std::unique(d.activations.begin(), d.activations.end()), d.activations.end());
    return d;
}

Proof2 prove2(const ProverState& state, const path::Challenge& rho) {
    const PublicParams& pp = state.params();
    OpeningDemand d = opening_demand(pp, rho);
    Proof2 out;
    out.weights.reserve(d.weights.size());
    for (auto [l, j] : d.weights) {
        std::size_t idx = pp.arch.weight_row_index(l, j);
        auto row = vc::encode_floats(state.model().fan_in_row(l, j));
        out.weights.push_back({l, j, state.model_tree().open(idx, row)});
    }
    const auto* base = reinterpret_cast<const std::uint8_t*>(state.trace().values.data());
    out.activations.reserve(d.activations.size());
    for (std::size_t pos : d.activations) out.activations.push_back(state.trace_tree().open(pos, ByteSpan(base + 4 * pos, 4)));
    return out;
}

// ---------------------------------------------------------------------------
// Verifier

namespace {

class OpenedModel final : public path::ModelOracle {
public:
    std::map<std::pair<std::size_t, std::size_t>, std::vector<float>> rows;

    std::optional<std::vector<float>> fan_in(std::size_t layer, std::size_t node) const override {
        auto it = rows.find({layer, node});
        if (it == rows.end()) return std::nullopt;
        return it->second;
    }
};

class OpenedTrace final : public path::TraceOracle {
public:
    std::unordered_map<std::size_t, float> values;

    std::optional<float> activation(std::size_t flat) const override {
        auto it = values.find(flat);
        if (it == values.end()) return std::nullopt;
        return it->second;
    }
};

}  // namespace

std::string_view to_string(Reason r) {
    switch (r) {
        case Reason::Ok: return "ok";
        case Reason::BadOpening: return "bad-opening";
        case Reason::PathInconsistent: return "path-inconsistent";
        case Reason::OutputMismatch: return "output-mismatch";
        case Reason::InputMismatch: return "input-mismatch";
        case Reason::MissingOpening: return "missing-opening";
        case Reason::ParamsMismatch: return "params-mismatch";
        case Reason::Malformed: return "malformed";
    }
    return "?";
}

VerifyResult verify(const PublicParams& pp, const vc::Commitment& cm_model, std::span<const float> qry,
                    std::span<const float> y, const Proof1& proof1, const path::Challenge& rho, const Proof2& proof2) {
    const Architecture& a = pp.arch;
    if (qry.size() != a.input_width()) return reject(Reason::Malformed, "query length does not match the input layer");
    if (y.size() != a.output_width() || proof1.claimed_output.size() != a.output_width())
        return reject(Reason::Malformed, "claimed output has the wrong length");
    if (cm_model.length != a.weight_rows()) return reject(Reason::Malformed, "model commitment length mismatch");
    if (proof1.trace_commitment.length != a.trace_size()) return reject(Reason::Malformed, "trace commitment length mismatch");

    // (1) every opening must verify before any opened value is used.
    OpenedModel model;
    for (const auto& w : proof2.weights) {
        if (w.layer == 0 || w.layer > a.num_layers() || w.node >= a.widths[w.layer])
            return reject(Reason::BadOpening, "weight opening for a node outside the architecture");
        std::size_t idx = a.weight_row_index(w.layer, w.node);
        if (w.proof.value.size() != 4 * a.fan_in(w.layer) ||
            !vc::verify_opening(pp.vc, cm_model, idx, w.proof.value, w.proof))
            return reject(Reason::BadOpening, "weight opening for layer " + std::to_string(w.layer) + " node " +
                                                  std::to_string(w.node) + " does not verify");
        model.rows[{w.layer, w.node}] = vc::decode_floats(w.proof.value);
    }
    OpenedTrace trace;
    for (const auto& o : proof2.activations) {
        if (o.value.size() != 4 || !vc::verify_opening(pp.vc, proof1.trace_commitment, o.index, o.value, o))
            return reject(Reason::BadOpening, "activation opening " + std::to_string(o.index) + " does not verify");
        float v;
        std::memcpy(&v, o.value.data(), 4);
        trace.values[o.index] = v;
    }

    // (2) path test over opened values, (4) input anchoring.
    auto report = path::rand_path_test(a, model, trace, qry, rho, pp.path_options(), pp.tol);
    if (!report.accept) {
        Reason r = report.failure == path::Failure::MissingValue ? Reason::MissingOpening
                   : report.failure == path::Failure::InputAnchor ? Reason::InputMismatch
                                                                   : Reason::PathInconsistent;
        auto v = reject(r, report.reason);
        v.report = std::move(report);
        return v;
    }

    // (3) y against the opened output layer.
    std::vector<float> last(a.output_width());
    const std::size_t obase = a.offset(a.num_layers());
    for (std::size_t i = 0; i < last.size(); ++i) {
        auto v = trace.activation(obase + i);
        if (!v) return reject(Reason::MissingOpening, "output node " + std::to_string(i) + " not opened");
        last[i] = *v;
    }
    auto expect = apply_out_fn(a.out_fn, last);
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!values_match(y[i], expect[i], pp.tol) || !values_match(proof1.claimed_output[i], expect[i], pp.tol) ||
            y[i] != proof1.claimed_output[i])
            return reject(Reason::OutputMismatch, "claimed output " + std::to_string(i) + " inconsistent with the trace");
    }

    VerifyResult ok;
    ok.accept = true;
    ok.report = std::move(report);
    return ok;
}

// ---------------------------------------------------------------------------
// Transcript

Bytes serialize_proof2(const Proof2& p) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(p.weights.size()));
    for (const auto& wo : p.weights) {
        w.u32(static_cast<std::uint32_t>(wo.layer));
        w.u64(wo.node);
        vc::write_opening(w, wo.proof);
    }
    w.u32(static_cast<std::uint32_t>(p.activations.size()));
    for (const auto& o : p.activations) vc::write_opening(w, o);
    return std::move(w).bytes();
}

namespace {
Proof2 read_proof2(ByteReader& r) {
    Proof2 p;
    std::uint32_t nw = r.u32();
    for (std::uint32_t i = 0; i < nw; ++i) {
        WeightOpening wo;
        wo.layer = r.u32();
        wo.node = r.u64();
        wo.proof = vc::read_opening(r);
        p.weights.push_back(std::move(wo));
    }
    std::uint32_t na = r.u32();
    for (std::uint32_t i = 0; i < na; ++i) p.activations.push_back(vc::read_opening(r));
    return p;
}
}  // namespace

Proof2 deserialize_proof2(ByteSpan data) {
    ByteReader r(data);
    auto p = read_proof2(r);
    r.expect_done("proof2");
    return p;
}

Bytes serialize_transcript(const Transcript& t) {
    ByteWriter w;
    w.raw(kTranscriptMagic);
    w.section(t.pp_hash);
    {
        ByteWriter s;
        write_commitment(s, t.cm_model);
        w.section(s.bytes());
    }
    {
        ByteWriter s;
        write_floats(s, t.qry);
        w.section(s.bytes());
    }
    {
        ByteWriter s;
        write_floats(s, t.proof1.claimed_output);
        write_commitment(s, t.proof1.trace_commitment);
        w.section(s.bytes());
    }
    if (t.rho)
        w.section(t.rho->rho);
    else
        w.section({});
    if (t.proof2)
        w.section(serialize_proof2(*t.proof2));
    else
        w.section({});
    return std::move(w).bytes();
}

Transcript deserialize_transcript(ByteSpan data) {
    ByteReader r(data);
    r.expect_magic(kTranscriptMagic);
    Transcript t;
    {
        auto s = r.section("pp-hash");
        auto b = s.raw(32, "pp-hash");
        std::memcpy(t.pp_hash.data(), b.data(), 32);
        s.expect_done("pp-hash");
    }
    {
        auto s = r.section("cm_M");
        t.cm_model = read_commitment(s);
        s.expect_done("cm_M");
    }
    {
        auto s = r.section("qry");
        t.qry = read_floats(s);
        s.expect_done("qry");
    }
    {
        auto s = r.section("proof1");
        t.proof1.claimed_output = read_floats(s);
        t.proof1.trace_commitment = read_commitment(s);
        s.expect_done("proof1");
    }
    {
        auto s = r.section("rho");
        if (!s.done()) {
            auto b = s.raw(32, "rho");
            path::Challenge c;
            std::memcpy(c.rho.data(), b.data(), 32);
            t.rho = c;
            s.expect_done("rho");
        }
    }
    {
        auto s = r.section("proof2");
        if (!s.done()) {
            t.proof2 = read_proof2(s);
            s.expect_done("proof2");
        }
    }
    r.expect_done("transcript");
    return t;
}

VerifyResult replay(const PublicParams& pp, const Transcript& t) {
    if (t.pp_hash != params_hash(pp)) return reject(Reason::ParamsMismatch, "transcript was produced under other parameters");
    if (!t.rho || !t.proof2) return reject(Reason::Malformed, "transcript is incomplete");
    return verify(pp, t.cm_model, t.qry, t.proof1.claimed_output, t.proof1, *t.rho, *t.proof2);
}

Transcript run_honest(const PublicParams& pp, const Model& model, std::span<const float> qry,
                      const path::Challenge& rho) {
    auto [p1, state] = prove1(pp, model, qry);
    Transcript t;
    t.pp_hash = params_hash(pp);
    t.cm_model = state.model_tree().commitment();
    t.qry.assign(qry.begin(), qry.end());
    t.proof1 = std::move(p1);
    t.rho = rho;
    t.proof2 = prove2(state, rho);
    return t;
}

}  // namespace vinf::proto
