#include "vinf/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

#include "vinf/error.hpp"

namespace vinf {

namespace {

constexpr std::string_view kModelMagic = "VINF-MDL";
constexpr std::string_view kTraceMagic = "VINF-TRC";
constexpr std::uint32_t kModelVersion = 1;

}  // namespace

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::ReLU: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Identity: return "identity";
    }
    return "?";
}

std::string_view to_string(OutFn f) { return f == OutFn::Softmax ? "softmax" : "identity"; }

Activation parse_activation(std::string_view s) {
    if (s == "relu") return Activation::ReLU;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "identity") return Activation::Identity;
    throw Error("unknown activation '" + std::string(s) + "'");
}

OutFn parse_out_fn(std::string_view s) {
    if (s == "identity") return OutFn::Identity;
    if (s == "softmax") return OutFn::Softmax;
    throw Error("unknown output function '" + std::string(s) + "'");
}

double activate(Activation a, double x) {
    switch (a) {
        case Activation::ReLU: return x > 0.0 ? x : 0.0;
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::Identity: return x;
    }
    return x;
}

// ---------------------------------------------------------------------------
// Architecture

Architecture Architecture::dense(std::vector<std::size_t> widths, Activation act, OutFn out_fn,
                                 bool has_bias) {
    return dense(std::move(widths), act, act, out_fn, has_bias);
}

Architecture Architecture::dense(std::vector<std::size_t> widths, Activation hidden, Activation output,
                                 OutFn out_fn, bool has_bias) {
    Architecture a;
    a.widths = std::move(widths);
    std::size_t L = a.widths.empty() ? 0 : a.widths.size() - 1;
    a.activations.assign(L, hidden);
    if (L > 0) a.activations.back() = output;
    a.out_fn = out_fn;
    a.has_bias = has_bias;
    a.validate();
    return a;
}

std::size_t Architecture::offset(std::size_t layer) const {
    if (layer > num_layers()) throw IndexError("layer " + std::to_string(layer) + " out of range");
    return std::accumulate(widths.begin(), widths.begin() + static_cast<std::ptrdiff_t>(layer), std::size_t{0});
}

std::size_t Architecture::trace_size() const {
    return std::accumulate(widths.begin(), widths.end(), std::size_t{0});
}

std::size_t Architecture::weight_rows() const { return trace_size() - input_width(); }

std::size_t Architecture::weight_row_index(std::size_t layer, std::size_t node) const {
    if (layer == 0 || layer > num_layers() || node >= widths[layer])
        throw IndexError("no weight row for layer " + std::to_string(layer) + " node " + std::to_string(node));
    return offset(layer) - input_width() + node;
}

std::pair<std::size_t, std::size_t> Architecture::locate(std::size_t flat) const {
    std::size_t start = 0;
    for (std::size_t l = 0; l < widths.size(); ++l) {
        if (flat < start + widths[l]) return {l, flat - start};
        start += widths[l];
    }
    throw IndexError("trace position " + std::to_string(flat) + " out of range");
}

void Architecture::validate() const {
    if (widths.size() < 2) throw ShapeError("architecture needs at least one non-input layer");
    for (std::size_t l = 0; l < widths.size(); ++l)
        if (widths[l] == 0) throw ShapeError("layer " + std::to_string(l) + " has zero width");
    if (activations.size() != num_layers())
        throw ShapeError("expected " + std::to_string(num_layers()) + " activations, got " +
                         std::to_string(activations.size()));
}

// ---------------------------------------------------------------------------
// Model / Trace

std::vector<float> Model::fan_in_row(std::size_t l, std::size_t node) const {
    const DenseLayer& dl = layer(l);
    if (node >= dl.cols) throw IndexError("node " + std::to_string(node) + " out of range in layer " + std::to_string(l));
    std::vector<float> row;
    row.reserve(arch.fan_in(l));
    for (std::size_t i = 0; i < dl.rows; ++i) row.push_back(dl.w(i, node));
    if (arch.has_bias) row.push_back(dl.bias[node]);
    return row;
}

void Model::validate() const {
    arch.validate();
    if (layers.size() != arch.num_layers())
        throw ShapeError("model has " + std::to_string(layers.size()) + " weight layers, architecture expects " +
                         std::to_string(arch.num_layers()));
    for (std::size_t l = 1; l <= arch.num_layers(); ++l) {
        const DenseLayer& dl = layer(l);
        const std::string name = "layer " + std::to_string(l);
        if (dl.rows != arch.widths[l - 1] || dl.cols != arch.widths[l] || dl.weights.size() != dl.rows * dl.cols)
            throw ShapeError(name + ": weight matrix shape mismatch");
        if (dl.bias.size() != (arch.has_bias ? dl.cols : 0)) throw ShapeError(name + ": bias length mismatch");
        auto finite = [](float v) { return std::isfinite(v); };
        if (!std::all_of(dl.weights.begin(), dl.weights.end(), finite) ||
            !std::all_of(dl.bias.begin(), dl.bias.end(), finite))
            throw NumericError(name + ": non-finite weight");
    }
}

std::span<const float> Trace::layer(std::size_t l) const {
    if (l >= layer_count()) throw IndexError("trace layer " + std::to_string(l) + " out of range");
    return std::span<const float>(values).subspan(offsets[l], offsets[l + 1] - offsets[l]);
}

std::span<float> Trace::layer(std::size_t l) {
    if (l >= layer_count()) throw IndexError("trace layer " + std::to_string(l) + " out of range");
    return std::span<float>(values).subspan(offsets[l], offsets[l + 1] - offsets[l]);
}

void Trace::validate() const {
    if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != values.size())
        throw ShapeError("trace offsets do not cover the value vector");
    for (std::size_t i = 1; i < offsets.size(); ++i)
        if (offsets[i] <= offsets[i - 1]) throw ShapeError("trace offsets not strictly increasing");
    if (!std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); }))
        throw NumericError("trace contains non-finite values");
}

void Trace::check_shape(const Architecture& arch) const {
    if (offsets.size() != arch.widths.size() + 1 || values.size() != arch.trace_size())
        throw ShapeError("trace is not shaped for this architecture");
    for (std::size_t l = 0; l < arch.widths.size(); ++l)
        if (offsets[l] != arch.offset(l)) throw ShapeError("trace layer " + std::to_string(l) + " misaligned");
}

Trace make_trace(const Architecture& arch) {
    Trace t;
    t.values.assign(arch.trace_size(), 0.0f);
    for (std::size_t l = 0; l <= arch.num_layers(); ++l) t.offsets.push_back(arch.offset(l));
    t.offsets.push_back(arch.trace_size());
    return t;
}

// ---------------------------------------------------------------------------
// Evaluation

float neuron_output(Activation act, std::span<const float> fan_in, std::span<const float> parents) {
    double acc = 0.0;
    for (std::size_t i = 0; i < parents.size(); ++i)
        acc += static_cast<double>(fan_in[i]) * static_cast<double>(parents[i]);
    if (fan_in.size() > parents.size()) acc += static_cast<double>(fan_in[parents.size()]);
    return static_cast<float>(activate(act, acc));
}

Trace eval_trace(const Model& model, std::span<const float> query) {
    const Architecture& arch = model.arch;
    if (model.layers.size() != arch.num_layers()) throw ShapeError("model/architecture layer count mismatch");
    if (query.size() != arch.input_width())
        throw ShapeError("query has length " + std::to_string(query.size()) + ", layer 0 expects " +
                         std::to_string(arch.input_width()));
    Trace t = make_trace(arch);
    std::copy(query.begin(), query.end(), t.values.begin());

    std::vector<float> fan_in;
    for (std::size_t l = 1; l <= arch.num_layers(); ++l) {
        const DenseLayer& dl = model.layer(l);
        if (dl.rows != arch.widths[l - 1] || dl.cols != arch.widths[l])
            throw ShapeError("layer " + std::to_string(l) + ": weight matrix shape mismatch");
        auto parents = t.layer(l - 1);
        auto out = t.layer(l);
        fan_in.resize(arch.fan_in(l));
        for (std::size_t j = 0; j < dl.cols; ++j) {
            for (std::size_t i = 0; i < dl.rows; ++i) fan_in[i] = dl.w(i, j);
            if (arch.has_bias) fan_in[dl.rows] = dl.bias[j];
            out[j] = neuron_output(arch.activation(l), fan_in, parents);
        }
    }
    return t;
}

std::vector<float> apply_out_fn(OutFn fn, std::span<const float> last) {
    if (fn == OutFn::Identity) return {last.begin(), last.end()};
    double mx = *std::max_element(last.begin(), last.end());
    std::vector<double> e(last.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < last.size(); ++i) {
        e[i] = std::exp(static_cast<double>(last[i]) - mx);
        sum += e[i];
    }
    std::vector<float> out(last.size());
    for (std::size_t i = 0; i < last.size(); ++i) out[i] = static_cast<float>(e[i] / sum);
    return out;
}

std::vector<float> out_of(const Trace& trace, const Architecture& arch) {
    trace.check_shape(arch);
    return apply_out_fn(arch.out_fn, trace.layer(arch.num_layers()));
}

LocalCheck local_check(Activation act, std::span<const float> fan_in, std::span<const float> parents, float claimed,
                       double tol) {
    if (fan_in.size() != parents.size() && fan_in.size() != parents.size() + 1)
        throw ShapeError("fan-in row does not match parent count");
    float expect = neuron_output(act, fan_in, parents);
    LocalCheck r;
    if (!std::isfinite(claimed) || !std::isfinite(expect)) {
        r.residual = std::numeric_limits<double>::infinity();
        r.pass = false;
        return r;
    }
    r.residual = std::abs(static_cast<double>(claimed) - static_cast<double>(expect));
    r.pass = tol == 0.0 ? claimed == expect : r.residual <= tol;
    return r;
}

LocalCheck local_check(const Model& model, std::span<const float> parents, float claimed, std::size_t node,
                       double tol) {
    auto [layer, idx] = model.arch.locate(node);
    if (layer == 0) throw IndexError("input-layer node " + std::to_string(node) + " is anchored to the query");
    if (parents.size() != model.arch.widths[layer - 1]) throw ShapeError("parent count mismatch");
    auto row = model.fan_in_row(layer, idx);
    return local_check(model.arch.activation(layer), row, parents, claimed, tol);
}

// ---------------------------------------------------------------------------
// Random models

Model gen_random_model(std::uint64_t seed, const Architecture& arch) {
    arch.validate();
    std::mt19937_64 rng(seed);
    // Built from raw engine output so results do not depend on the
    // standard library's distribution implementations.
    auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    Model m;
    m.arch = arch;
    for (std::size_t l = 1; l <= arch.num_layers(); ++l) {
        DenseLayer dl;
        dl.rows = arch.widths[l - 1];
        dl.cols = arch.widths[l];
        double scale = 1.0 / std::sqrt(static_cast<double>(dl.rows));
        dl.weights.resize(dl.rows * dl.cols);
        for (auto& w : dl.weights) w = static_cast<float>((2.0 * uniform() - 1.0) * scale);
        if (arch.has_bias) {
            dl.bias.resize(dl.cols);
            for (auto& b : dl.bias) b = static_cast<float>((2.0 * uniform() - 1.0) * scale);
        }
        m.layers.push_back(std::move(dl));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Serialization

std::string serialize_model_text(const Model& model) {
    model.validate();
    using nlohmann::json;
    json j;
    j["version"] = kModelVersion;
    j["layer_widths"] = model.arch.widths;
    json acts = json::array();
    for (auto a : model.arch.activations) acts.push_back(std::string(to_string(a)));
    j["activation"] = acts;
    j["out_fn"] = std::string(to_string(model.arch.out_fn));
    j["has_bias"] = model.arch.has_bias;
    json layers = json::array();
    for (const auto& dl : model.layers) {
        json rows = json::array();
        for (std::size_t i = 0; i < dl.rows; ++i) {
            json row = json::array();
            for (std::size_t c = 0; c < dl.cols; ++c) row.push_back(static_cast<double>(dl.w(i, c)));
            rows.push_back(std::move(row));
        }
        json lj;
        lj["weights"] = std::move(rows);
        if (model.arch.has_bias) {
            json b = json::array();
            for (float v : dl.bias) b.push_back(static_cast<double>(v));
            lj["bias"] = std::move(b);
        }
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    return j.dump(1) + "\n";
}

Model deserialize_model_text(std::string_view text) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model JSON: ") + e.what(), e.byte);
    }
    try {
        if (j.at("version").get<std::uint32_t>() != kModelVersion) throw ParseError("unsupported model version", 0);
        Model m;
        m.arch.widths = j.at("layer_widths").get<std::vector<std::size_t>>();
        for (const auto& a : j.at("activation")) m.arch.activations.push_back(parse_activation(a.get<std::string>()));
        m.arch.out_fn = parse_out_fn(j.at("out_fn").get<std::string>());
        m.arch.has_bias = j.at("has_bias").get<bool>();
        m.arch.validate();
        const auto& layers = j.at("layers");
        if (layers.size() != m.arch.num_layers()) throw ShapeError("layer count does not match layer_widths");
        for (std::size_t l = 1; l <= m.arch.num_layers(); ++l) {
            const auto& lj = layers[l - 1];
            DenseLayer dl;
            dl.rows = m.arch.widths[l - 1];
            dl.cols = m.arch.widths[l];
            const auto& rows = lj.at("weights");
            if (rows.size() != dl.rows) throw ShapeError("layer " + std::to_string(l) + ": wrong number of weight rows");
            for (const auto& row : rows) {
                if (row.size() != dl.cols) throw ShapeError("layer " + std::to_string(l) + ": wrong weight row length");
                for (const auto& v : row) dl.weights.push_back(static_cast<float>(v.get<double>()));
            }
            if (m.arch.has_bias) {
                for (const auto& v : lj.at("bias")) dl.bias.push_back(static_cast<float>(v.get<double>()));
            }
            m.layers.push_back(std::move(dl));
        }
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("model JSON schema: ") + e.what(), 0);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(std::string("model JSON schema: ") + e.what(), 0);
    }
}

Bytes serialize_model(const Model& model) {
    model.validate();
    ByteWriter w;
    w.raw(kModelMagic);
    w.u32(kModelVersion);
    w.u32(static_cast<std::uint32_t>(model.arch.num_layers()));
    for (auto d : model.arch.widths) w.u64(d);
    for (auto a : model.arch.activations) w.u8(static_cast<std::uint8_t>(a));
    w.u8(static_cast<std::uint8_t>(model.arch.out_fn));
    w.u8(model.arch.has_bias ? 1 : 0);
    for (const auto& dl : model.layers) {
        w.f32s(dl.weights);
        w.f32s(dl.bias);
    }
    return std::move(w).bytes();
}

Model deserialize_model(ByteSpan data) {
    ByteReader r(data);
    r.expect_magic(kModelMagic);
    if (r.u32() != kModelVersion) r.fail("unsupported model version");
    std::uint32_t L = r.u32();
    if (L == 0 || L > (1u << 16)) r.fail("implausible layer count");
    Model m;
    for (std::uint32_t i = 0; i <= L; ++i) {
        std::uint64_t d = r.u64();
        if (d == 0 || d > (1ull << 32)) r.fail("implausible layer width");
        m.arch.widths.push_back(d);
    }
    for (std::uint32_t i = 0; i < L; ++i) {
        std::uint8_t a = r.u8();
        if (a > 2) r.fail("unknown activation code");
        m.arch.activations.push_back(static_cast<Activation>(a));
    }
    std::uint8_t f = r.u8();
    if (f > 1) r.fail("unknown output function code");
    m.arch.out_fn = static_cast<OutFn>(f);
    std::uint8_t b = r.u8();
    if (b > 1) r.fail("bad has_bias flag");
    m.arch.has_bias = b == 1;
    for (std::size_t l = 1; l <= L; ++l) {
        DenseLayer dl;
        dl.rows = m.arch.widths[l - 1];
        dl.cols = m.arch.widths[l];
        dl.weights = r.f32s(dl.rows * dl.cols);
        if (m.arch.has_bias) dl.bias = r.f32s(dl.cols);
        m.layers.push_back(std::move(dl));
    }
    r.expect_done("model");
    try {
        m.validate();
    } catch (const Error& e) {
        throw ParseError(e.what(), r.offset());
    }
    return m;
}

Bytes serialize_trace(const Trace& trace) {
    trace.validate();
    ByteWriter w;
    w.raw(kTraceMagic);
    w.u64(trace.offsets.size());
    for (auto o : trace.offsets) w.u64(o);
    w.u64(trace.values.size());
    w.f32s(trace.values);
    return std::move(w).bytes();
}

Trace deserialize_trace(ByteSpan data) {
    ByteReader r(data);
    r.expect_magic(kTraceMagic);
    std::uint64_t n_off = r.u64();
    if (n_off < 2 || n_off > r.remaining() / 8) r.fail("implausible offset count");
    Trace t;
    for (std::uint64_t i = 0; i < n_off; ++i) t.offsets.push_back(r.u64());
    std::uint64_t n = r.u64();
    t.values = r.f32s(n);
    r.expect_done("trace");
    try {
        t.validate();
    } catch (const Error& e) {
        throw ParseError(e.what(), r.offset());
    }
    return t;
}

Model load_model(const std::string& path) {
    Bytes data = read_file(path);
    if (data.size() >= kModelMagic.size() &&
        std::equal(kModelMagic.begin(), kModelMagic.end(), data.begin()))
        return deserialize_model(data);
    return deserialize_model_text(std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
}

void save_model(const Model& model, const std::string& path) {
    bool binary = path.size() >= 5 && path.ends_with(".vmdl");
    if (binary) {
        write_file(path, serialize_model(model));
    } else {
        auto text = serialize_model_text(model);
        write_file(path, ByteSpan(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    }
}

}  // namespace vinf
