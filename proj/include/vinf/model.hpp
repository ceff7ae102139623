#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vinf/bytes.hpp"

namespace vinf {

enum class Activation : std::uint8_t { ReLU = 0, Sigmoid = 1, Identity = 2 };
enum class OutFn : std::uint8_t { Identity = 0, Softmax = 1 };

std::string_view to_string(Activation a);
std::string_view to_string(OutFn f);
Activation parse_activation(std::string_view s);
OutFn parse_out_fn(std::string_view s);

double activate(Activation a, double x);

/// Public wiring of a dense feed-forward network.
///
/// Layer 0 is the query; layer l >= 1 is fully connected to layer l-1.
/// `activations[l - 1]` is applied at layer l. When `has_bias` is set every
/// non-input node also reads a virtual parent with constant activation 1.
struct Architecture {
    std::vector<std::size_t> widths;
    std::vector<Activation> activations;
    OutFn out_fn = OutFn::Identity;
    bool has_bias = true;

    /// Uniform activation on every layer.
    static Architecture dense(std::vector<std::size_t> widths, Activation act,
                              OutFn out_fn = OutFn::Identity, bool has_bias = true);
    /// `hidden` on layers 1..L-1, `output` on layer L.
    static Architecture dense(std::vector<std::size_t> widths, Activation hidden,
                              Activation output, OutFn out_fn = OutFn::Identity,
                              bool has_bias = true);

    std::size_t num_layers() const noexcept { return widths.empty() ? 0 : widths.size() - 1; }
    std::size_t width(std::size_t layer) const { return widths.at(layer); }
    std::size_t input_width() const { return widths.at(0); }
    std::size_t output_width() const { return widths.back(); }
    Activation activation(std::size_t layer) const { return activations.at(layer - 1); }

    /// Fan-in row length of a node in `layer` (parents plus bias slot).
    std::size_t fan_in(std::size_t layer) const { return widths.at(layer - 1) + (has_bias ? 1 : 0); }

    /// Index of the first node of `layer` in the flat trace.
    std::size_t offset(std::size_t layer) const;
    std::size_t trace_size() const;
    /// Number of non-input nodes (= number of committed fan-in rows).
    std::size_t weight_rows() const;
    /// Position of (layer, node) among the fan-in rows, layer-major.
    std::size_t weight_row_index(std::size_t layer, std::size_t node) const;

    /// (layer, index within layer) of a flat trace position.
    std::pair<std::size_t, std::size_t> locate(std::size_t flat) const;

    /// Throws ShapeError when any invariant is violated.
    void validate() const;

    bool operator==(const Architecture&) const = default;
};

/// Weights of layer l stored as a (d_{l-1} x d_l) row-major matrix plus
/// an optional bias row of length d_l.
struct DenseLayer {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> weights;
    std::vector<float> bias;

    float w(std::size_t parent, std::size_t node) const { return weights[parent * cols + node]; }
    float& w(std::size_t parent, std::size_t node) { return weights[parent * cols + node]; }

    bool operator==(const DenseLayer&) const = default;
};

struct Model {
    Architecture arch;
    std::vector<DenseLayer> layers;  // layers[l - 1] feeds layer l

    const DenseLayer& layer(std::size_t l) const { return layers.at(l - 1); }
    DenseLayer& layer(std::size_t l) { return layers.at(l - 1); }

    /// Incoming weights of `node` in `layer`, followed by its bias when the
    /// architecture has one. This is the unit committed and opened per node.
    std::vector<float> fan_in_row(std::size_t layer, std::size_t node) const;

    void validate() const;

    bool operator==(const Model&) const = default;
};

/// Flat activation vector for one inference, input layer included.
struct Trace {
    std::vector<float> values;
    std::vector<std::size_t> offsets;  // start of each layer, then values.size()

    /// Number of stored layers, input layer included (L + 1 for L weight layers).
    std::size_t layer_count() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
    std::span<const float> layer(std::size_t l) const;
    std::span<float> layer(std::size_t l);

    /// Throws ShapeError unless shaped exactly for `arch`.
    void check_shape(const Architecture& arch) const;
    void validate() const;

    bool operator==(const Trace&) const = default;
};

/// Empty trace shaped for `arch`, all zeros.
Trace make_trace(const Architecture& arch);

/// phi(sum_i w_i * a_i + b) with sequential double accumulation in parent
/// order, rounded to float. Every producer and checker of activations goes
/// through this function, so equal inputs give bit-identical outputs.
/// `fan_in` has either parents.size() entries or one more (the bias).
float neuron_output(Activation act, std::span<const float> fan_in, std::span<const float> parents);

Trace eval_trace(const Model& model, std::span<const float> query);

/// Last layer passed through the architecture's output function.
std::vector<float> out_of(const Trace& trace, const Architecture& arch);
/// Output function applied to raw last-layer values.
std::vector<float> apply_out_fn(OutFn fn, std::span<const float> last_layer);

struct LocalCheck {
    bool pass = false;
    double residual = 0.0;
};

/// Compares a claimed activation against its recomputation from the
/// claimed parent activations. tol == 0 demands bit equality.
LocalCheck local_check(Activation act, std::span<const float> fan_in, std::span<const float> parents,
                       float claimed, double tol);

/// Local check of flat trace position `node` against the model's weights.
/// Throws IndexError for input-layer nodes.
LocalCheck local_check(const Model& model, std::span<const float> parents, float claimed,
                       std::size_t node, double tol);

/// Entries uniform in [-1, 1] scaled by 1/sqrt(d_{l-1}); bias likewise.
Model gen_random_model(std::uint64_t seed, const Architecture& arch);

// Text (JSON) and binary forms.
std::string serialize_model_text(const Model& model);
Model deserialize_model_text(std::string_view text);
Bytes serialize_model(const Model& model);
Model deserialize_model(ByteSpan data);
Bytes serialize_trace(const Trace& trace);
Trace deserialize_trace(ByteSpan data);

/// Loads either form; the binary form is recognised by its magic.
Model load_model(const std::string& path);
void save_model(const Model& model, const std::string& path);

}  // namespace vinf
