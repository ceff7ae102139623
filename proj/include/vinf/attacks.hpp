#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vinf/model.hpp"
#include "vinf/nn.hpp"
#include "vinf/separation.hpp"

namespace vinf::atk {

enum class Method { GradDescent, InversePinv, InverseSvd, InverseRegularized, Swap };
enum class OptimizerKind { PlainGd, Adam };
/// Where gradient descent searches: over the query, or over an activation
/// injected at `inject_layer`.
enum class Space { Input, Activation };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);
std::string_view to_string(OptimizerKind o);
OptimizerKind parse_optimizer(std::string_view s);

struct AttackConfig {
    Method method = Method::GradDescent;
    OptimizerKind optimizer = OptimizerKind::PlainGd;
    Space space = Space::Input;
    double learning_rate = 0.005;
    std::size_t max_iters = 10000;
    /// Stop once the loss is at or below this value; 0 runs all iterations.
    double convergence_loss = 1e-4;
    double l2_lambda = 0.0;
    double reg_lambda = 1e-4;  // regularized inverse
    std::size_t rounds = 1;
    std::size_t inject_layer = 1;
    double init_noise = 0.05;  // swap: stddev of the perturbation of the honest activation
    std::size_t random_paths = 5000;
    std::uint64_t seed = 1;

    void validate() const;
    static AttackConfig table1();  // gradient descent on the query
    static AttackConfig swap();
    static AttackConfig inverse(Method m);
};

AttackConfig config_from_json(std::string_view text, AttackConfig base = {});
std::string config_to_json(const AttackConfig& c);

struct AttackResult {
    std::vector<sep::Summary> layers;          // per layer 1..L
    std::vector<std::vector<double>> separation;  // per layer, per node
    Trace forged;
    bool converged = false;
    bool diverged = false;
    std::size_t iterations = 0;
    double final_loss = 0.0;
    std::optional<double> min_path_separation;
};

/// Gradient-descent reconstruction of an input whose output matches
/// M(qry). Separation per layer follows the substitution metric against
/// the honest trace.
AttackResult grad_reconstruct(const Model& m, std::span<const float> qry, const AttackConfig& cfg, std::uint64_t seed);
/// Same with an explicit target output and starting point (test hooks).
AttackResult grad_reconstruct(const Model& m, std::span<const float> qry, std::span<const float> target,
                              std::span<const float> init, const AttackConfig& cfg);

/// Layer-by-layer back-substitution from the desired output (default:
/// M(qry)) through pseudo-inverted weights.
AttackResult inverse_transform_attack(const Model& m, std::span<const float> qry, Method method,
                                      std::optional<std::vector<float>> desired = std::nullopt,
                                      double reg_lambda = 1e-4);

/// Logits with the largest and smallest entries exchanged.
std::vector<float> swap_extremes(std::span<const float> logits);

/// Optimizes an activation injected at cfg.inject_layer so the network
/// output approaches the swapped logits. Separation is measured directly
/// between forged and honest activations; min_path_separation is the
/// smallest mean-over-path separation among random paths plus the path
/// through each layer's least separated node.
AttackResult swap_attack(const Model& m, std::span<const float> qry, const AttackConfig& cfg, std::uint64_t seed,
                         std::span<const std::uint8_t> mask = {});

struct AttackRecord {
    std::size_t input_id = 0;
    std::size_t round = 0;
    AttackResult result;
};

/// Runs cfg.rounds attempts per query (inverse methods run once) with
/// per-round seeds derived from cfg.seed. Forged traces are dropped.
std::vector<AttackRecord> run_attack(const Model& m, std::span<const std::vector<float>> queries, const AttackConfig& cfg,
                                     unsigned threads = 1);

enum class Metric { Min, Mean, Max };
std::string_view to_string(Metric m);

struct PassRateTable {
    std::vector<double> thresholds;
    std::vector<Metric> metrics;
    std::size_t num_layers = 0;
    std::size_t samples = 0;
    /// pct[metric][layer][threshold]; layer index num_layers is "All Layers".
    std::vector<std::vector<std::vector<double>>> pct;

    double at(Metric m, std::size_t layer, std::size_t threshold) const;
    double all_layers(Metric m, std::size_t threshold) const { return at(m, num_layers + 1, threshold); }
};

/// Percentage of records whose per-layer statistic is <= each threshold.
/// Layers are 1-based in `at`; the all-layers row needs every layer to pass.
PassRateTable pass_rate_table(std::span<const AttackRecord> records, std::span<const double> thresholds,
                              std::span<const Metric> metrics = {});

inline const std::vector<double>& table1_thresholds() {
    static const std::vector<double> t{1e-6, 6.7e-5, 4.6e-3, 0.308};
    return t;
}
inline const std::vector<double>& table2_thresholds() {
    static const std::vector<double> t{1e-4, 1e-3, 1e-2, 0.1};
    return t;
}

std::string attack_csv(std::span<const AttackRecord> records);
std::string render_table(const PassRateTable& t, std::string_view title);
std::string table_csv(const PassRateTable& t);

}  // namespace vinf::atk
