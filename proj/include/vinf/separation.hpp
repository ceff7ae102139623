#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vinf/model.hpp"
#include "vinf/path_test.hpp"

namespace vinf::sep {

struct Summary {
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
};
Summary summarize(std::span<const double> v);

/// |phi(a_M^{i-1} W_M^i + b) - phi(a~^{i-1} W_M^i + b)| for every node of
/// layer i (1-based). Only M's weights are used.
std::vector<double> separation_value(const Model& m, const Trace& trace_m, const Trace& trace_other, std::size_t layer);
/// Layers 1..L; entry l-1 holds layer l.
std::vector<std::vector<double>> separation_all(const Model& m, const Trace& trace_m, const Trace& trace_other);

/// Euclidean distance between output vectors.
double d_out(std::span<const float> y1, std::span<const float> y2);
/// Mean over `valid_layers` of the per-node mean absolute difference.
double d_trc(const Trace& t1, const Trace& t2, std::span<const std::size_t> valid_layers);

/// Jensen-Shannon divergence (base 2) of two samples, histogrammed over
/// their joint range in `bins` equal-width bins with additive smoothing.
double js_divergence(std::span<const double> p, std::span<const double> q, std::size_t bins = 50, double eps = 1e-12);

struct LayerFilter {
    std::vector<double> js;                 // one per trace layer, input included
    std::vector<std::size_t> valid;         // layers with js > threshold
};
LayerFilter js_per_layer(std::span<const Trace> traces_m, std::span<const Trace> traces_other, std::size_t bins = 50,
                         double threshold = 0.05);

struct SeparationRecord {
    std::size_t query_id = 0;
    double d_out = 0.0;
    double d_trc = 0.0;
    std::vector<double> layer_sep;  // mean separation value per layer 1..L
    std::vector<float> qry;
    std::optional<Trace> trace;     // the other model's trace, for the path test
};

/// Evaluates both models on every query and builds one record per query.
/// The layer filter is computed from the same traces.
struct Dataset {
    std::vector<SeparationRecord> records;
    LayerFilter filter;
};
Dataset build_dataset(const Model& m, const Model& other, std::span<const std::vector<float>> queries,
                      unsigned threads = 1, std::size_t bins = 50, double js_threshold = 0.05);
/// Same, from already computed other-model traces (planted families).
Dataset build_dataset(const Model& m, std::span<const std::vector<float>> queries, std::span<const Trace> other_traces,
                      std::span<const std::vector<float>> other_outputs, std::size_t bins = 50,
                      double js_threshold = 0.05);

std::string record_to_json(const SeparationRecord& r);
SeparationRecord record_from_json(std::string_view line);
void write_dataset(const std::string& path, std::span<const SeparationRecord> records);
std::vector<SeparationRecord> read_dataset(const std::string& path);

/// Linear-interpolation quantile of an unsorted sample, p in [0, 1].
double quantile(std::vector<double> v, double p);

struct ThresholdCandidate {
    double x = 0.0;  // delta_out
    double q = 0.0;  // delta_trace
    std::size_t support = 0;

    bool operator==(const ThresholdCandidate&) const = default;
};

struct CandidateOptions {
    double eps_sep = 0.01;
    double delta_noise = 1e-4;
    std::size_t min_support = 30;
};
std::vector<ThresholdCandidate> gen_candidates(std::span<const SeparationRecord> records, const CandidateOptions& opts = {});

struct TestOptions {
    std::size_t repetitions = 50;
    path::PathOptions paths;
    double tol = 1e-4;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct EpsEstimate {
    double eps_tst = 0.0;
    std::size_t count_valid = 0;
};
/// Mean false-negative rate of the path test over records with
/// d_trc >= delta. Throws when no record qualifies.
EpsEstimate estimate_eps_tst(const Model& m, std::span<const SeparationRecord> records, double delta,
                             const TestOptions& opts = {});

struct SelectedParams {
    double delta_out = 0.0;
    double delta_trace = 0.0;
    double eps_sep = 0.0;
    double eps_tst = 0.0;
    double soundness() const { return eps_sep + eps_tst; }
};

struct Selection {
    std::optional<SelectedParams> params;  // empty: no candidate qualified
    std::vector<std::pair<ThresholdCandidate, double>> tried;  // candidate, eps_tst
};
Selection select_params(const Model& m, std::span<const ThresholdCandidate> candidates,
                        std::span<const SeparationRecord> records, double eps_target, double eps_sep,
                        const TestOptions& opts = {});

/// Coordinatewise minimum of the selected thresholds and maximum of the
/// test errors; empty when any model has no selection.
std::optional<SelectedParams> combine_selections(std::span<const Selection> per_model);

/// Runs the full estimation against each adversarial model and combines
/// the selections.
struct MultiModelResult {
    std::vector<Selection> per_model;
    std::optional<SelectedParams> combined;
};
MultiModelResult estimate_over_models(const Model& m, std::span<const Model> others,
                                      std::span<const std::vector<float>> queries, const CandidateOptions& copts,
                                      double eps_target, const TestOptions& topts);

/// CDF table of d_out, d_trc and per-layer mean separation at fixed
/// percentiles, as CSV, plus a short text rendering.
std::string percentile_csv(std::span<const SeparationRecord> records);
std::string render_summary(std::span<const SeparationRecord> records, const LayerFilter& filter);

}  // namespace vinf::sep
