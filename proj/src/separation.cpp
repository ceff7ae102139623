#include "vinf/separation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "vinf/error.hpp"
#include "vinf/parallel.hpp"

namespace vinf::sep {

Summary summarize(std::span<const double> v) {
    if (v.empty()) throw Error("summary of an empty sample");
    Summary s;
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    return s;
}

std::vector<double> separation_value(const Model& m, const Trace& trace_m, const Trace& trace_other, std::size_t layer) {
    trace_m.check_shape(m.arch);
    trace_other.check_shape(m.arch);
    if (layer == 0 || layer > m.arch.num_layers()) throw IndexError("separation layer out of range");
    const DenseLayer& w = m.layer(layer);
    auto a = trace_m.layer(layer - 1);
    auto b = trace_other.layer(layer - 1);
    const Activation act = m.arch.activation(layer);
    std::vector<double> out(w.cols);
    for (std::size_t j = 0; j < w.cols; ++j) {
        double za = w.bias.empty() ? 0.0 : w.bias[j];
        double zb = za;
        for (std::size_t i = 0; i < w.rows; ++i) {
            za += static_cast<double>(w.w(i, j)) * a[i];
            zb += static_cast<double>(w.w(i, j)) * b[i];
        }
        out[j] = std::abs(activate(act, za) - activate(act, zb));
    }
    return out;
}

std::vector<std::vector<double>> separation_all(const Model& m, const Trace& trace_m, const Trace& trace_other) {
    std::vector<std::vector<double>> out;
    for (std::size_t l = 1; l <= m.arch.num_layers(); ++l) out.push_back(separation_value(m, trace_m, trace_other, l));
    return out;
}

double d_out(std::span<const float> y1, std::span<const float> y2) {
    if (y1.size() != y2.size()) throw ShapeError("output vectors differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i < y1.size(); ++i) {
        double d = static_cast<double>(y1[i]) - y2[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double d_trc(const Trace& t1, const Trace& t2, std::span<const std::size_t> valid_layers) {
    if (valid_layers.empty()) throw Error("d_trc needs at least one valid layer");
    if (t1.offsets != t2.offsets) throw ShapeError("traces are shaped differently");
    double total = 0.0;
    for (std::size_t l : valid_layers) {
        auto a = t1.layer(l);
        auto b = t2.layer(l);
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(static_cast<double>(a[i]) - b[i]);
        total += s / static_cast<double>(a.size());
    }
    return total / static_cast<double>(valid_layers.size());
}

double js_divergence(std::span<const double> p, std::span<const double> q, std::size_t bins, double eps) {
    if (p.size() < 2 || q.size() < 2) throw Error("JS divergence needs at least two samples per side");
    if (bins == 0) throw Error("JS divergence needs at least one bin");
    auto [pmin, pmax] = std::minmax_element(p.begin(), p.end());
    auto [qmin, qmax] = std::minmax_element(q.begin(), q.end());
    const double lo = std::min(*pmin, *qmin);
    const double hi = std::max(*pmax, *qmax);
    auto histogram = [&](std::span<const double> s) {
        std::vector<double> h(bins, 0.0);
        for (double x : s) {
            std::size_t b = 0;
            if (hi > lo) b = std::min(bins - 1, static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(bins)));
            h[b] += 1.0;
        }
        double total = 0.0;
        for (double& c : h) total += (c += eps);
        for (double& c : h) c /= total;
        return h;
    };
    auto hp = histogram(p);
    auto hq = histogram(q);
    double js = 0.0;
    for (std::size_t i = 0; i < bins; ++i) {
        double mid = 0.5 * (hp[i] + hq[i]);
        js += 0.5 * hp[i] * std::log2(hp[i] / mid) + 0.5 * hq[i] * std::log2(hq[i] / mid);
    }
    return std::clamp(js, 0.0, 1.0);
}

LayerFilter js_per_layer(std::span<const Trace> traces_m, std::span<const Trace> traces_other, std::size_t bins,
                         double threshold) {
    if (traces_m.size() < 2 || traces_other.size() < 2) throw Error("layer filter needs at least two traces per model");
    const std::size_t layers = traces_m.front().layer_count();
    LayerFilter f;
    for (std::size_t l = 0; l < layers; ++l) {
        std::vector<double> p, q;
        for (const auto& t : traces_m) for (float x : t.layer(l)) p.push_back(x);
        for (const auto& t : traces_other) for (float x : t.layer(l)) q.push_back(x);
        double js = js_divergence(p, q, bins);
        f.js.push_back(js);
        if (js > threshold) f.valid.push_back(l);
    }
    return f;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> layer_means(const Model& m, const Trace& a, const Trace& b) {
    std::vector<double> out;
    for (const auto& s : separation_all(m, a, b)) out.push_back(summarize(s).mean);
    return out;
}

}  // namespace

Dataset build_dataset(const Model& m, std::span<const std::vector<float>> queries, std::span<const Trace> other_traces,
                      std::span<const std::vector<float>> other_outputs, std::size_t bins, double js_threshold) {
    if (queries.empty()) throw Error("dataset needs at least one query");
    if (other_traces.size() != queries.size() || other_outputs.size() != queries.size())
        throw ShapeError("one other-model trace and output per query expected");
    std::vector<Trace> honest;
    honest.reserve(queries.size());
    for (const auto& q : queries) honest.push_back(eval_trace(m, q));
    Dataset d;
    d.filter = js_per_layer(honest, other_traces, bins, js_threshold);
    for (std::size_t j = 0; j < queries.size(); ++j) {
        SeparationRecord r;
        r.query_id = j;
        r.d_out = d_out(out_of(honest[j], m.arch), other_outputs[j]);
        r.d_trc = d.filter.valid.empty() ? 0.0 : d_trc(honest[j], other_traces[j], d.filter.valid);
        r.layer_sep = layer_means(m, honest[j], other_traces[j]);
        r.qry = queries[j];
        r.trace = other_traces[j];
        d.records.push_back(std::move(r));
    }
    return d;
}

Dataset build_dataset(const Model& m, const Model& other, std::span<const std::vector<float>> queries, unsigned threads,
                      std::size_t bins, double js_threshold) {
    if (m.arch != other.arch) throw ShapeError("models must share an architecture");
    std::vector<Trace> traces(queries.size());
    std::vector<std::vector<float>> outs(queries.size());
    parallel_for(queries.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            traces[j] = eval_trace(other, queries[j]);
            outs[j] = out_of(traces[j], other.arch);
        }
    });
    return build_dataset(m, queries, traces, outs, bins, js_threshold);
}

std::string record_to_json(const SeparationRecord& r) {
    nlohmann::json j{{"query_id", r.query_id}, {"d_out", r.d_out}, {"d_trc", r.d_trc}, {"layer_sep", r.layer_sep}};
    if (!r.qry.empty()) j["qry"] = r.qry;
    return j.dump();
}

SeparationRecord record_from_json(std::string_view line) {
    try {
        auto j = nlohmann::json::parse(line);
        SeparationRecord r;
        r.query_id = j.at("query_id").get<std::size_t>();
        r.d_out = j.at("d_out").get<double>();
        r.d_trc = j.at("d_trc").get<double>();
        if (j.contains("layer_sep")) r.layer_sep = j.at("layer_sep").get<std::vector<double>>();
        if (j.contains("qry")) r.qry = j.at("qry").get<std::vector<float>>();
        if (r.d_out < 0 || r.d_trc < 0) throw ParseError("negative distance in record", 0);
        return r;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("dataset record: ") + e.what(), e.byte);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("dataset record: ") + e.what(), 0);
    }
}

void write_dataset(const std::string& path, std::span<const SeparationRecord> records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& r : records) out << record_to_json(r) << '\n';
}

std::vector<SeparationRecord> read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::vector<SeparationRecord> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(record_from_json(line));
    return out;
}

// ---------------------------------------------------------------------------

double quantile(std::vector<double> v, double p) {
    if (v.empty()) throw Error("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw Error("quantile level outside [0, 1]");
    std::sort(v.begin(), v.end());
    double pos = p * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return v[lo] + (v[hi] - v[lo]) * frac;
}

std::vector<ThresholdCandidate> gen_candidates(std::span<const SeparationRecord> records, const CandidateOptions& opts) {
    if (records.empty()) throw Error("candidate generation needs a non-empty dataset");
    std::vector<std::pair<double, double>> sorted;
    for (const auto& r : records) sorted.emplace_back(r.d_out, r.d_trc);
    std::sort(sorted.begin(), sorted.end());
    std::vector<ThresholdCandidate> out;
    for (std::size_t i = 0; i < sorted.size();) {
        const double x = sorted[i].first;
        const std::size_t support = sorted.size() - i;  // records with d_out >= x
        if (support < opts.min_support) break;
        std::vector<double> trc;
        for (std::size_t k = i; k < sorted.size(); ++k) trc.push_back(sorted[k].second);
        double q = quantile(std::move(trc), opts.eps_sep);
        if (q > opts.delta_noise) out.push_back({x, q, support});
        while (i < sorted.size() && sorted[i].first == x) ++i;
    }
    return out;
}

namespace {

path::Challenge trial_challenge(std::uint64_t seed, std::size_t record, std::size_t rep) {
    Sha256 h;
    Digest d = h.update(std::string_view("vinf-eps-tst").data(), 12).update_u64(seed).update_u64(record).update_u64(rep).finish();
    path::Challenge c;
    std::memcpy(c.rho.data(), d.data(), 32);
    return c;
}

}  // namespace

EpsEstimate estimate_eps_tst(const Model& m, std::span<const SeparationRecord> records, double delta,
                             const TestOptions& opts) {
    if (opts.repetitions == 0) throw Error("repetitions must be at least 1");
    std::vector<std::size_t> valid;
    for (std::size_t j = 0; j < records.size(); ++j) {
        if (records[j].d_trc < delta) continue;
        if (!records[j].trace) throw Error("record " + std::to_string(j) + " carries no trace for the path test");
        valid.push_back(j);
    }
    if (valid.empty()) throw Error("no record has d_trc >= delta (CountValid = 0)");
    std::vector<double> accept_rate(valid.size());
    path::InMemoryModel oracle(m);
    parallel_for(valid.size(), opts.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t v = begin; v < end; ++v) {
            const auto& r = records[valid[v]];
            path::InMemoryTrace trace(*r.trace);
            std::size_t accepted = 0;
            for (std::size_t k = 0; k < opts.repetitions; ++k) {
                auto rep = path::rand_path_test(m.arch, oracle, trace, r.qry, trial_challenge(opts.seed, valid[v], k),
                                                opts.paths, opts.tol);
                accepted += rep.accept ? 1 : 0;
            }
            accept_rate[v] = static_cast<double>(accepted) / static_cast<double>(opts.repetitions);
        }
    });
    EpsEstimate e;
    e.count_valid = valid.size();
    e.eps_tst = std::accumulate(accept_rate.begin(), accept_rate.end(), 0.0) / static_cast<double>(valid.size());
    return e;
}

Selection select_params(const Model& m, std::span<const ThresholdCandidate> candidates,
                        std::span<const SeparationRecord> records, double eps_target, double eps_sep,
                        const TestOptions& opts) {
    Selection s;
    for (const auto& c : candidates) {
        double eps = estimate_eps_tst(m, records, c.q, opts).eps_tst;
        s.tried.emplace_back(c, eps);
        if (eps <= eps_target) {
            s.params = SelectedParams{c.x, c.q, eps_sep, eps};
            break;
        }
    }
    return s;
}

std::optional<SelectedParams> combine_selections(std::span<const Selection> per_model) {
    std::optional<SelectedParams> out;
    for (const auto& sel : per_model) {
        if (!sel.params) return std::nullopt;
        if (!out) {
            out = sel.params;
            continue;
        }
        out->delta_out = std::min(out->delta_out, sel.params->delta_out);
        out->delta_trace = std::min(out->delta_trace, sel.params->delta_trace);
        out->eps_tst = std::max(out->eps_tst, sel.params->eps_tst);
    }
    return out;
}

MultiModelResult estimate_over_models(const Model& m, std::span<const Model> others,
                                      std::span<const std::vector<float>> queries, const CandidateOptions& copts,
                                      double eps_target, const TestOptions& topts) {
    if (others.empty()) throw Error("need at least one adversarial model");
    MultiModelResult res;
    for (const auto& other : others) {
        auto data = build_dataset(m, other, queries, topts.threads);
        auto cands = gen_candidates(data.records, copts);
        res.per_model.push_back(select_params(m, cands, data.records, eps_target, copts.eps_sep, topts));
    }
    res.combined = combine_selections(res.per_model);
    return res;
}

// ---------------------------------------------------------------------------

namespace {
constexpr double kPercentiles[] = {0.0, 1.0, 5.0, 10.0, 25.0, 50.0, 75.0, 90.0, 95.0, 99.0, 100.0};
}

std::string percentile_csv(std::span<const SeparationRecord> records) {
    if (records.empty()) throw Error("no records to report");
    const std::size_t layers = records.front().layer_sep.size();
    std::vector<std::vector<double>> cols(2 + layers);
    for (const auto& r : records) {
        cols[0].push_back(r.d_out);
        cols[1].push_back(r.d_trc);
        for (std::size_t l = 0; l < layers && l < r.layer_sep.size(); ++l) cols[2 + l].push_back(r.layer_sep[l]);
    }
    std::ostringstream out;
    out << "percentile,d_out,d_trc";
    for (std::size_t l = 0; l < layers; ++l) out << ",layer" << (l + 1);
    out << '\n';
    out.precision(9);
    for (double p : kPercentiles) {
        out << p;
        for (const auto& c : cols) out << ',' << (c.empty() ? 0.0 : quantile(c, p / 100.0));
        out << '\n';
    }
    return out.str();
}

std::string render_summary(std::span<const SeparationRecord> records, const LayerFilter& filter) {
    std::ostringstream out;
    out << "records: " << records.size() << '\n';
    out << "layer  JS(base 2)  valid\n";
    for (std::size_t l = 0; l < filter.js.size(); ++l) {
        bool valid = std::find(filter.valid.begin(), filter.valid.end(), l) != filter.valid.end();
        char buf[64];
        std::snprintf(buf, sizeof buf, "%5zu  %10.6f  %s\n", l, filter.js[l], valid ? "yes" : "no");
        out << buf;
    }
    if (!records.empty()) {
        std::vector<double> dout, dtrc;
        for (const auto& r : records) {
            dout.push_back(r.d_out);
            dtrc.push_back(r.d_trc);
        }
        auto so = summarize(dout);
        auto st = summarize(dtrc);
        char buf[160];
        std::snprintf(buf, sizeof buf, "d_out  min %.6g  median %.6g  max %.6g\nd_trc  min %.6g  median %.6g  max %.6g\n",
                      so.min, quantile(dout, 0.5), so.max, st.min, quantile(dtrc, 0.5), st.max);
        out << buf;
    }
    return out.str();
}

}  // namespace vinf::sep
