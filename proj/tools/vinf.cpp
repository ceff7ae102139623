#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vinf/attacks.hpp"
#include "vinf/bench.hpp"
#include "vinf/data.hpp"
#include "vinf/merkle.hpp"
#include "vinf/model.hpp"
#include "vinf/parallel.hpp"
#include "vinf/protocol.hpp"
#include "vinf/refereed.hpp"
#include "vinf/separation.hpp"

namespace {

using namespace vinf;
using json = nlohmann::ordered_json;

constexpr int kExitReject = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

void require_file(const std::string& path) {
    if (!std::filesystem::is_regular_file(path)) throw IoError("no such file: " + path);
}

std::string read_text(const std::string& path) {
    auto b = read_file(path);
    return std::string(b.begin(), b.end());
}

void write_text(const std::string& path, const std::string& text) {
    write_file(path, ByteSpan(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

/// A JSON array of numbers, or raw little-endian float32.
std::vector<float> load_vector(const std::string& path) {
    auto b = read_file(path);
    std::string head(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(b.size(), 64)));
    if (trim(head).starts_with("[")) {
        try {
            return json::parse(b.begin(), b.end()).get<std::vector<float>>();
        } catch (const json::parse_error& e) {
            throw ParseError(path + ": " + e.what(), e.byte);
        } catch (const json::exception& e) {
            throw ParseError(path + ": " + e.what(), 0);
        }
    }
    if (b.size() % sizeof(float) != 0) throw ParseError(path + ": raw float32 file has a partial value", b.size());
    return vc::decode_floats(b);
}

/// Labeled CSV (label column dropped) or a JSON array of arrays.
std::vector<std::vector<float>> load_queries(const std::string& path, std::size_t limit) {
    std::vector<std::vector<float>> qs;
    if (path.ends_with(".csv")) {
        qs = data::load_labeled_csv(path).xs;
    } else {
        try {
            qs = json::parse(read_text(path)).get<std::vector<std::vector<float>>>();
        } catch (const json::exception& e) {
            throw ParseError(path + ": " + e.what(), 0);
        }
    }
    if (limit > 0 && qs.size() > limit) qs.resize(limit);
    if (qs.empty()) throw ParseError(path + ": no queries", 0);
    return qs;
}

/// A trace file, or a JSON array holding the flat activations.
std::vector<float> load_trace_values(const std::string& path, const Architecture& arch) {
    auto b = read_file(path);
    std::vector<float> v;
    if (b.size() >= 8 && std::string(b.begin(), b.begin() + 8) == "VINF-TRC") {
        auto t = deserialize_trace(b);
        t.check_shape(arch);
        v = t.values;
    } else {
        v = load_vector(path);
    }
    if (v.size() != arch.trace_size()) throw ShapeError(path + ": trace length does not match the model");
    return v;
}

std::vector<std::size_t> parse_widths(const std::string& s) {
    std::vector<std::size_t> w;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, '-')) {
        try {
            std::size_t used = 0;
            w.push_back(std::stoull(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw Error("--arch expects widths like 4-64-32-3");
        }
    }
    return w;
}

vc::Commitment load_commitment(const std::string& path, const Architecture& arch) {
    auto bytes = from_hex(trim(read_text(path)));
    if (bytes.size() != 32) throw ParseError(path + ": expected a 32-byte hex root", 0);
    vc::Commitment cm;
    std::copy(bytes.begin(), bytes.end(), cm.root.begin());
    cm.length = arch.weight_rows();
    return cm;
}

json verify_json(const proto::VerifyResult& r) {
    json j;
    j["accept"] = r.accept;
    j["reason"] = std::string(proto::to_string(r.reason));
    if (!r.detail.empty()) j["detail"] = r.detail;
    if (r.report.failing_node) j["failing_node"] = *r.report.failing_node;
    j["paths_checked"] = r.report.paths_checked;
    return j;
}

// ---------------------------------------------------------------------------

struct GenModelOpts {
    std::string arch = "4-64-32-3";
    std::string hidden = "relu";
    std::string output = "identity";
    std::string out_fn = "identity";
    bool no_bias = false;
    std::uint64_t seed = 1;
    std::string out;
};

int gen_model(const GenModelOpts& o) {
    auto a = Architecture::dense(parse_widths(o.arch), parse_activation(o.hidden), parse_activation(o.output),
                                 parse_out_fn(o.out_fn), !o.no_bias);
    a.validate();
    save_model(gen_random_model(o.seed, a), o.out);
    return 0;
}

int commit_model(const std::string& model_path, const std::string& out, std::uint64_t max_len) {
    require_file(model_path);
    auto m = load_model(model_path);
    vc::VcParams vp{max_len};
    auto cm = vc::commit_to_model(vp, m);
    const std::string hex = to_hex(cm.root);
    if (out.empty()) std::cout << hex << "\n";
    else write_text(out, hex + "\n");
    return 0;
}

struct ProveOpts {
    std::string model, query, params, params_out, out;
    std::size_t paths = 1;
    double tol = 1e-4;
    bool cover_outputs = false;
    std::uint32_t security_bits = 128;
    bool self_play = false;
    std::uint64_t seed = 1;
};

proto::PublicParams params_for(const std::string& params_path, const Model& m, std::size_t paths, double tol,
                               bool cover_outputs, std::uint32_t security_bits) {
    if (!params_path.empty()) {
        auto pp = proto::params_from_json(read_text(params_path));
        if (!(pp.arch == m.arch)) throw ShapeError("params architecture does not match the model");
        return pp;
    }
    proto::ProtocolConfig c;
    c.num_paths = paths;
    c.tol = tol;
    c.cover_outputs = cover_outputs;
    return proto::gen_params(security_bits, m.arch, c);
}

int prove(const ProveOpts& o) {
    require_file(o.model);
    require_file(o.query);
    if (!o.params.empty()) require_file(o.params);
    auto model = std::make_shared<const Model>(load_model(o.model));
    auto qry = load_vector(o.query);
    auto pp = params_for(o.params, *model, o.paths, o.tol, o.cover_outputs, o.security_bits);
    auto [p1, state] = proto::prove1(pp, model, qry);
    proto::Transcript t;
    t.pp_hash = proto::params_hash(pp);
    t.cm_model = state.model_tree().commitment();
    t.qry = qry;
    t.proof1 = p1;
    if (o.self_play) {
        t.rho = path::Challenge::from_seed(o.seed);
        t.proof2 = proto::prove2(state, *t.rho);
    }
    if (!o.params_out.empty()) write_text(o.params_out, proto::params_to_json(pp));
    write_file(o.out, proto::serialize_transcript(t));
    json j;
    j["claimed_output"] = p1.claimed_output;
    j["trace_commitment"] = to_hex(p1.trace_commitment.root);
    j["complete"] = o.self_play;
    std::cout << j.dump() << "\n";
    return 0;
}

int challenge(const std::string& in, const std::string& out, std::optional<std::uint64_t> seed) {
    require_file(in);
    auto t = proto::deserialize_transcript(read_file(in));
    if (t.rho) throw Error("transcript already holds a challenge");
    if (seed) {
        t.rho = path::Challenge::from_seed(*seed);
    } else {
        std::random_device rd;
        path::Challenge c;
        for (auto& b : c.rho) b = static_cast<std::uint8_t>(rd());
        t.rho = c;
    }
    write_file(out, proto::serialize_transcript(t));
    std::cout << json{{"rho", to_hex(ByteSpan(t.rho->rho))}}.dump() << "\n";
    return 0;
}

int respond(const std::string& model_path, const std::string& params_path, const std::string& in, const std::string& out) {
    require_file(model_path);
    require_file(params_path);
    require_file(in);
    auto model = std::make_shared<const Model>(load_model(model_path));
    auto pp = proto::params_from_json(read_text(params_path));
    auto t = proto::deserialize_transcript(read_file(in));
    if (!t.rho) throw Error("transcript has no challenge yet");
    if (t.proof2) throw Error("transcript already holds a response");
    if (t.pp_hash != proto::params_hash(pp)) throw Error("transcript was produced under other parameters");
    auto [p1, state] = proto::prove1(pp, model, t.qry);
    if (!(p1 == t.proof1)) throw Error("model does not reproduce the first proof message");
    t.proof2 = proto::prove2(state, *t.rho);
    write_file(out, proto::serialize_transcript(t));
    return 0;
}

int verify(const std::string& params_path, const std::string& transcript_path, const std::string& cm_path) {
    require_file(params_path);
    require_file(transcript_path);
    if (!cm_path.empty()) require_file(cm_path);
    auto pp = proto::params_from_json(read_text(params_path));
    proto::VerifyResult r;
    proto::Transcript t;
    try {
        t = proto::deserialize_transcript(read_file(transcript_path));
    } catch (const ParseError& e) {
        r.reason = proto::Reason::Malformed;
        r.detail = e.what();
        std::cout << verify_json(r).dump() << "\n";
        return kExitReject;
    }
    if (!cm_path.empty() && !(load_commitment(cm_path, pp.arch) == t.cm_model)) {
        r.reason = proto::Reason::ParamsMismatch;
        r.detail = "transcript commits to a different model";
    } else {
        r = proto::replay(pp, t);
    }
    std::cout << verify_json(r).dump() << "\n";
    return r.accept ? 0 : kExitReject;
}

struct TraceOpts {
    std::string model, query, out;
    std::vector<std::size_t> tamper_index;
    std::vector<float> tamper_value;
};

int trace_cmd(const TraceOpts& o) {
    require_file(o.model);
    require_file(o.query);
    if (o.tamper_index.size() != o.tamper_value.size()) throw Error("--tamper-index and --tamper-value must pair up");
    auto m = load_model(o.model);
    auto t = eval_trace(m, load_vector(o.query));
    for (std::size_t i = 0; i < o.tamper_index.size(); ++i) {
        if (o.tamper_index[i] >= t.values.size()) throw IndexError("tamper index outside the trace");
        t.values[o.tamper_index[i]] = o.tamper_value[i];
    }
    write_file(o.out, serialize_trace(t));
    return 0;
}

int referee(const std::string& model_path, const std::string& p1_path, const std::string& p2_path,
            const std::string& query_path, double tol) {
    for (const auto* p : {&model_path, &p1_path, &p2_path, &query_path}) require_file(*p);
    auto model = std::make_shared<const Model>(load_model(model_path));
    auto qry = load_vector(query_path);
    if (qry.size() != model->arch.input_width()) throw ShapeError("query width does not match the model");
    ref::RefereeConfig cfg;
    cfg.tol = tol;
    ref::TraceParty p1(cfg.vc, model, load_trace_values(p1_path, model->arch));
    ref::TraceParty p2(cfg.vc, model, load_trace_values(p2_path, model->arch));
    auto cm_model = vc::commit_to_model(cfg.vc, *model);
    auto v = ref::run_bisection(p1, p2, model->arch, cm_model, qry, cfg);
    for (const auto& line : v.log) std::cout << line << "\n";
    json j;
    j["winner"] = std::string(ref::to_string(v.winner));
    j["failing_index"] = v.failing_index;
    j["rounds"] = v.rounds;
    j["reason"] = v.reason;
    std::cout << j.dump() << "\n";
    return 0;
}

struct EstimateOpts {
    std::string model, queries, dataset_out, report_out;
    std::vector<std::string> adv_models;
    std::size_t limit = 0;
    double eps_sep = 0.01;
    double eps_target = 0.05;
    double delta_noise = 1e-4;
    std::size_t min_support = 30;
    std::size_t paths = 1;
    bool cover_outputs = false;
    std::size_t repetitions = 50;
    double tol = 1e-4;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

json selected_json(const std::optional<sep::SelectedParams>& p) {
    if (!p) return nullptr;
    return json{{"delta_out", p->delta_out},
                {"delta_trace", p->delta_trace},
                {"eps_sep", p->eps_sep},
                {"eps_tst", p->eps_tst},
                {"soundness", p->soundness()}};
}

int estimate(const EstimateOpts& o) {
    require_file(o.model);
    require_file(o.queries);
    for (const auto& a : o.adv_models) require_file(a);
    auto m = load_model(o.model);
    auto queries = load_queries(o.queries, o.limit);
    std::vector<Model> others;
    for (const auto& a : o.adv_models) others.push_back(load_model(a));

    sep::CandidateOptions copts{o.eps_sep, o.delta_noise, o.min_support};
    sep::TestOptions topts;
    topts.repetitions = o.repetitions;
    topts.paths = path::PathOptions{o.paths, o.cover_outputs};
    topts.tol = o.tol;
    topts.seed = o.seed;
    topts.threads = o.threads;

    json out;
    json per = json::array();
    std::vector<sep::SeparationRecord> all_records;
    std::vector<sep::Selection> selections;
    for (std::size_t i = 0; i < others.size(); ++i) {
        auto ds = sep::build_dataset(m, others[i], queries, o.threads);
        auto cands = sep::gen_candidates(ds.records, copts);
        auto sel = sep::select_params(m, cands, ds.records, o.eps_target, o.eps_sep, topts);
        json e;
        e["adv_model"] = o.adv_models[i];
        e["valid_layers"] = ds.filter.valid;
        e["candidates"] = cands.size();
        e["selected"] = selected_json(sel.params);
        per.push_back(e);
        std::cerr << sep::render_summary(ds.records, ds.filter);
        all_records.insert(all_records.end(), ds.records.begin(), ds.records.end());
        selections.push_back(std::move(sel));
    }
    auto combined = sep::combine_selections(selections);
    out["per_model"] = per;
    out["combined"] = selected_json(combined);
    if (!o.dataset_out.empty()) sep::write_dataset(o.dataset_out, all_records);
    if (!o.report_out.empty()) write_text(o.report_out, sep::percentile_csv(all_records));
    std::cout << out.dump(2) << "\n";
    return combined ? 0 : kExitReject;
}

struct AttackOpts {
    std::string method = "grad-descent";
    std::string model, queries, config, csv_out, table_out;
    std::size_t limit = 0;
    std::optional<std::size_t> rounds, max_iters;
    std::optional<double> lr;
    std::optional<std::string> optimizer;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

int attack(const AttackOpts& o) {
    require_file(o.model);
    require_file(o.queries);
    if (!o.config.empty()) require_file(o.config);
    auto method = atk::parse_method(o.method);
    auto cfg = method == atk::Method::GradDescent ? atk::AttackConfig::table1()
               : method == atk::Method::Swap      ? atk::AttackConfig::swap()
                                                  : atk::AttackConfig::inverse(method);
    if (!o.config.empty()) cfg = atk::config_from_json(read_text(o.config), cfg);
    cfg.method = method;
    if (o.rounds) cfg.rounds = *o.rounds;
    if (o.max_iters) cfg.max_iters = *o.max_iters;
    if (o.lr) cfg.learning_rate = *o.lr;
    if (o.optimizer) cfg.optimizer = atk::parse_optimizer(*o.optimizer);
    if (o.seed) cfg.seed = *o.seed;
    cfg.validate();

    auto m = load_model(o.model);
    auto queries = load_queries(o.queries, o.limit);
    auto records = atk::run_attack(m, queries, cfg, o.threads);
    const auto& thresholds = method == atk::Method::GradDescent ? atk::table1_thresholds() : atk::table2_thresholds();
    auto table = atk::pass_rate_table(records, thresholds);
    std::cout << atk::render_table(table, std::string(atk::to_string(method)));
    if (method == atk::Method::Swap) {
        std::vector<double> mins;
        for (const auto& r : records)
            if (r.result.min_path_separation) mins.push_back(*r.result.min_path_separation);
        auto s = sep::summarize(mins);
        std::cout << json{{"min_path_separation", {{"min", s.min}, {"mean", s.mean}, {"max", s.max}}}}.dump() << "\n";
    }
    if (!o.csv_out.empty()) write_text(o.csv_out, atk::attack_csv(records));
    if (!o.table_out.empty()) write_text(o.table_out, atk::table_csv(table));
    return 0;
}

int bench_cmd(const std::string& shape, unsigned threads, std::uint64_t seed, std::size_t blocks) {
    if (shape != "llama-synthetic") throw Error("unknown bench shape '" + shape + "'");
    bench::SyntheticShape s;
    s.blocks = blocks;
    std::cout << bench::to_json(bench::run_commit_bench(s, threads, seed)) << "\n";
    return 0;
}

void emit_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Verifiable inference toolkit: commitments, path proofs, refereed disputes and trace attacks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "vinf 0.3.0");
    unsigned threads = default_threads();
    app.add_option("--threads", threads, "worker threads (default: logical cores)")->check(CLI::PositiveNumber);

    GenModelOpts gm;
    auto* c_gen = app.add_subcommand("gen-model", "write a randomly initialised model");
    c_gen->add_option("--arch", gm.arch, "layer widths, e.g. 4-64-32-3")->capture_default_str();
    c_gen->add_option("--hidden", gm.hidden, "hidden activation: relu, sigmoid, identity")->capture_default_str();
    c_gen->add_option("--output", gm.output, "output-layer activation")->capture_default_str();
    c_gen->add_option("--out-fn", gm.out_fn, "output function: identity, softmax")->capture_default_str();
    c_gen->add_flag("--no-bias", gm.no_bias, "omit bias terms");
    c_gen->add_option("--seed", gm.seed, "weight seed")->capture_default_str();
    c_gen->add_option("--out", gm.out, "model file (binary when it ends in .vmdl, JSON text otherwise)")->required();

    std::string cm_model, cm_out;
    std::uint64_t max_len = std::uint64_t{1} << 40;
    auto* c_commit = app.add_subcommand("commit-model", "print or write the model commitment root (hex)");
    c_commit->add_option("--model", cm_model, "model file")->required();
    c_commit->add_option("--out", cm_out, "output file (default: stdout)");
    c_commit->add_option("--max-len", max_len, "vector commitment length bound")->capture_default_str();

    ProveOpts po;
    auto* c_prove = app.add_subcommand("prove", "run inference and write the first-round transcript");
    c_prove->add_option("--model", po.model, "model file")->required();
    c_prove->add_option("--query", po.query, "query: JSON array or raw float32")->required();
    c_prove->add_option("--params", po.params, "public parameters (JSON); overrides the flags below");
    c_prove->add_option("--paths", po.paths, "random paths per test")->capture_default_str();
    c_prove->add_option("--tol", po.tol, "local-check tolerance, 0 = bit-exact")->capture_default_str();
    c_prove->add_flag("--cover-outputs", po.cover_outputs, "start path p at output node p mod width");
    c_prove->add_option("--security-bits", po.security_bits, "security parameter")->capture_default_str();
    c_prove->add_option("--params-out", po.params_out, "write the public parameters used");
    c_prove->add_option("--out,--out-transcript-partial", po.out, "transcript file")->required();
    c_prove->add_flag("--self-play", po.self_play, "also draw the challenge and respond");
    c_prove->add_option("--seed", po.seed, "challenge seed for --self-play")->capture_default_str();

    std::string ch_in, ch_out;
    std::optional<std::uint64_t> ch_seed;
    auto* c_chal = app.add_subcommand("challenge", "append the verifier's random challenge");
    c_chal->add_option("--transcript", ch_in, "partial transcript")->required();
    c_chal->add_option("--out", ch_out, "output transcript")->required();
    c_chal->add_option("--seed", ch_seed, "derive the challenge from a seed (default: system randomness)");

    std::string rs_model, rs_params, rs_in, rs_out;
    auto* c_resp = app.add_subcommand("respond", "open everything the challenge asks for");
    c_resp->add_option("--model", rs_model, "model file")->required();
    c_resp->add_option("--params", rs_params, "public parameters (JSON)")->required();
    c_resp->add_option("--transcript", rs_in, "challenged transcript")->required();
    c_resp->add_option("--out", rs_out, "completed transcript")->required();

    std::string vf_params, vf_transcript, vf_cm;
    auto* c_verify = app.add_subcommand("verify", "check a completed transcript; exit 1 on reject");
    c_verify->add_option("--params", vf_params, "public parameters (JSON)")->required();
    c_verify->add_option("--transcript", vf_transcript, "completed transcript")->required();
    c_verify->add_option("--model-commitment", vf_cm, "trusted commitment root (hex file)");

    TraceOpts to;
    auto* c_trace = app.add_subcommand("trace", "write the execution trace of a query, optionally tampered");
    c_trace->add_option("--model", to.model, "model file")->required();
    c_trace->add_option("--query", to.query, "query: JSON array or raw float32")->required();
    c_trace->add_option("--out", to.out, "trace file")->required();
    c_trace->add_option("--tamper-index", to.tamper_index, "flat positions to overwrite");
    c_trace->add_option("--tamper-value", to.tamper_value, "values written at those positions");

    std::string rf_model, rf_p1, rf_p2, rf_query;
    double rf_tol = 1e-4;
    auto* c_ref = app.add_subcommand("referee", "bisect two disputed traces and adjudicate");
    c_ref->add_option("--model", rf_model, "model file")->required();
    c_ref->add_option("--p1-trace", rf_p1, "first prover's trace")->required();
    c_ref->add_option("--p2-trace", rf_p2, "second prover's trace")->required();
    c_ref->add_option("--query", rf_query, "query: JSON array or raw float32")->required();
    c_ref->add_option("--tol", rf_tol, "final-step tolerance")->capture_default_str();

    EstimateOpts eo;
    auto* c_est = app.add_subcommand("estimate", "choose separation thresholds against adversarial models");
    c_est->add_option("--model", eo.model, "reference model")->required();
    c_est->add_option("--adv-model", eo.adv_models, "adversarial model (repeatable)")->required();
    c_est->add_option("--queries", eo.queries, "labeled CSV or JSON array of queries")->required();
    c_est->add_option("--limit", eo.limit, "use at most this many queries (0 = all)")->capture_default_str();
    c_est->add_option("--eps-sep", eo.eps_sep, "tolerated separation failure rate")->capture_default_str();
    c_est->add_option("--eps-target", eo.eps_target, "largest acceptable test error")->capture_default_str();
    c_est->add_option("--delta-noise", eo.delta_noise, "smallest meaningful output distance")->capture_default_str();
    c_est->add_option("--min-support", eo.min_support, "records required per candidate")->capture_default_str();
    c_est->add_option("--paths", eo.paths, "random paths per test")->capture_default_str();
    c_est->add_flag("--cover-outputs", eo.cover_outputs, "start path p at output node p mod width");
    c_est->add_option("--repetitions", eo.repetitions, "path tests per record")->capture_default_str();
    c_est->add_option("--tol", eo.tol, "local-check tolerance")->capture_default_str();
    c_est->add_option("--seed", eo.seed, "challenge seed")->capture_default_str();
    c_est->add_option("--dataset-out", eo.dataset_out, "write separation records (JSONL)");
    c_est->add_option("--report-out", eo.report_out, "write the percentile table (CSV)");

    AttackOpts ao;
    auto* c_atk = app.add_subcommand("attack", "forge traces and report per-layer separation pass rates");
    c_atk->add_option("--method", ao.method,
                      "grad-descent, inverse-pinv, inverse-svd, inverse-regularized or swap")->capture_default_str();
    c_atk->add_option("--model", ao.model, "model file")->required();
    c_atk->add_option("--queries", ao.queries, "labeled CSV or JSON array of queries")->required();
    c_atk->add_option("--config", ao.config, "attack configuration (JSON)");
    c_atk->add_option("--limit", ao.limit, "use at most this many queries (0 = all)")->capture_default_str();
    c_atk->add_option("--rounds", ao.rounds, "rounds per query");
    c_atk->add_option("--max-iters", ao.max_iters, "optimisation steps per round");
    c_atk->add_option("--lr", ao.lr, "learning rate");
    c_atk->add_option("--optimizer", ao.optimizer, "plain-gd or adam");
    c_atk->add_option("--seed", ao.seed, "round seed base");
    c_atk->add_option("--csv-out", ao.csv_out, "per-round separation CSV");
    c_atk->add_option("--table-out", ao.table_out, "pass-rate table CSV");

    std::string bn_shape = "llama-synthetic";
    std::uint64_t bn_seed = 1;
    std::size_t bn_blocks = 32;
    auto* c_bench = app.add_subcommand("bench", "time commitments over a synthetic tensor trace");
    c_bench->add_option("--shape", bn_shape, "trace shape")->capture_default_str();
    c_bench->add_option("--seed", bn_seed, "tensor fill seed")->capture_default_str();
    c_bench->add_option("--blocks", bn_blocks, "blocks of six 64x4096 tensors")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("usage", e.what());
        return kExitUsage;
    }

    try {
        if (*c_gen) return gen_model(gm);
        if (*c_commit) return commit_model(cm_model, cm_out, max_len);
        if (*c_prove) return prove(po);
        if (*c_chal) return challenge(ch_in, ch_out, ch_seed);
        if (*c_resp) return respond(rs_model, rs_params, rs_in, rs_out);
        if (*c_verify) return verify(vf_params, vf_transcript, vf_cm);
        if (*c_trace) return trace_cmd(to);
        if (*c_ref) return referee(rf_model, rf_p1, rf_p2, rf_query, rf_tol);
        if (*c_est) {
            eo.threads = threads;
            return estimate(eo);
        }
        if (*c_atk) {
            ao.threads = threads;
            return attack(ao);
        }
        if (*c_bench) return bench_cmd(bn_shape, threads, bn_seed, bn_blocks);
    } catch (const IoError& e) {
        emit_error("io", e.what());
        return kExitIo;
    } catch (const ParseError& e) {
        emit_error("parse", e.what());
        return kExitIo;
    } catch (const Error& e) {
        emit_error("usage", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
