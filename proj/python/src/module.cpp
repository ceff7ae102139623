#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include "vinf/attacks.hpp"
#include "vinf/merkle.hpp"
#include "vinf/model.hpp"
#include "vinf/protocol.hpp"
#include "vinf/refereed.hpp"
#include "vinf/separation.hpp"

namespace py = pybind11;
using namespace vinf;

namespace {

Bytes to_bytes(const py::bytes& b) {
    std::string s = b;
    return Bytes(s.begin(), s.end());
}

py::bytes from_bytes(const Bytes& b) { return py::bytes(reinterpret_cast<const char*>(b.data()), b.size()); }

vc::Commitment commitment_from(const std::string& root_hex, std::uint64_t length) {
    auto raw = from_hex(root_hex);
    if (raw.size() != 32) throw Error("commitment root must be 32 bytes of hex");
    vc::Commitment cm;
    std::copy(raw.begin(), raw.end(), cm.root.begin());
    cm.length = length;
    return cm;
}

py::dict verify_dict(const proto::VerifyResult& r) {
    py::dict d;
    d["accept"] = r.accept;
    d["reason"] = std::string(proto::to_string(r.reason));
    d["detail"] = r.detail;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Verifiable inference: commitments, path-test protocol, refereed disputes, trace attacks";

    py::register_exception<Error>(m, "VinfError", PyExc_RuntimeError);

    py::class_<Model, std::shared_ptr<Model>>(m, "Model")
        .def_static("load", &load_model, py::arg("path"))
        .def_static("from_json", &deserialize_model_text, py::arg("text"))
        .def_static("random",
                    [](std::uint64_t seed, std::vector<std::size_t> widths, const std::string& hidden,
                       const std::string& output, const std::string& out_fn, bool has_bias) {
                        auto a = Architecture::dense(std::move(widths), parse_activation(hidden), parse_activation(output),
                                                     parse_out_fn(out_fn), has_bias);
                        a.validate();
                        return gen_random_model(seed, a);
                    },
                    py::arg("seed"), py::arg("widths"), py::arg("hidden") = "relu", py::arg("output") = "identity",
                    py::arg("out_fn") = "identity", py::arg("has_bias") = true)
        .def("to_json", &serialize_model_text)
        .def("save", [](const Model& self, const std::string& path) { save_model(self, path); }, py::arg("path"))
        .def_property_readonly("widths", [](const Model& self) { return self.arch.widths; })
        .def("trace", [](const Model& self, std::vector<float> q) { return eval_trace(self, q).values; }, py::arg("query"),
             "Flat activations of every layer, input included.")
        .def("output",
             [](const Model& self, std::vector<float> q) { return out_of(eval_trace(self, q), self.arch); },
             py::arg("query"))
        .def("layer_offsets", [](const Model& self) {
            std::vector<std::size_t> o;
            for (std::size_t l = 0; l <= self.arch.num_layers(); ++l) o.push_back(self.arch.offset(l));
            return o;
        })
        .def("commitment", [](const Model& self) { return to_hex(vc::commit_to_model({}, self).root); },
             "Hex root of the model commitment.");

    m.def("leaf_hash", [](std::uint64_t i, const py::bytes& v) { return to_hex(vc::leaf_hash(i, to_bytes(v))); },
          py::arg("index"), py::arg("value"));
    m.def("commit_vector",
          [](const std::vector<py::bytes>& values) {
              std::vector<Bytes> vs;
              for (const auto& v : values) vs.push_back(to_bytes(v));
              auto cm = vc::commit_vec({}, vs);
              return py::make_tuple(to_hex(cm.root), cm.length);
          },
          py::arg("values"), "Returns (root hex, length).");
    m.def("open_vector",
          [](const std::vector<py::bytes>& values, std::size_t i) {
              std::vector<Bytes> vs;
              for (const auto& v : values) vs.push_back(to_bytes(v));
              return from_bytes(vc::serialize_opening(vc::open({}, vs, i)));
          },
          py::arg("values"), py::arg("index"), "Serialized opening proof.");
    m.def("verify_opening",
          [](const std::string& root_hex, std::uint64_t length, std::size_t i, const py::bytes& value,
             const py::bytes& proof) {
              vc::OpeningProof p;
              try {
                  p = vc::deserialize_opening(to_bytes(proof));
              } catch (const ParseError&) {
                  return false;
              }
              return vc::verify_opening({}, commitment_from(root_hex, length), i, to_bytes(value), p);
          },
          py::arg("root"), py::arg("length"), py::arg("index"), py::arg("value"), py::arg("proof"));

    m.def("gen_params",
          [](const Model& model, std::size_t num_paths, double tol, bool cover_outputs, std::uint32_t security_bits) {
              proto::ProtocolConfig c;
              c.num_paths = num_paths;
              c.tol = tol;
              c.cover_outputs = cover_outputs;
              return proto::params_to_json(proto::gen_params(security_bits, model.arch, c));
          },
          py::arg("model"), py::arg("num_paths") = 1, py::arg("tol") = 1e-4, py::arg("cover_outputs") = false,
          py::arg("security_bits") = 128, "Public parameters as JSON text.");
    m.def("prove",
          [](const std::string& params_json, const Model& model, std::vector<float> qry, std::uint64_t seed) {
              auto pp = proto::params_from_json(params_json);
              Bytes t;
              {
                  py::gil_scoped_release release;
                  t = proto::serialize_transcript(proto::run_honest(pp, model, qry, path::Challenge::from_seed(seed)));
              }
              return from_bytes(t);
          },
          py::arg("params"), py::arg("model"), py::arg("query"), py::arg("seed") = 1,
          "All three rounds with an honest prover; returns the transcript bytes.");
    m.def("verify",
          [](const std::string& params_json, const py::bytes& transcript) {
              auto pp = proto::params_from_json(params_json);
              proto::Transcript t;
              try {
                  t = proto::deserialize_transcript(to_bytes(transcript));
              } catch (const ParseError& e) {
                  proto::VerifyResult r;
                  r.reason = proto::Reason::Malformed;
                  r.detail = e.what();
                  return verify_dict(r);
              }
              return verify_dict(proto::replay(pp, t));
          },
          py::arg("params"), py::arg("transcript"));

    m.def("referee",
          [](const Model& model, std::vector<float> qry, std::vector<float> p1_trace, std::vector<float> p2_trace,
             double tol) {
              auto shared = std::make_shared<const Model>(model);
              ref::RefereeConfig cfg;
              cfg.tol = tol;
              ref::Verdict v;
              {
                  py::gil_scoped_release release;
                  ref::TraceParty p1(cfg.vc, shared, std::move(p1_trace));
                  ref::TraceParty p2(cfg.vc, shared, std::move(p2_trace));
                  v = ref::run_bisection(p1, p2, model.arch, vc::commit_to_model(cfg.vc, model), qry, cfg);
              }
              py::dict d;
              d["winner"] = std::string(ref::to_string(v.winner));
              d["failing_index"] = v.failing_index;
              d["rounds"] = v.rounds;
              d["reason"] = v.reason;
              d["log"] = v.log;
              return d;
          },
          py::arg("model"), py::arg("query"), py::arg("p1_trace"), py::arg("p2_trace"), py::arg("tol") = 1e-4);

    m.def("attack",
          [](const Model& model, std::vector<std::vector<float>> queries, const std::string& method,
             const std::string& config_json, unsigned threads) {
              auto meth = atk::parse_method(method);
              auto cfg = meth == atk::Method::GradDescent ? atk::AttackConfig::table1()
                         : meth == atk::Method::Swap      ? atk::AttackConfig::swap()
                                                          : atk::AttackConfig::inverse(meth);
              if (!config_json.empty()) cfg = atk::config_from_json(config_json, cfg);
              cfg.method = meth;
              std::vector<atk::AttackRecord> recs;
              {
                  py::gil_scoped_release release;
                  recs = atk::run_attack(model, queries, cfg, threads);
              }
              const auto& th = meth == atk::Method::GradDescent ? atk::table1_thresholds() : atk::table2_thresholds();
              auto table = atk::pass_rate_table(recs, th);
              py::dict d;
              d["csv"] = atk::attack_csv(recs);
              d["table_csv"] = atk::table_csv(table);
              d["table"] = atk::render_table(table, std::string(atk::to_string(meth)));
              std::vector<double> all_mean;
              for (std::size_t t = 0; t < th.size(); ++t) all_mean.push_back(table.all_layers(atk::Metric::Mean, t));
              d["thresholds"] = th;
              d["all_layers_mean"] = all_mean;
              return d;
          },
          py::arg("model"), py::arg("queries"), py::arg("method") = "grad-descent", py::arg("config") = "",
          py::arg("threads") = 1);

    m.def("js_divergence",
          [](std::vector<double> p, std::vector<double> q, std::size_t bins) { return sep::js_divergence(p, q, bins); },
          py::arg("p"), py::arg("q"), py::arg("bins") = 50);
    m.def("quantile", &sep::quantile, py::arg("values"), py::arg("p"));
}
