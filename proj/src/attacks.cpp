#include "vinf/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

#include <json.hpp>

#include "vinf/error.hpp"
#include "vinf/linalg.hpp"
#include "vinf/parallel.hpp"
#include "vinf/path_test.hpp"

namespace vinf::atk {

using nn::Mat;
using nn::Vec;

std::string_view to_string(Method m) {
    switch (m) {
        case Method::GradDescent: return "grad-descent";
        case Method::InversePinv: return "inverse-pinv";
        case Method::InverseSvd: return "inverse-svd";
        case Method::InverseRegularized: return "inverse-regularized";
        case Method::Swap: return "swap";
    }
    return "?";
}

Method parse_method(std::string_view s) {
    for (auto m : {Method::GradDescent, Method::InversePinv, Method::InverseSvd, Method::InverseRegularized, Method::Swap})
        if (s == to_string(m)) return m;
    throw ParseError("unknown attack method '" + std::string(s) + "'", 0);
}

std::string_view to_string(OptimizerKind o) { return o == OptimizerKind::Adam ? "adam" : "plain-gd"; }

OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "adam") return OptimizerKind::Adam;
    if (s == "plain-gd") return OptimizerKind::PlainGd;
    throw ParseError("unknown optimizer '" + std::string(s) + "'", 0);
}

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::Min: return "min";
        case Metric::Mean: return "mean";
        case Metric::Max: return "max";
    }
    return "?";
}

void AttackConfig::validate() const {
    if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
    if (max_iters < 1) throw Error("max_iters must be at least 1");
    if (rounds < 1) throw Error("rounds must be at least 1");
    if (convergence_loss < 0.0 || l2_lambda < 0.0 || reg_lambda < 0.0 || init_noise < 0.0)
        throw Error("loss threshold, regularization and noise must be non-negative");
}

AttackConfig AttackConfig::table1() {
    AttackConfig c;
    c.method = Method::GradDescent;
    c.optimizer = OptimizerKind::PlainGd;
    c.space = Space::Input;
    c.learning_rate = 0.005;
    c.max_iters = 10000;
    c.convergence_loss = 0.0;
    c.rounds = 50;
    return c;
}

AttackConfig AttackConfig::swap() {
    AttackConfig c;
    c.method = Method::Swap;
    c.optimizer = OptimizerKind::Adam;
    c.space = Space::Activation;
    c.learning_rate = 0.01;
    c.l2_lambda = 0.001;
    c.max_iters = 5000;
    c.convergence_loss = 1e-4;
    c.rounds = 10;
    return c;
}

AttackConfig AttackConfig::inverse(Method m) {
    AttackConfig c;
    c.method = m;
    c.rounds = 1;
    return c;
}

AttackConfig config_from_json(std::string_view text, AttackConfig c) {
    try {
        auto j = nlohmann::json::parse(text);
        if (j.contains("method")) c.method = parse_method(j["method"].get<std::string>());
        if (j.contains("optimizer")) c.optimizer = parse_optimizer(j["optimizer"].get<std::string>());
        if (j.contains("space")) {
            auto s = j["space"].get<std::string>();
            if (s != "input" && s != "activation") throw ParseError("space must be 'input' or 'activation'", 0);
            c.space = s == "input" ? Space::Input : Space::Activation;
        }
        if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
        if (j.contains("max_iters")) c.max_iters = j["max_iters"].get<std::size_t>();
        if (j.contains("convergence_loss")) c.convergence_loss = j["convergence_loss"].get<double>();
        if (j.contains("l2_lambda")) c.l2_lambda = j["l2_lambda"].get<double>();
        if (j.contains("reg_lambda")) c.reg_lambda = j["reg_lambda"].get<double>();
        if (j.contains("rounds")) c.rounds = j["rounds"].get<std::size_t>();
        if (j.contains("inject_layer")) c.inject_layer = j["inject_layer"].get<std::size_t>();
        if (j.contains("init_noise")) c.init_noise = j["init_noise"].get<double>();
        if (j.contains("random_paths")) c.random_paths = j["random_paths"].get<std::size_t>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("attack config: ") + e.what(), e.byte);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("attack config: ") + e.what(), 0);
    }
    c.validate();
    return c;
}

std::string config_to_json(const AttackConfig& c) {
    nlohmann::json j{{"method", std::string(to_string(c.method))},
                     {"optimizer", std::string(to_string(c.optimizer))},
                     {"space", c.space == Space::Input ? "input" : "activation"},
                     {"learning_rate", c.learning_rate},
                     {"max_iters", c.max_iters},
                     {"convergence_loss", c.convergence_loss},
                     {"l2_lambda", c.l2_lambda},
                     {"reg_lambda", c.reg_lambda},
                     {"rounds", c.rounds},
                     {"inject_layer", c.inject_layer},
                     {"init_noise", c.init_noise},
                     {"random_paths", c.random_paths},
                     {"seed", c.seed}};
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t round_seed(std::uint64_t seed, std::size_t input, std::size_t round) {
    return mix(mix(mix(seed) ^ input) ^ round);
}

Vec to_vec(std::span<const float> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

std::vector<float> to_floats(const Vec& v) {
    std::vector<float> out(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(v(i));
    return out;
}

struct Optimized {
    Vec x;
    double loss = 0.0;
    std::size_t iters = 0;
    bool converged = false;
    bool diverged = false;
};

Optimized optimize(const nn::DenseNet& net, std::size_t start, Vec x, const Vec& target, const AttackConfig& cfg,
                   std::span<const std::uint8_t> mask) {
    std::unique_ptr<nn::Optimizer> opt;
    if (cfg.optimizer == OptimizerKind::Adam)
        opt = std::make_unique<nn::Adam>(cfg.learning_rate);
    else
        opt = std::make_unique<nn::PlainGd>(cfg.learning_rate);
    Optimized r;
    for (r.iters = 0; r.iters < cfg.max_iters; ++r.iters) {
        auto lg = nn::mse_grad(net, start, x, target, cfg.l2_lambda);
        r.loss = lg.loss;
        if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) {
            r.diverged = true;
            break;
        }
        if (cfg.convergence_loss > 0.0 && lg.loss <= cfg.convergence_loss) {
            r.converged = true;
            break;
        }
        if (!mask.empty())
            for (Eigen::Index i = 0; i < lg.grad.size(); ++i)
                if (!mask[static_cast<std::size_t>(i)]) lg.grad(i) = 0.0;
        Vec prev = x;
        opt->step(x, lg.grad);
        if (!x.allFinite()) {
            x = prev;
            r.diverged = true;
            break;
        }
    }
    if (!r.converged && !r.diverged) {
        r.loss = nn::mse_grad(net, start, x, target, cfg.l2_lambda).loss;
        r.converged = cfg.convergence_loss > 0.0 && r.loss <= cfg.convergence_loss;
    }
    r.x = std::move(x);
    return r;
}

/// Honest up to layer k - 1, `a` at layer k, honest recomputation after.
Trace injected_trace(const Model& m, std::span<const float> qry, std::size_t k, std::span<const float> a) {
    Trace t = eval_trace(m, qry);
    std::copy(a.begin(), a.end(), t.layer(k).begin());
    for (std::size_t l = k + 1; l <= m.arch.num_layers(); ++l) {
        auto parents = t.layer(l - 1);
        std::vector<float> parents_copy(parents.begin(), parents.end());
        auto out = t.layer(l);
        for (std::size_t j = 0; j < out.size(); ++j)
            out[j] = neuron_output(m.arch.activation(l), m.fan_in_row(l, j), parents_copy);
    }
    return t;
}

std::vector<std::vector<double>> direct_separation(const Model& m, const Trace& honest, const Trace& forged) {
    std::vector<std::vector<double>> out;
    for (std::size_t l = 1; l <= m.arch.num_layers(); ++l) {
        auto a = honest.layer(l);
        auto b = forged.layer(l);
        std::vector<double> s(a.size());
        for (std::size_t j = 0; j < a.size(); ++j) s[j] = std::abs(static_cast<double>(a[j]) - b[j]);
        out.push_back(std::move(s));
    }
    return out;
}

void fill_summaries(AttackResult& r) {
    r.layers.clear();
    for (const auto& s : r.separation) r.layers.push_back(sep::summarize(s));
}

Vec act_inverse(Activation a, const Vec& v) {
    switch (a) {
        case Activation::ReLU: return v.cwiseMax(0.0);
        case Activation::Sigmoid:
            return v.unaryExpr([](double x) {
                x = std::clamp(x, 1e-7, 1.0 - 1e-7);
                return std::log(x / (1.0 - x));
            });
        case Activation::Identity: return v;
    }
    return v;
}

}  // namespace

AttackResult grad_reconstruct(const Model& m, std::span<const float> qry, std::span<const float> target,
                              std::span<const float> init, const AttackConfig& cfg) {
    cfg.validate();
    const auto net = nn::DenseNet::from_model(m);
    const Trace honest = eval_trace(m, qry);
    const std::size_t start = cfg.space == Space::Input ? 0 : cfg.inject_layer;
    if (start >= m.arch.num_layers()) throw IndexError("injection layer must precede the output layer");
    if (init.size() != m.arch.widths[start]) throw ShapeError("initial point has the wrong width");
    if (target.size() != m.arch.output_width()) throw ShapeError("target has the wrong width");

    auto opt = optimize(net, start, to_vec(init), to_vec(target), cfg, {});
    AttackResult r;
    r.iterations = opt.iters;
    r.final_loss = opt.loss;
    r.converged = opt.converged;
    r.diverged = opt.diverged;
    auto x = to_floats(opt.x);
    if (start == 0) {
        r.forged = eval_trace(m, x);
        r.separation = sep::separation_all(m, honest, r.forged);
    } else {
        r.forged = injected_trace(m, qry, start, x);
        r.separation = direct_separation(m, honest, r.forged);
    }
    fill_summaries(r);
    return r;
}

AttackResult grad_reconstruct(const Model& m, std::span<const float> qry, const AttackConfig& cfg, std::uint64_t seed) {
    const Trace honest = eval_trace(m, qry);
    auto target = honest.layer(m.arch.num_layers());
    std::mt19937_64 rng(seed);
    std::vector<float> init;
    if (cfg.space == Space::Input) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::size_t i = 0; i < m.arch.input_width(); ++i) init.push_back(static_cast<float>(u(rng)));
    } else {
        std::normal_distribution<double> n(0.0, cfg.init_noise);
        for (float a : honest.layer(cfg.inject_layer)) init.push_back(static_cast<float>(a + n(rng)));
    }
    return grad_reconstruct(m, qry, std::vector<float>(target.begin(), target.end()), init, cfg);
}

AttackResult inverse_transform_attack(const Model& m, std::span<const float> qry, Method method,
                                      std::optional<std::vector<float>> desired, double reg_lambda) {
    const auto net = nn::DenseNet::from_model(m);
    const Trace honest = eval_trace(m, qry);
    const std::size_t L = m.arch.num_layers();
    std::vector<float> y = desired ? *desired : std::vector<float>(honest.layer(L).begin(), honest.layer(L).end());
    if (y.size() != m.arch.output_width()) throw ShapeError("desired output has the wrong width");

    std::vector<Vec> acts(L + 1);
    acts[L] = to_vec(y);
    for (std::size_t l = L; l >= 1; --l) {
        const Mat& w = net.w[l - 1];
        Mat p;
        switch (method) {
            case Method::InversePinv: p = linalg::pinv_normal(w, "layer " + std::to_string(l) + " weights"); break;
            case Method::InverseSvd: p = linalg::pinv_svd(w); break;
            case Method::InverseRegularized: p = linalg::pinv_regularized(w, reg_lambda); break;
            default: throw Error("inverse_transform_attack needs an inverse method");
        }
        Vec pre = act_inverse(m.arch.activation(l), acts[l]) - net.b[l - 1];
        acts[l - 1] = p.transpose() * pre;
    }
    AttackResult r;
    r.forged = make_trace(m.arch);
    for (std::size_t l = 0; l <= L; ++l) {
        auto f = to_floats(acts[l]);
        std::copy(f.begin(), f.end(), r.forged.layer(l).begin());
    }
    r.separation = sep::separation_all(m, honest, r.forged);
    r.converged = true;
    fill_summaries(r);
    return r;
}

std::vector<float> swap_extremes(std::span<const float> logits) {
    std::vector<float> out(logits.begin(), logits.end());
    if (out.empty()) return out;
    auto hi = std::max_element(out.begin(), out.end());
    auto lo = std::min_element(out.begin(), out.end());
    std::iter_swap(hi, lo);
    return out;
}

AttackResult swap_attack(const Model& m, std::span<const float> qry, const AttackConfig& cfg, std::uint64_t seed,
                         std::span<const std::uint8_t> mask) {
    cfg.validate();
    const std::size_t L = m.arch.num_layers();
    const std::size_t k = cfg.inject_layer;
    if (k == 0 || k >= L) throw IndexError("swap injection layer must be a hidden layer");
    if (!mask.empty() && mask.size() != m.arch.widths[k]) throw ShapeError("mask width differs from the injected layer");
    const auto net = nn::DenseNet::from_model(m);
    const Trace honest = eval_trace(m, qry);
    const auto target = swap_extremes(honest.layer(L));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, cfg.init_noise);
    Vec init = to_vec(honest.layer(k));
    for (Eigen::Index i = 0; i < init.size(); ++i)
        if (mask.empty() || mask[static_cast<std::size_t>(i)]) init(i) += noise(rng);

    auto opt = optimize(net, k, init, to_vec(target), cfg, mask);
    AttackResult r;
    r.iterations = opt.iters;
    r.final_loss = opt.loss;
    r.converged = opt.converged;
    r.diverged = opt.diverged;
    r.forged = injected_trace(m, qry, k, to_floats(opt.x));
    r.separation = direct_separation(m, honest, r.forged);
    fill_summaries(r);

    auto path_sep = [&](const path::Path& p) {
        double s = 0.0;
        for (std::size_t l = 1; l <= L; ++l) s += r.separation[l - 1][p.at_layer(l)];
        return s / static_cast<double>(L);
    };
    double best = std::numeric_limits<double>::infinity();
    if (cfg.random_paths > 0) {
        path::Challenge c = path::Challenge::from_seed(mix(seed));
        for (const auto& p : path::derive_paths(m.arch, c, cfg.random_paths)) best = std::min(best, path_sep(p));
    }
    path::Path least;
    least.nodes.resize(L + 1, 0);
    for (std::size_t l = 1; l <= L; ++l) {
        const auto& s = r.separation[l - 1];
        least.nodes[L - l] = static_cast<std::size_t>(std::min_element(s.begin(), s.end()) - s.begin());
    }
    best = std::min(best, path_sep(least));
    r.min_path_separation = best;
    return r;
}

std::vector<AttackRecord> run_attack(const Model& m, std::span<const std::vector<float>> queries, const AttackConfig& cfg,
                                     unsigned threads) {
    cfg.validate();
    const bool inverse = cfg.method == Method::InversePinv || cfg.method == Method::InverseSvd ||
                         cfg.method == Method::InverseRegularized;
    const std::size_t rounds = inverse ? 1 : cfg.rounds;
    std::vector<AttackRecord> out(queries.size() * rounds);
    parallel_for(out.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx) {
            const std::size_t input = idx / rounds, round = idx % rounds;
            const std::uint64_t seed = round_seed(cfg.seed, input, round);
            AttackRecord& rec = out[idx];
            rec.input_id = input;
            rec.round = round;
            switch (cfg.method) {
                case Method::GradDescent: rec.result = grad_reconstruct(m, queries[input], cfg, seed); break;
                case Method::Swap: rec.result = swap_attack(m, queries[input], cfg, seed); break;
                default: rec.result = inverse_transform_attack(m, queries[input], cfg.method, std::nullopt, cfg.reg_lambda);
            }
            rec.result.forged = Trace{};
        }
    });
    return out;
}

// ---------------------------------------------------------------------------

double PassRateTable::at(Metric m, std::size_t layer, std::size_t threshold) const {
    auto it = std::find(metrics.begin(), metrics.end(), m);
    if (it == metrics.end()) throw Error("metric not in table");
    if (layer == 0 || layer > num_layers + 1) throw IndexError("table layer out of range");
    return pct.at(static_cast<std::size_t>(it - metrics.begin())).at(layer - 1).at(threshold);
}

PassRateTable pass_rate_table(std::span<const AttackRecord> records, std::span<const double> thresholds,
                              std::span<const Metric> metrics) {
    if (records.empty()) throw Error("pass-rate table of no results");
    PassRateTable t;
    t.thresholds.assign(thresholds.begin(), thresholds.end());
    if (metrics.empty())
        t.metrics = {Metric::Min, Metric::Mean, Metric::Max};
    else
        t.metrics.assign(metrics.begin(), metrics.end());
    t.num_layers = records.front().result.layers.size();
    t.samples = records.size();
    auto stat = [](const sep::Summary& s, Metric m) { return m == Metric::Min ? s.min : m == Metric::Mean ? s.mean : s.max; };
    for (Metric m : t.metrics) {
        std::vector<std::vector<double>> rows(t.num_layers + 1, std::vector<double>(thresholds.size(), 0.0));
        for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
            std::vector<std::size_t> pass(t.num_layers + 1, 0);
            for (const auto& rec : records) {
                if (rec.result.layers.size() != t.num_layers) throw ShapeError("records disagree on layer count");
                bool all = true;
                for (std::size_t l = 0; l < t.num_layers; ++l) {
                    bool ok = stat(rec.result.layers[l], m) <= thresholds[ti];
                    pass[l] += ok ? 1 : 0;
                    all = all && ok;
                }
                pass[t.num_layers] += all ? 1 : 0;
            }
            for (std::size_t l = 0; l <= t.num_layers; ++l)
                rows[l][ti] = 100.0 * static_cast<double>(pass[l]) / static_cast<double>(records.size());
        }
        t.pct.push_back(std::move(rows));
    }
    return t;
}

std::string attack_csv(std::span<const AttackRecord> records) {
    std::ostringstream out;
    out.precision(9);
    out << "input_id,round,layer,min,mean,max\n";
    for (const auto& r : records)
        for (std::size_t l = 0; l < r.result.layers.size(); ++l) {
            const auto& s = r.result.layers[l];
            out << r.input_id << ',' << r.round << ',' << (l + 1) << ',' << s.min << ',' << s.mean << ',' << s.max << '\n';
        }
    return out.str();
}

std::string table_csv(const PassRateTable& t) {
    std::ostringstream out;
    out << "metric,layer";
    for (double th : t.thresholds) out << ',' << th;
    out << '\n';
    for (std::size_t mi = 0; mi < t.metrics.size(); ++mi)
        for (std::size_t l = 0; l <= t.num_layers; ++l) {
            out << to_string(t.metrics[mi]) << ',' << (l == t.num_layers ? std::string("all") : "L" + std::to_string(l + 1));
            for (double p : t.pct[mi][l]) out << ',' << p;
            out << '\n';
        }
    return out.str();
}

std::string render_table(const PassRateTable& t, std::string_view title) {
    std::ostringstream out;
    out << title << "  (" << t.samples << " samples)\n";
    char buf[64];
    out << "Metric  Layers     ";
    for (double th : t.thresholds) {
        std::snprintf(buf, sizeof buf, "%10.3g", th);
        out << buf;
    }
    out << '\n';
    for (std::size_t mi = 0; mi < t.metrics.size(); ++mi) {
        for (std::size_t l = 0; l <= t.num_layers; ++l) {
            std::string name = l == t.num_layers ? "All Layers" : "L" + std::to_string(l + 1);
            std::snprintf(buf, sizeof buf, "%-7s %-11s", l == 0 ? std::string(to_string(t.metrics[mi])).c_str() : "",
                          name.c_str());
            out << buf;
            for (double p : t.pct[mi][l]) {
                std::snprintf(buf, sizeof buf, "%9.1f%%", p);
                out << buf;
            }
            out << '\n';
        }
    }
    return out.str();
}

}  // namespace vinf::atk
