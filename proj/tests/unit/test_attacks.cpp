#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "support.hpp"
#include "vinf/attacks.hpp"
#include "vinf/error.hpp"
#include "vinf/fixtures.hpp"
#include "vinf/linalg.hpp"

using namespace vinf;

namespace {

const Model& iris() {
    static const Model m = load_model(testing::fixture("iris_model.json"));
    return m;
}

std::vector<std::vector<float>> iris_queries(std::size_t n) {
    auto d = data::load_labeled_csv(testing::fixture("iris_scaled.csv"));
    d.xs.resize(std::min(n, d.xs.size()));
    return d.xs;
}

atk::AttackRecord with_layers(std::vector<sep::Summary> layers) {
    atk::AttackRecord r;
    r.result.layers = std::move(layers);
    return r;
}

}  // namespace

TEST_SUITE("attacks") {

TEST_CASE("starting at the true query is a fixed point") {
    auto q = iris_queries(3);
    auto cfg = atk::AttackConfig::table1();
    cfg.max_iters = 200;
    for (const auto& x : q) {
        auto t = eval_trace(iris(), x);
        auto out = t.layer(3);
        auto r = atk::grad_reconstruct(iris(), x, std::vector<float>(out.begin(), out.end()), x, cfg);
        CHECK_FALSE(r.diverged);
        CHECK(r.final_loss < 1e-10);
        for (const auto& s : r.layers) CHECK(s.max < 1e-6);
    }
}

TEST_CASE("attack runs are reproducible from the seed") {
    auto q = iris_queries(2);
    auto cfg = atk::AttackConfig::table1();
    cfg.max_iters = 50;
    cfg.rounds = 3;
    auto a = atk::run_attack(iris(), q, cfg, 1);
    auto b = atk::run_attack(iris(), q, cfg, 2);
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].input_id == i / 3);
        CHECK(a[i].round == i % 3);
        CHECK(a[i].result.final_loss == b[i].result.final_loss);
        CHECK(a[i].result.forged.values.empty());
    }
    CHECK(a[0].result.final_loss != a[1].result.final_loss);
    cfg.seed = 99;
    auto c = atk::run_attack(iris(), q, cfg, 1);
    CHECK(c[0].result.final_loss != a[0].result.final_loss);
}

TEST_CASE("gradient descent lowers the output loss") {
    auto q = iris_queries(1)[0];
    auto cfg = atk::AttackConfig::table1();
    cfg.max_iters = 1;
    auto first = atk::grad_reconstruct(iris(), q, cfg, 5);
    cfg.max_iters = 2000;
    auto later = atk::grad_reconstruct(iris(), q, cfg, 5);
    CHECK(later.final_loss <= first.final_loss);
    CHECK(later.iterations == 2000);
}

TEST_CASE("pass-rate table matches a brute-force recount") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 0.2);
    std::vector<atk::AttackRecord> recs;
    for (int i = 0; i < 57; ++i) {
        std::vector<sep::Summary> ls;
        for (int l = 0; l < 3; ++l) {
            double a = u(rng), b = u(rng), c = u(rng);
            double lo = std::min({a, b, c}), hi = std::max({a, b, c});
            ls.push_back({lo, (a + b + c) / 3, hi});
        }
        recs.push_back(with_layers(ls));
    }
    std::vector<double> th{0.01, 0.05, 0.1, 0.15};
    auto t = atk::pass_rate_table(recs, th);
    CHECK(t.samples == 57);
    CHECK(t.num_layers == 3);
    for (auto m : {atk::Metric::Min, atk::Metric::Mean, atk::Metric::Max}) {
        auto stat = [&](const sep::Summary& s) { return m == atk::Metric::Min ? s.min : m == atk::Metric::Mean ? s.mean : s.max; };
        for (std::size_t ti = 0; ti < th.size(); ++ti) {
            std::size_t all = 0;
            for (std::size_t l = 1; l <= 3; ++l) {
                std::size_t n = 0;
                for (const auto& r : recs) n += stat(r.result.layers[l - 1]) <= th[ti];
                CHECK(t.at(m, l, ti) == doctest::Approx(100.0 * n / 57.0));
                CHECK(t.all_layers(m, ti) <= t.at(m, l, ti));
            }
            for (const auto& r : recs) {
                bool ok = true;
                for (const auto& s : r.result.layers) ok = ok && stat(s) <= th[ti];
                all += ok;
            }
            CHECK(t.all_layers(m, ti) == doctest::Approx(100.0 * all / 57.0));
            if (ti > 0) CHECK(t.at(m, 1, ti) >= t.at(m, 1, ti - 1));
        }
    }
    CHECK_THROWS_AS(t.at(atk::Metric::Min, 0, 0), IndexError);
    CHECK_THROWS_AS(atk::pass_rate_table({}, th), Error);
}

TEST_CASE("all-zero separation passes every threshold") {
    std::vector<atk::AttackRecord> recs(4, with_layers({{0, 0, 0}, {0, 0, 0}}));
    auto t = atk::pass_rate_table(recs, atk::table1_thresholds());
    for (std::size_t ti = 0; ti < 4; ++ti) CHECK(t.all_layers(atk::Metric::Max, ti) == 100.0);
}

TEST_CASE("config JSON round trip and validation") {
    auto c = atk::AttackConfig::swap();
    c.seed = 1234;
    c.inject_layer = 2;
    auto back = atk::config_from_json(atk::config_to_json(c));
    CHECK(back.method == atk::Method::Swap);
    CHECK(back.optimizer == atk::OptimizerKind::Adam);
    CHECK(back.space == atk::Space::Activation);
    CHECK(back.learning_rate == c.learning_rate);
    CHECK(back.l2_lambda == c.l2_lambda);
    CHECK(back.max_iters == c.max_iters);
    CHECK(back.rounds == c.rounds);
    CHECK(back.inject_layer == 2);
    CHECK(back.seed == 1234);

    auto partial = atk::config_from_json(R"({"learning_rate": 0.5})", atk::AttackConfig::table1());
    CHECK(partial.learning_rate == 0.5);
    CHECK(partial.max_iters == 10000);
    CHECK_THROWS_AS(atk::config_from_json(R"({"learning_rate": -1})"), Error);
    CHECK_THROWS_AS(atk::config_from_json(R"({"method": "magic"})"), ParseError);
    CHECK_THROWS_AS(atk::config_from_json("{"), ParseError);
}

TEST_CASE("swap_extremes exchanges the largest and smallest logits") {
    std::vector<float> v{0.5f, 3.0f, -1.0f, 2.0f};
    CHECK(atk::swap_extremes(v) == std::vector<float>{0.5f, -1.0f, 3.0f, 2.0f});
    CHECK(atk::swap_extremes(std::vector<float>{}).empty());
}

TEST_CASE("swap attack on the toy net") {
    auto toy = fixtures::toy();
    std::vector<float> q{0.1f, 0.9f, 0.3f, 0.4f, 0.5f, 0.2f, 0.8f, 0.6f};
    auto cfg = atk::AttackConfig::swap();
    cfg.max_iters = 300;
    cfg.random_paths = 50;
    auto r = atk::swap_attack(toy, q, cfg, 1);
    REQUIRE(r.layers.size() == 3);
    CHECK_FALSE(r.diverged);
    CHECK(std::isfinite(r.final_loss));
    REQUIRE(r.min_path_separation);
    CHECK(*r.min_path_separation >= 0.0);
    CHECK(*r.min_path_separation <= r.layers[1].mean + r.layers[2].max);

    // With every coordinate frozen the injected activation stays honest.
    std::vector<std::uint8_t> mask(16, 0);
    auto frozen = atk::swap_attack(toy, q, cfg, 1, mask);
    for (const auto& s : frozen.layers) CHECK(s.max == 0.0);
    CHECK(*frozen.min_path_separation == 0.0);
    CHECK_THROWS_AS(atk::swap_attack(toy, q, cfg, 1, std::vector<std::uint8_t>(3, 1)), ShapeError);
    cfg.inject_layer = 3;
    CHECK_THROWS_AS(atk::swap_attack(toy, q, cfg, 1), IndexError);
}

TEST_CASE("inverse attacks reproduce the output layer") {
    auto q = iris_queries(4);
    for (auto method : {atk::Method::InversePinv, atk::Method::InverseSvd, atk::Method::InverseRegularized}) {
        for (const auto& x : q) {
            std::optional<atk::AttackResult> r;
            try {
                r = atk::inverse_transform_attack(iris(), x, method);
            } catch (const NumericError&) {
                CHECK(method == atk::Method::InversePinv);
                continue;
            }
            REQUIRE(r->layers.size() == 3);
            auto honest = eval_trace(iris(), x);
            // The claimed output is the honest output by construction.
            auto fo = r->forged.layer(3);
            auto ho = honest.layer(3);
            for (std::size_t i = 0; i < fo.size(); ++i) CHECK(fo[i] == ho[i]);
        }
    }
    auto cfg = atk::AttackConfig::inverse(atk::Method::InverseSvd);
    cfg.rounds = 5;
    CHECK(atk::run_attack(iris(), q, cfg).size() == q.size());
}

TEST_CASE("one-weight identity net converges to the analytic preimage") {
    Model m;
    m.arch = Architecture::dense({1, 1}, Activation::Identity, OutFn::Identity, false);
    m.layers = {DenseLayer{1, 1, {2.0f}, {}}};
    auto cfg = atk::AttackConfig::table1();
    cfg.max_iters = 5000;
    cfg.learning_rate = 0.05;
    std::vector<float> target{3.0f}, init{0.0f}, q{1.5f};
    auto r = atk::grad_reconstruct(m, q, target, init, cfg);
    CHECK(r.final_loss < 1e-12);
    // t / w = 1.5 is the honest query, so the forged trace matches it.
    CHECK(r.forged.layer(0)[0] == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(r.layers[0].max < 1e-5);
}

TEST_CASE("a learning rate that overshoots is flagged as diverged") {
    auto arch = Architecture::dense({2, 2}, Activation::Identity);
    auto m = gen_random_model(1, arch);
    auto cfg = atk::AttackConfig::table1();
    cfg.learning_rate = 1e6;
    cfg.max_iters = 5000;
    auto r = atk::grad_reconstruct(m, std::vector<float>{0.5f, 0.5f}, cfg, 1);
    CHECK(r.diverged);
}

TEST_CASE("inversion through orthogonal identity layers is exact") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n(0.0, 1.0);
    Model m;
    m.arch = Architecture::dense({4, 4, 4}, Activation::Identity);
    for (int l = 0; l < 2; ++l) {
        linalg::Mat a(4, 4);
        for (Eigen::Index i = 0; i < 16; ++i) a(i) = n(rng);
        linalg::Mat q = Eigen::HouseholderQR<linalg::Mat>(a).householderQ();
        DenseLayer d{4, 4, {}, std::vector<float>(4, 0.0f)};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) d.weights.push_back(static_cast<float>(q(i, j)));
        m.layers.push_back(d);
    }
    std::vector<float> x{0.1f, 0.7f, 0.3f, 0.9f};
    for (auto method : {atk::Method::InversePinv, atk::Method::InverseSvd}) {
        auto r = atk::inverse_transform_attack(m, x, method);
        for (const auto& s : r.layers) CHECK(s.max < 1e-5);
    }
}

TEST_CASE("pinv and svd inverses agree on well-conditioned weights") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    linalg::Mat a(12, 5);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = n(rng);
    CHECK((linalg::pinv_normal(a) - linalg::pinv_svd(a)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("the activation penalty changes the swap optimum") {
    auto toy = fixtures::toy();
    std::vector<float> q{0.3f, 0.1f, 0.9f, 0.4f, 0.2f, 0.6f, 0.5f, 0.7f};
    auto cfg = atk::AttackConfig::swap();
    cfg.max_iters = 500;
    cfg.random_paths = 0;
    auto with = atk::swap_attack(toy, q, cfg, 2);
    cfg.l2_lambda = 0.0;
    auto without = atk::swap_attack(toy, q, cfg, 2);
    CHECK(with.forged.layer(1)[0] != without.forged.layer(1)[0]);
}

TEST_CASE("CSV and table rendering") {
    std::vector<atk::AttackRecord> recs{with_layers({{0.0, 0.5, 1.0}, {0.1, 0.2, 0.3}})};
    recs[0].input_id = 4;
    auto csv = atk::attack_csv(recs);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "input_id,round,layer,min,mean,max");
    std::getline(in, line);
    CHECK(line.rfind("4,0,1,", 0) == 0);
    auto t = atk::pass_rate_table(recs, atk::table2_thresholds());
    CHECK(atk::table_csv(t).find("\nmin,all,") != std::string::npos);
    CHECK(atk::render_table(t, "demo").find("demo") != std::string::npos);
    CHECK(atk::parse_method(atk::to_string(atk::Method::InverseRegularized)) == atk::Method::InverseRegularized);
    CHECK(atk::parse_optimizer("adam") == atk::OptimizerKind::Adam);
}

}
