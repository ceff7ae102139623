// Regenerates the files under fixtures/ from the raw Iris CSV.
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "vinf/data.hpp"
#include "vinf/fixtures.hpp"
#include "vinf/protocol.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Regenerate test fixtures"};
    std::string iris = "fixtures/iris.csv";
    std::string out = "fixtures";
    app.add_option("--iris", iris, "raw Iris CSV")->check(CLI::ExistingFile);
    app.add_option("--out", out, "output directory");
    CLI11_PARSE(app, argc, argv);

    namespace fs = std::filesystem;
    using namespace vinf;
    fs::create_directories(out);
    auto d = data::load_labeled_csv(iris);
    data::minmax_scale(d);
    data::save_labeled_csv((fs::path(out) / "iris_scaled.csv").string(), d);

    save_model(fixtures::f1(), (fs::path(out) / "f1.json").string());
    save_model(fixtures::f2(), (fs::path(out) / "f2.json").string());
    save_model(fixtures::toy(), (fs::path(out) / "toy_swap.json").string());
    for (auto [seed, name] : {std::pair{fixtures::kIrisSeed, "iris_model.json"}, std::pair{fixtures::kIrisSeedOther, "iris_model_b.json"}}) {
        double acc = 0.0;
        auto m = fixtures::train_iris(d, seed, &acc);
        save_model(m, (fs::path(out) / name).string());
        std::cout << name << ": train accuracy " << acc << "\n";
    }
    auto pp = fixtures::golden_params();
    auto text = proto::params_to_json(pp);
    write_file((fs::path(out) / "golden_params.json").string(),
               ByteSpan(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    auto t = proto::run_honest(pp, fixtures::f1(), fixtures::golden_query(),
                               path::Challenge::from_seed(fixtures::kGoldenChallengeSeed));
    write_file((fs::path(out) / "golden_transcript.bin").string(), proto::serialize_transcript(t));
    return 0;
}
