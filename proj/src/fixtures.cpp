#include "vinf/fixtures.hpp"

#include "vinf/nn.hpp"

namespace vinf::fixtures {

Architecture small_arch() { return Architecture::dense({2, 2, 2}, Activation::Sigmoid, Activation::Identity); }

Model f1() { return gen_random_model(1, small_arch()); }
Model f2() { return gen_random_model(2, small_arch()); }

Architecture iris_arch() { return Architecture::dense({4, 64, 32, 3}, Activation::ReLU, Activation::Identity); }

Model train_iris(const data::LabeledData& scaled, std::uint64_t seed, double* accuracy) {
    auto net = nn::DenseNet::from_model(gen_random_model(seed, iris_arch()));
    std::vector<nn::Vec> xs;
    for (const auto& x : scaled.xs) {
        nn::Vec v(static_cast<Eigen::Index>(x.size()));
        for (std::size_t i = 0; i < x.size(); ++i) v(static_cast<Eigen::Index>(i)) = x[i];
        xs.push_back(std::move(v));
    }
    double acc = nn::train_classifier(net, xs, scaled.labels, {100, 0.01});
    if (accuracy) *accuracy = acc;
    return net.to_model();
}

Architecture toy_arch() { return Architecture::dense({8, 16, 8, 4}, Activation::Sigmoid, Activation::Identity); }

Model toy() { return gen_random_model(11, toy_arch()); }

proto::PublicParams golden_params() {
    proto::ProtocolConfig c = proto::ProtocolConfig::strict();
    c.num_paths = 2;
    return proto::gen_params(128, small_arch(), c);
}

std::vector<float> golden_query() { return {0.25f, -0.5f}; }

}  // namespace vinf::fixtures
