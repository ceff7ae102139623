#pragma once

#include <cstdint>

#include "vinf/data.hpp"
#include "vinf/model.hpp"
#include "vinf/protocol.hpp"

namespace vinf::fixtures {

/// 2-2-2, sigmoid hidden layer, identity output, with bias.
Architecture small_arch();
Model f1();  // small_arch, seed 1
Model f2();  // small_arch, seed 2

/// 4-64-32-3 ReLU classifier for min-max scaled Iris features.
Architecture iris_arch();
/// Trains from gen_random_model(seed) with full-batch Adam.
Model train_iris(const data::LabeledData& scaled, std::uint64_t seed, double* accuracy = nullptr);
inline constexpr std::uint64_t kIrisSeed = 7;
inline constexpr std::uint64_t kIrisSeedOther = 8;

/// 8-16-8-4 sigmoid net used by the swap attack.
Architecture toy_arch();
Model toy();

/// Session pinned by the golden transcript: F1, two strict paths.
proto::PublicParams golden_params();
std::vector<float> golden_query();
inline constexpr std::uint64_t kGoldenChallengeSeed = 7;

}  // namespace vinf::fixtures
