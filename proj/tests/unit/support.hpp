#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vinf/bytes.hpp"
#include "vinf/model.hpp"

namespace testing {

inline const nlohmann::json& oracles() {
    static const nlohmann::json j = [] {
        std::ifstream in(VINF_ORACLES);
        std::stringstream ss;
        ss << in.rdbuf();
        return nlohmann::json::parse(ss.str());
    }();
    return j;
}

inline std::string fixture(const std::string& name) { return std::string(VINF_FIXTURES) + "/" + name; }

inline std::vector<vinf::Bytes> hex_values(const nlohmann::json& arr) {
    std::vector<vinf::Bytes> out;
    for (const auto& v : arr) out.push_back(vinf::from_hex(v.get<std::string>()));
    return out;
}

inline std::vector<float> floats_from_bits(const nlohmann::json& arr) {
    std::vector<float> out;
    for (const auto& v : arr) out.push_back(std::bit_cast<float>(v.get<std::uint32_t>()));
    return out;
}

inline std::uint32_t bits(float f) { return std::bit_cast<std::uint32_t>(f); }

}  // namespace testing
