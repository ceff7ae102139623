#pragma once

#include <string>
#include <vector>

namespace vinf::data {

/// Numeric CSV with a header row; the last column is an integer label.
struct LabeledData {
    std::vector<std::string> columns;
    std::vector<std::vector<float>> xs;
    std::vector<int> labels;
};

LabeledData load_labeled_csv(const std::string& path);
void save_labeled_csv(const std::string& path, const LabeledData& d);

/// Rescales every feature column to [0, 1] using its observed range.
void minmax_scale(LabeledData& d);

}  // namespace vinf::data
