#include "vinf/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "vinf/error.hpp"

namespace vinf::data {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

}  // namespace

LabeledData load_labeled_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    LabeledData d;
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": missing header", 0);
    d.columns = split(line);
    if (d.columns.size() < 2) throw ParseError(path + ": need at least one feature and a label", 0);
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != d.columns.size())
            throw ParseError(path + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells", row);
        std::vector<float> x;
        for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
            try {
                x.push_back(std::stof(cells[i]));
            } catch (const std::exception&) {
                throw ParseError(path + ": row " + std::to_string(row) + " is not numeric", row);
            }
        }
        int label = 0;
        const auto& lc = cells.back();
        auto [p, ec] = std::from_chars(lc.data(), lc.data() + lc.size(), label);
        if (ec != std::errc{} || p != lc.data() + lc.size())
            throw ParseError(path + ": row " + std::to_string(row) + " has a non-integer label", row);
        d.xs.push_back(std::move(x));
        d.labels.push_back(label);
    }
    return d;
}

void save_labeled_csv(const std::string& path, const LabeledData& d) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (std::size_t i = 0; i < d.columns.size(); ++i) out << (i ? "," : "") << d.columns[i];
    out << '\n';
    out.precision(9);
    for (std::size_t r = 0; r < d.xs.size(); ++r) {
        for (float v : d.xs[r]) out << v << ',';
        out << d.labels[r] << '\n';
    }
}

void minmax_scale(LabeledData& d) {
    if (d.xs.empty()) return;
    const std::size_t n = d.xs.front().size();
    for (std::size_t c = 0; c < n; ++c) {
        float lo = d.xs.front()[c], hi = lo;
        for (const auto& x : d.xs) {
            lo = std::min(lo, x[c]);
            hi = std::max(hi, x[c]);
        }
        for (auto& x : d.xs) x[c] = hi > lo ? (x[c] - lo) / (hi - lo) : 0.0f;
    }
}

}  // namespace vinf::data
