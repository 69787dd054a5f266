#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rectflow/errors.hpp"

namespace rectflow {

struct ParamSegment {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;  // 1 for bias vectors
    std::size_t offset = 0;

    std::size_t size() const { return rows * cols; }
};

// Flat parameter array plus the layout descriptor that carves it into weight
// matrices and bias vectors. Segment offsets are derived; their sizes sum
// exactly to the flat array length.
class ParamStore {
public:
    ParamStore() = default;
    explicit ParamStore(std::vector<ParamSegment> layout);

    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    const std::vector<ParamSegment>& layout() const { return layout_; }
    std::size_t segment_count() const { return layout_.size(); }
    const ParamSegment& segment_info(std::size_t i) const { return layout_.at(i); }

    double* segment(std::size_t i) { return values_.data() + layout_.at(i).offset; }
    const double* segment(std::size_t i) const { return values_.data() + layout_.at(i).offset; }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool all_finite() const;
    // Throws TrainingError naming the first non-finite entry.
    void check_finite(const char* context) const;

    // Rebuilds a store from an explicit layout and flat values (checkpoint
    // load path); sizes must match exactly.
    static ParamStore from_parts(std::vector<ParamSegment> layout, std::vector<double> values);

private:
    std::vector<ParamSegment> layout_;
    std::vector<double> values_;
};

}  // namespace rectflow
