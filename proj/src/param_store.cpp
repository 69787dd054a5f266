#include "rectflow/param_store.hpp"

#include <cmath>

namespace rectflow {

ParamStore::ParamStore(std::vector<ParamSegment> layout) : layout_(std::move(layout)) {
    std::size_t total = 0;
    for (auto& seg : layout_) {
        seg.offset = total;
        total += seg.size();
    }
    values_.assign(total, 0.0);
}

bool ParamStore::all_finite() const {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void ParamStore::check_finite(const char* context) const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw TrainingError(std::string(context) + ": non-finite parameter at index " +
                                    std::to_string(i),
                                static_cast<std::ptrdiff_t>(i));
        }
    }
}

ParamStore ParamStore::from_parts(std::vector<ParamSegment> layout, std::vector<double> values) {
    ParamStore store(std::move(layout));
    if (store.size() != values.size()) {
        throw InputError("parameter layout (" + std::to_string(store.size()) +
                         ") does not match value count (" + std::to_string(values.size()) + ")");
    }
    store.values_ = std::move(values);
    return store;
}

}  // namespace rectflow
