#pragma once

#include <span>
#include <vector>

#include "rectflow/errors.hpp"

namespace rectflow {

// One training sample drawn from a coupling: noise endpoint, data endpoint,
// and the condition it was generated under.
struct CouplingPair {
    std::vector<double> x0;
    std::vector<double> x1;
    int condition = 0;
};

// Flat batch of coupling pairs; the layout training loops actually consume.
struct PairBatch {
    int state_dim = 0;
    int count = 0;
    std::vector<double> x0;        // count × d
    std::vector<double> x1;        // count × d
    std::vector<int> conditions;   // count

    void resize(int d, int n) {
        state_dim = d;
        count = n;
        x0.resize(static_cast<std::size_t>(n) * d);
        x1.resize(static_cast<std::size_t>(n) * d);
        conditions.resize(static_cast<std::size_t>(n));
    }

    std::span<const double> x0_at(int i) const {
        return {x0.data() + static_cast<std::size_t>(i) * state_dim,
                static_cast<std::size_t>(state_dim)};
    }
    std::span<const double> x1_at(int i) const {
        return {x1.data() + static_cast<std::size_t>(i) * state_dim,
                static_cast<std::size_t>(state_dim)};
    }
    std::span<double> x0_at(int i) {
        return {x0.data() + static_cast<std::size_t>(i) * state_dim,
                static_cast<std::size_t>(state_dim)};
    }
    std::span<double> x1_at(int i) {
        return {x1.data() + static_cast<std::size_t>(i) * state_dim,
                static_cast<std::size_t>(state_dim)};
    }
};

}  // namespace rectflow
