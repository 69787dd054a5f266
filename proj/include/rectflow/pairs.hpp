#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rectflow/coupling.hpp"
#include "rectflow/rng.hpp"

namespace rectflow {

struct PairDatasetMeta {
    std::string stage_id;       // generating stage
    int stage_k = 0;
    std::string stage_role;     // "continuous" (one-step stages cannot generate)
    std::string weights_hash;   // EMA weights of the generating stage
    std::string config_hash;
    int steps = 0;              // Euler steps used per pair
    double alpha = 1.0;         // guidance scale used
    std::uint64_t seed = 0;
    int count = 0;
    int state_dim = 0;
    int vocab_size = 0;
};

// Coupling dataset (x0, x1 = T_stage(x0 | c)) generated once per stage and
// stored; all pairs share the generation metadata.
struct PairDataset {
    PairDatasetMeta meta;
    std::vector<double> x0;       // count × d
    std::vector<double> x1;       // count × d
    std::vector<int> conditions;  // count

    std::span<const double> x0_at(int i) const {
        return {x0.data() + static_cast<std::size_t>(i) * meta.state_dim,
                static_cast<std::size_t>(meta.state_dim)};
    }
    std::span<const double> x1_at(int i) const {
        return {x1.data() + static_cast<std::size_t>(i) * meta.state_dim,
                static_cast<std::size_t>(meta.state_dim)};
    }

    // Copies rows `indices` into a flat training batch.
    PairBatch gather(std::span<const int> indices) const;
};

// Binary pair file: "RFPD" magic, u32 version, u64 JSON length, metadata
// JSON, count x (d doubles x0 | d doubles x1) little-endian, then count u32
// condition indices.
void save_pairs(const std::string& path, const PairDataset& dataset);
PairDataset load_pairs(const std::string& path);
PairDatasetMeta load_pairs_meta(const std::string& path);
std::string pairs_meta_to_json(const PairDatasetMeta& meta);

}  // namespace rectflow
