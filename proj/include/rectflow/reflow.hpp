#pragma once

#include <functional>

#include "rectflow/datagen.hpp"
#include "rectflow/flow.hpp"
#include "rectflow/pairs.hpp"
#include "rectflow/trainer.hpp"

namespace rectflow {

struct PairGenSettings {
    int count = 1000;
    int steps = 25;        // Euler steps per pair
    double alpha = 1.0;    // guidance scale of the generating stage
    std::uint64_t seed = 0;
    int threads = 1;
    std::string config_hash;  // recorded in the dataset metadata
};

// Couplings (x0 ~ N(0,I), x1 = Euler endpoint of the stage's guided field).
// Each pair index gets its own derived RNG stream, so the dataset is a pure
// function of (stage weights, seed, settings) regardless of worker count.
PairDataset generate_pairs(const FlowStage& stage, const ConditionDist& conditions,
                           const PairGenSettings& settings);

// One reflow iteration: student is initialized from the teacher's weights and
// trained with the rectified-flow objective on the teacher's deterministic
// coupling. Returns the stage with k incremented.
FlowStage reflow_step(const FlowStage& teacher, const PairDataset& pairs,
                      const TrainSettings& settings, std::vector<LossLogRow>* log);

struct ReflowChainHooks {
    // Called after each stage with the new stage and the pairs it was trained
    // on (checkpoint/dataset persistence).
    std::function<void(const FlowStage&, const PairDataset&)> on_stage;
};

// Runs reflow iterations until k_max, generating fresh pairs from each
// predecessor. The learning rate decays by lr_decay_per_stage for every
// stage past v2 (v3 trains slower than v2, and so on). Stage failures are
// rethrown with the stage index attached.
std::vector<FlowStage> run_reflow_chain(const FlowStage& base, int k_max,
                                        const PairGenSettings& pair_settings,
                                        const TrainSettings& train_settings,
                                        double lr_decay_per_stage,
                                        const ConditionDist& conditions,
                                        const ReflowChainHooks& hooks = {});

}  // namespace rectflow
