#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rectflow/flow.hpp"
#include "rectflow/optimizer.hpp"
#include "rectflow/pairs.hpp"

namespace rectflow {

struct TrainSettings {
    long steps = 1000;
    int batch = 256;
    AdamWConfig opt;
    double null_dropout_p = 0.0;
    std::uint64_t seed = 0;
    long log_every = 100;
    long log_step_offset = 0;  // schedule segments keep a global step count
};

struct LossLogRow {
    long step = 0;
    double loss = 0.0;
    std::string tag;
};

// Produces the next training batch. Called once per step with the trainer's
// RNG stream.
using BatchFn = std::function<void(long step, Rng&, PairBatch&)>;

// Computes the batch loss and fills the parameter gradient.
using LossGradFn = std::function<double(const MlpVelocityNet&, const PairBatch&, Rng&,
                                        std::vector<double>&)>;

// Single-threaded deterministic SGD loop: batch, loss+grad, AdamW step, EMA
// update. Loss rows are appended at step 1, every log_every steps, and the
// final step.
void train_net(MlpVelocityNet& net, Optimizer& opt, const BatchFn& batch_fn,
               const LossGradFn& loss_fn, const TrainSettings& settings,
               const std::string& tag, std::vector<LossLogRow>* log);

// Batch source drawing rows uniformly (with replacement) from a stored pair
// dataset, replacing the stored condition with NULL at the given rate.
BatchFn dataset_batch_fn(const PairDataset& dataset, int batch, double null_dropout_p);

void write_loss_log_csv(const std::string& path, const std::vector<LossLogRow>& rows);

}  // namespace rectflow
