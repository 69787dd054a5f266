#pragma once

#include <cstdint>
#include <vector>

#include "rectflow/param_store.hpp"

namespace rectflow {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    double ema_ratio = 0.999;  // shadow <- ratio*shadow + (1-ratio)*params
};

// AdamW with decoupled weight decay and bias-corrected moments, plus an
// exponential-moving-average shadow of the parameters. The shadow is
// initialized to the parameters at step 0 and is the weight set used for
// inference.
class Optimizer {
public:
    Optimizer(const ParamStore& params, AdamWConfig cfg);

    // One AdamW update. Throws TrainingError with the offending index on a
    // non-finite gradient, and verifies parameters stay finite afterwards.
    void adamw_step(ParamStore& params, const std::vector<double>& grads);

    void ema_update(const ParamStore& params);

    long step_count() const { return step_; }
    const std::vector<double>& ema() const { return ema_; }
    const AdamWConfig& config() const { return cfg_; }
    AdamWConfig& config() { return cfg_; }

private:
    AdamWConfig cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::vector<double> ema_;
    long step_ = 0;
};

}  // namespace rectflow
