#pragma once

#include <span>
#include <vector>

#include "rectflow/param_store.hpp"
#include "rectflow/rng.hpp"

namespace rectflow {

// Condition index 0 is the reserved NULL (unconditional) token.
inline constexpr int kNullCondition = 0;

struct NetConfig {
    int state_dim = 2;               // d: sample space dimension
    std::vector<int> hidden = {64, 64};
    int vocab_size = 4;              // condition labels, including NULL at 0
    int cond_emb_dim = 8;
    int time_emb_freqs = 8;          // sinusoidal features: 2 per frequency

    int time_emb_dim() const { return 2 * time_emb_freqs; }
    int input_dim() const { return state_dim + time_emb_dim() + cond_emb_dim; }
    int layer_count() const { return static_cast<int>(hidden.size()) + 1; }

    bool operator==(const NetConfig&) const = default;
};

// Per-batch forward record consumed by backward_batch. A default-constructed
// tape has no recorded pass.
struct ForwardTape {
    int batch = 0;
    bool recorded = false;
    std::vector<double> inputs;      // batch × input_dim
    std::vector<double> pre;         // batch × total_hidden (pre-activations)
    std::vector<double> sig;         // batch × total_hidden (sigmoid at pre)
    std::vector<double> act;         // batch × total_hidden (silu outputs)
    std::vector<int> conditions;     // batch

    void clear() {
        batch = 0;
        recorded = false;
    }
};

// MLP velocity field v(x, t | c): the state vector is concatenated with
// sinusoidal time features and a learned condition embedding, then passed
// through silu-activated hidden layers and a linear output layer of width d.
// Evaluation is a pure function of (parameters, x, t, c); frozen nets are
// safe to evaluate concurrently.
class MlpVelocityNet {
public:
    MlpVelocityNet() = default;
    explicit MlpVelocityNet(NetConfig cfg);

    const NetConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // Small-variance random hidden layers; the final layer is zeroed so the
    // initial velocity field is identically zero (benign start for flow
    // training). Gradient-check harnesses pass zero_final_layer = false.
    void init(Rng& rng, bool zero_final_layer = true);

    std::vector<double> forward(std::span<const double> x, double t, int condition) const;
    void forward_into(const ParamStore& params, std::span<const double> x, double t,
                      int condition, std::span<double> out) const;

    // Training path: records activations for a flat batch, then backpropagates
    // the loss gradient w.r.t. the outputs into a flat gradient array aligned
    // with the parameter layout. Gradients of parameters untouched by the
    // batch stay zero.
    void forward_batch(ForwardTape& tape, std::span<const double> xs,
                       std::span<const double> ts, std::span<const int> cs,
                       std::vector<double>& ys) const;
    void backward_batch(const ForwardTape& tape, std::span<const double> dys,
                        std::vector<double>& grads) const;

    std::size_t param_count() const { return params_.size(); }

    // Embeds this net's weights into a wider architecture. New hidden units
    // get small random input weights and zero output weights, so the widened
    // net computes exactly the same function at initialization.
    static MlpVelocityNet widen(const MlpVelocityNet& src, const std::vector<int>& hidden,
                                Rng& rng);

private:
    void validate_input(double t, int condition) const;
    int total_hidden() const;

    NetConfig cfg_;
    ParamStore params_;
};

}  // namespace rectflow
