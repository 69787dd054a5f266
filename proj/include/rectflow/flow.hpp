#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rectflow/coupling.hpp"
#include "rectflow/net.hpp"
#include "rectflow/rng.hpp"

namespace rectflow {

enum class StageRole { continuous, one_step };

const char* to_string(StageRole role);
StageRole stage_role_from_string(const std::string& s);

struct StageProvenance {
    std::string stage_id;      // "v1", "v2", "v2+distill", ...
    std::string config_hash;   // hex fingerprint of the experiment config
    std::uint64_t seed = 0;
    long train_steps = 0;
    int teacher_k = 0;         // distilled stages record their teacher's k
    std::string note;
};

// A named model checkpoint: raw weights for training, EMA shadow for
// inference, the reflow index k, and whether it is a continuous flow or a
// distilled one-step model.
struct FlowStage {
    MlpVelocityNet net;
    ParamStore ema;
    int k = 1;
    StageRole role = StageRole::continuous;
    StageProvenance prov;

    bool is_one_step() const { return role == StageRole::one_step; }

    // Inference velocity on the EMA weights. Distilled stages pin t = 0 (the
    // time-embedding pathway is retained so teacher weights load unchanged,
    // but the input is ignored).
    void velocity(std::span<const double> x, double t, int condition,
                  std::span<double> out) const;
    std::vector<double> velocity(std::span<const double> x, double t, int condition) const;

    // Copies the EMA weights into the raw weights of a fresh stage (student
    // initialization).
    FlowStage clone_for_training() const;

    // Fingerprint of the inference (EMA) weights; pairs record it so lineage
    // can be verified.
    std::string weights_hash() const;
};

// Creates a stage whose velocity field is the constant vector u, exactly
// (zero hidden->output weights, output bias = u).
FlowStage make_constant_stage(const std::vector<double>& u, int vocab_size = 2);

struct Trajectory {
    int steps = 0;         // N
    int state_dim = 0;
    std::vector<double> states;  // (N+1) × d
    int condition = 0;
    double alpha = 1.0;

    double time_at(int i) const { return static_cast<double>(i) / steps; }
    std::span<const double> state(int i) const {
        return {states.data() + static_cast<std::size_t>(i) * state_dim,
                static_cast<std::size_t>(state_dim)};
    }
    std::span<const double> final_state() const { return state(steps); }
};

// x_t = (1-t) x0 + t x1 and its time derivative x1 - x0.
void interpolate(std::span<const double> x0, std::span<const double> x1, double t,
                 std::span<double> xt, std::span<double> dxdt);

// Classifier-free guidance: alpha*v(x,t|c) + (1-alpha)*v(x,t|NULL).
// alpha == 1 evaluates the conditional branch only and returns it exactly.
void guided_velocity(const FlowStage& stage, std::span<const double> x, double t,
                     int condition, double alpha, std::span<double> out);
std::vector<double> guided_velocity(const FlowStage& stage, std::span<const double> x,
                                    double t, int condition, double alpha);

// Arbitrary velocity field; shared by the stage-backed simulator, the
// metrics module, and analytic-field tests.
using VelocityFn = std::function<void(std::span<const double> x, double t,
                                      std::span<double> out)>;

// Called after each Euler step with the velocity just used and the state it
// produced. step runs 0..N-1.
using StepObserver = std::function<void(int step, double t, std::span<const double> state,
                                        std::span<const double> velocity,
                                        std::span<const double> next_state)>;

// Forward Euler with step size 1/N on times {i/N}. Throws SimulationError
// with the step index if a non-finite state appears.
Trajectory euler_simulate_field(const VelocityFn& field, std::span<const double> z0,
                                int steps, const StepObserver& observer = nullptr);

// Simulates the stage's guided EMA velocity field. Simulations of distinct
// z0 on a frozen stage are safe to run concurrently.
Trajectory euler_simulate(const FlowStage& stage, std::span<const double> z0, int condition,
                          int steps, double alpha, const StepObserver& observer = nullptr);

// Rectified-flow objective on a batch: one uniform time sample per pair,
// mean_i ||(x1 - x0) - v(x_t, t | c)||^2. The _grad variant also fills the
// parameter gradient (aligned with the net's layout).
double flow_loss(const MlpVelocityNet& net, const PairBatch& batch, Rng& rng);
double flow_loss_grad(const MlpVelocityNet& net, const PairBatch& batch, Rng& rng,
                      std::vector<double>& grads);

}  // namespace rectflow
