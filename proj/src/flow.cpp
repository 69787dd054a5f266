#include "rectflow/flow.hpp"

#include <cmath>

#include "rectflow/hash.hpp"

namespace rectflow {

const char* to_string(StageRole role) {
    return role == StageRole::continuous ? "continuous" : "one-step";
}

StageRole stage_role_from_string(const std::string& s) {
    if (s == "continuous") return StageRole::continuous;
    if (s == "one-step") return StageRole::one_step;
    throw InputError("unknown stage role '" + s + "'");
}

void FlowStage::velocity(std::span<const double> x, double t, int condition,
                         std::span<double> out) const {
    net.forward_into(ema, x, is_one_step() ? 0.0 : t, condition, out);
}

std::vector<double> FlowStage::velocity(std::span<const double> x, double t,
                                        int condition) const {
    std::vector<double> out(static_cast<std::size_t>(net.config().state_dim));
    velocity(x, t, condition, out);
    return out;
}

FlowStage FlowStage::clone_for_training() const {
    FlowStage s;
    s.net = net;
    s.net.params().values() = ema.values();
    s.ema = ema;
    s.k = k;
    s.role = role;
    s.prov = prov;
    return s;
}

std::string FlowStage::weights_hash() const {
    return hex16(fnv1a64(ema.data(), ema.size() * sizeof(double)));
}

FlowStage make_constant_stage(const std::vector<double>& u, int vocab_size) {
    NetConfig cfg;
    cfg.state_dim = static_cast<int>(u.size());
    cfg.hidden = {4};
    cfg.vocab_size = vocab_size;
    cfg.cond_emb_dim = 2;
    cfg.time_emb_freqs = 2;
    FlowStage stage;
    stage.net = MlpVelocityNet(cfg);
    Rng rng(1);
    stage.net.init(rng, /*zero_final_layer=*/true);
    // Final layer weights are zero after init; the output bias sets the field.
    const std::size_t last_bias = stage.net.params().segment_count() - 1;
    double* b = stage.net.params().segment(last_bias);
    for (std::size_t i = 0; i < u.size(); ++i) b[i] = u[i];
    stage.ema = stage.net.params();
    stage.k = 1;
    stage.role = StageRole::continuous;
    stage.prov.stage_id = "constant";
    return stage;
}

void interpolate(std::span<const double> x0, std::span<const double> x1, double t,
                 std::span<double> xt, std::span<double> dxdt) {
    if (x0.size() != x1.size() || xt.size() != x0.size() || dxdt.size() != x0.size()) {
        throw InputError("interpolate: dimension mismatch");
    }
    const double a = 1.0 - t;
    for (std::size_t i = 0; i < x0.size(); ++i) {
        xt[i] = a * x0[i] + t * x1[i];
        dxdt[i] = x1[i] - x0[i];
    }
}

void guided_velocity(const FlowStage& stage, std::span<const double> x, double t,
                     int condition, double alpha, std::span<double> out) {
    if (alpha == 1.0) {
        stage.velocity(x, t, condition, out);
        return;
    }
    stage.velocity(x, t, condition, out);
    std::vector<double> vnull(out.size());
    stage.velocity(x, t, kNullCondition, vnull);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = alpha * out[i] + (1.0 - alpha) * vnull[i];
    }
}

std::vector<double> guided_velocity(const FlowStage& stage, std::span<const double> x,
                                    double t, int condition, double alpha) {
    std::vector<double> out(static_cast<std::size_t>(stage.net.config().state_dim));
    guided_velocity(stage, x, t, condition, alpha, out);
    return out;
}

Trajectory euler_simulate_field(const VelocityFn& field, std::span<const double> z0,
                                int steps, const StepObserver& observer) {
    if (steps < 1) throw InputError("euler: steps must be >= 1");
    const int d = static_cast<int>(z0.size());
    Trajectory traj;
    traj.steps = steps;
    traj.state_dim = d;
    traj.states.resize(static_cast<std::size_t>(steps + 1) * d);
    for (int i = 0; i < d; ++i) traj.states[i] = z0[i];

    std::vector<double> vel(static_cast<std::size_t>(d));
    const double h = 1.0 / steps;
    for (int s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        const double* cur = traj.states.data() + static_cast<std::size_t>(s) * d;
        double* nxt = traj.states.data() + static_cast<std::size_t>(s + 1) * d;
        field({cur, static_cast<std::size_t>(d)}, t, vel);
        for (int i = 0; i < d; ++i) {
            nxt[i] = cur[i] + h * vel[i];
            if (!std::isfinite(nxt[i])) {
                throw SimulationError("euler: non-finite state at step " + std::to_string(s),
                                      s);
            }
        }
        if (observer) {
            observer(s, t, {cur, static_cast<std::size_t>(d)}, vel,
                     {nxt, static_cast<std::size_t>(d)});
        }
    }
    return traj;
}

Trajectory euler_simulate(const FlowStage& stage, std::span<const double> z0, int condition,
                          int steps, double alpha, const StepObserver& observer) {
    if (alpha < 0.0) throw InputError("euler: guidance scale must be >= 0");
    if (static_cast<int>(z0.size()) != stage.net.config().state_dim) {
        throw InputError("euler: z0 dimension mismatch");
    }
    Trajectory traj = euler_simulate_field(
        [&](std::span<const double> x, double t, std::span<double> out) {
            guided_velocity(stage, x, t, condition, alpha, out);
        },
        z0, steps, observer);
    traj.condition = condition;
    traj.alpha = alpha;
    return traj;
}

namespace {

double flow_loss_impl(const MlpVelocityNet& net, const PairBatch& batch, Rng& rng,
                      std::vector<double>* grads) {
    if (batch.count == 0) throw InputError("flow_loss: empty batch");
    if (batch.state_dim != net.config().state_dim) {
        throw InputError("flow_loss: state dimension mismatch");
    }
    const int d = batch.state_dim;
    const int n = batch.count;

    // One Monte-Carlo time sample per pair.
    std::vector<double> ts(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ts[i] = rng.uniform();

    std::vector<double> xts(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i) {
        const double t = ts[i];
        const double* p0 = batch.x0.data() + static_cast<std::size_t>(i) * d;
        const double* p1 = batch.x1.data() + static_cast<std::size_t>(i) * d;
        double* xt = xts.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) xt[j] = (1.0 - t) * p0[j] + t * p1[j];
    }

    std::vector<double> ys;
    double loss = 0.0;
    if (grads) {
        ForwardTape tape;
        net.forward_batch(tape, xts, ts, batch.conditions, ys);
        std::vector<double> dys(static_cast<std::size_t>(n) * d);
        for (int i = 0; i < n; ++i) {
            const double* p0 = batch.x0.data() + static_cast<std::size_t>(i) * d;
            const double* p1 = batch.x1.data() + static_cast<std::size_t>(i) * d;
            const double* y = ys.data() + static_cast<std::size_t>(i) * d;
            double* dy = dys.data() + static_cast<std::size_t>(i) * d;
            for (int j = 0; j < d; ++j) {
                const double r = (p1[j] - p0[j]) - y[j];
                loss += r * r;
                dy[j] = -2.0 * r / n;
            }
        }
        net.backward_batch(tape, dys, *grads);
    } else {
        std::vector<double> y(static_cast<std::size_t>(d));
        for (int i = 0; i < n; ++i) {
            net.forward_into(net.params(),
                             {xts.data() + static_cast<std::size_t>(i) * d,
                              static_cast<std::size_t>(d)},
                             ts[i], batch.conditions[i], y);
            const double* p0 = batch.x0.data() + static_cast<std::size_t>(i) * d;
            const double* p1 = batch.x1.data() + static_cast<std::size_t>(i) * d;
            for (int j = 0; j < d; ++j) {
                const double r = (p1[j] - p0[j]) - y[j];
                loss += r * r;
            }
        }
    }
    return loss / n;
}

}  // namespace

double flow_loss(const MlpVelocityNet& net, const PairBatch& batch, Rng& rng) {
    return flow_loss_impl(net, batch, rng, nullptr);
}

double flow_loss_grad(const MlpVelocityNet& net, const PairBatch& batch, Rng& rng,
                      std::vector<double>& grads) {
    return flow_loss_impl(net, batch, rng, &grads);
}

}  // namespace rectflow
