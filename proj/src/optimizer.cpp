#include "rectflow/optimizer.hpp"

#include <cmath>
#include <string>

namespace rectflow {

Optimizer::Optimizer(const ParamStore& params, AdamWConfig cfg) : cfg_(cfg) {
    if (cfg_.ema_ratio < 0.0 || cfg_.ema_ratio >= 1.0) {
        throw InputError("optimizer: EMA ratio must lie in [0, 1)");
    }
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
    ema_ = params.values();
}

void Optimizer::adamw_step(ParamStore& params, const std::vector<double>& grads) {
    if (grads.size() != params.size()) {
        throw InputError("optimizer: gradient size mismatch");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i])) {
            throw TrainingError("optimizer: non-finite gradient at parameter index " +
                                    std::to_string(i),
                                static_cast<std::ptrdiff_t>(i));
        }
    }

    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    double* p = params.data();
    for (std::size_t i = 0; i < grads.size(); ++i) {
        const double g = grads[i];
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        p[i] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * p[i]);
    }
    params.check_finite("adamw_step");
}

void Optimizer::ema_update(const ParamStore& params) {
    const double r = cfg_.ema_ratio;
    const double* p = params.data();
    for (std::size_t i = 0; i < ema_.size(); ++i) {
        ema_[i] = r * ema_[i] + (1.0 - r) * p[i];
    }
}

}  // namespace rectflow
