#include "rectflow/distill.hpp"

#include <cmath>

namespace rectflow {

SimilarityLoss SimilarityLoss::patch_loss(int h, int w, std::vector<int> sizes) {
    SimilarityLoss loss;
    loss.kind = SimilarityKind::multiscale_patch_l2;
    loss.grid_h = h;
    loss.grid_w = w;
    loss.patch_sizes = std::move(sizes);
    return loss;
}

void SimilarityLoss::validate(int state_dim) const {
    if (kind == SimilarityKind::l2) return;
    if (grid_h < 1 || grid_w < 1 || grid_h * grid_w != state_dim) {
        throw InputError("similarity: grid " + std::to_string(grid_h) + "x" +
                         std::to_string(grid_w) + " does not match dimension " +
                         std::to_string(state_dim));
    }
    if (patch_sizes.empty()) throw InputError("similarity: no patch sizes");
    bool has_unit = false;
    for (int s : patch_sizes) {
        if (s < 1 || grid_h % s != 0 || grid_w % s != 0) {
            throw InputError("similarity: patch size " + std::to_string(s) +
                             " does not divide the grid");
        }
        has_unit = has_unit || s == 1;
    }
    if (!has_unit) {
        throw InputError("similarity: patch size 1 required so the loss separates points");
    }
}

namespace {

double patch_l2(const SimilarityLoss& loss, std::span<const double> a,
                std::span<const double> b, std::span<double>* dldb) {
    const int h = loss.grid_h;
    const int w = loss.grid_w;
    double total = 0.0;
    const double scale_norm = 1.0 / static_cast<double>(loss.patch_sizes.size());
    for (int s : loss.patch_sizes) {
        const int ph = h / s;
        const int pw = w / s;
        const double patch_norm = 1.0 / static_cast<double>(ph * pw);
        const double inv_area = 1.0 / static_cast<double>(s * s);
        for (int pi = 0; pi < ph; ++pi) {
            for (int pj = 0; pj < pw; ++pj) {
                double ma = 0.0;
                double mb = 0.0;
                for (int r = pi * s; r < (pi + 1) * s; ++r) {
                    for (int c = pj * s; c < (pj + 1) * s; ++c) {
                        const std::size_t idx = static_cast<std::size_t>(r) * w + c;
                        ma += a[idx];
                        mb += b[idx];
                    }
                }
                ma *= inv_area;
                mb *= inv_area;
                const double diff = ma - mb;
                total += scale_norm * patch_norm * diff * diff;
                if (dldb) {
                    const double g = scale_norm * patch_norm * (-2.0) * diff * inv_area;
                    for (int r = pi * s; r < (pi + 1) * s; ++r) {
                        for (int c = pj * s; c < (pj + 1) * s; ++c) {
                            (*dldb)[static_cast<std::size_t>(r) * w + c] += g;
                        }
                    }
                }
            }
        }
    }
    return total;
}

}  // namespace

double SimilarityLoss::value(std::span<const double> a, std::span<const double> b) const {
    if (a.size() != b.size()) throw InputError("similarity: dimension mismatch");
    if (kind == SimilarityKind::l2) {
        double total = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            total += d * d;
        }
        return total;
    }
    validate(static_cast<int>(a.size()));
    return patch_l2(*this, a, b, nullptr);
}

double SimilarityLoss::value_grad_b(std::span<const double> a, std::span<const double> b,
                                    std::span<double> dldb) const {
    if (a.size() != b.size() || dldb.size() != b.size()) {
        throw InputError("similarity: dimension mismatch");
    }
    for (auto& g : dldb) g = 0.0;
    if (kind == SimilarityKind::l2) {
        double total = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            total += d * d;
            dldb[i] = -2.0 * d;
        }
        return total;
    }
    validate(static_cast<int>(a.size()));
    return patch_l2(*this, a, b, &dldb);
}

namespace {

double distill_loss_impl(const MlpVelocityNet& student, const PairBatch& batch,
                         const SimilarityLoss& loss, std::vector<double>* grads) {
    if (batch.count == 0) throw InputError("distill_loss: empty batch");
    if (batch.state_dim != student.config().state_dim) {
        throw InputError("distill_loss: state dimension mismatch");
    }
    const int d = batch.state_dim;
    const int n = batch.count;
    loss.validate(d);

    std::vector<double> ts(static_cast<std::size_t>(n), 0.0);  // time pinned to 0
    std::vector<double> ys;
    std::vector<double> onestep(static_cast<std::size_t>(d));
    std::vector<double> dldb(static_cast<std::size_t>(d));
    double total = 0.0;

    if (grads) {
        ForwardTape tape;
        student.forward_batch(tape, batch.x0, ts, batch.conditions, ys);
        std::vector<double> dys(static_cast<std::size_t>(n) * d);
        for (int i = 0; i < n; ++i) {
            const double* x0 = batch.x0.data() + static_cast<std::size_t>(i) * d;
            const double* y = ys.data() + static_cast<std::size_t>(i) * d;
            for (int j = 0; j < d; ++j) onestep[j] = x0[j] + y[j];
            total += loss.value_grad_b(batch.x1_at(i), onestep, dldb);
            double* dy = dys.data() + static_cast<std::size_t>(i) * d;
            // d(one-step)/d(v) = identity, mean over the batch.
            for (int j = 0; j < d; ++j) dy[j] = dldb[j] / n;
        }
        student.backward_batch(tape, dys, *grads);
    } else {
        std::vector<double> y(static_cast<std::size_t>(d));
        for (int i = 0; i < n; ++i) {
            student.forward_into(student.params(), batch.x0_at(i), 0.0, batch.conditions[i],
                                 y);
            const double* x0 = batch.x0.data() + static_cast<std::size_t>(i) * d;
            for (int j = 0; j < d; ++j) onestep[j] = x0[j] + y[j];
            total += loss.value(batch.x1_at(i), onestep);
        }
    }
    return total / n;
}

}  // namespace

double distill_loss(const MlpVelocityNet& student, const PairBatch& batch,
                    const SimilarityLoss& loss) {
    return distill_loss_impl(student, batch, loss, nullptr);
}

double distill_loss_grad(const MlpVelocityNet& student, const PairBatch& batch,
                         const SimilarityLoss& loss, std::vector<double>& grads) {
    return distill_loss_impl(student, batch, loss, &grads);
}

FlowStage distill(const FlowStage& teacher, const PairDataset& pairs,
                  std::span<const DistillScheduleSegment> schedule,
                  const TrainSettings& settings, std::vector<LossLogRow>* log,
                  const std::vector<int>& student_hidden) {
    if (teacher.is_one_step()) {
        throw UsageError("distill: teacher must be a continuous flow");
    }
    if (pairs.meta.count < 1) throw InputError("distill: pair dataset is empty");
    if (pairs.meta.weights_hash != teacher.weights_hash()) {
        throw LineageError("distill: pairs were generated by stage '" + pairs.meta.stage_id +
                           "' (weights " + pairs.meta.weights_hash +
                           "), not by the given teacher (" + teacher.weights_hash() + ")");
    }
    if (schedule.empty()) throw InputError("distill: empty loss schedule");
    double frac_sum = 0.0;
    for (const auto& seg : schedule) {
        if (seg.fraction <= 0.0) throw InputError("distill: schedule fractions must be > 0");
        seg.loss.validate(teacher.net.config().state_dim);
        frac_sum += seg.fraction;
    }
    if (std::abs(frac_sum - 1.0) > 1e-9) {
        throw InputError("distill: schedule fractions must sum to 1");
    }

    FlowStage student = teacher.clone_for_training();
    if (!student_hidden.empty() && student_hidden != teacher.net.config().hidden) {
        Rng rng(mix_seed(settings.seed, 0x77));
        student.net = MlpVelocityNet::widen(student.net, student_hidden, rng);
    }
    student.role = StageRole::one_step;
    student.k = teacher.k;
    student.prov.stage_id = teacher.prov.stage_id + "+distill";
    student.prov.seed = settings.seed;
    student.prov.train_steps = settings.steps;
    student.prov.teacher_k = teacher.k;

    Optimizer opt(student.net.params(), settings.opt);
    long used = 0;
    for (std::size_t si = 0; si < schedule.size(); ++si) {
        TrainSettings seg_settings = settings;
        seg_settings.seed = mix_seed(settings.seed, si + 1);
        seg_settings.steps = si + 1 == schedule.size()
                                 ? settings.steps - used
                                 : static_cast<long>(
                                       std::llround(schedule[si].fraction * settings.steps));
        if (seg_settings.steps < 1) continue;
        seg_settings.log_step_offset = used;
        used += seg_settings.steps;
        const SimilarityLoss& loss = schedule[si].loss;
        train_net(
            student.net, opt,
            dataset_batch_fn(pairs, settings.batch, settings.null_dropout_p),
            [&loss](const MlpVelocityNet& net, const PairBatch& batch, Rng&,
                    std::vector<double>& grads) {
                return distill_loss_grad(net, batch, loss, grads);
            },
            seg_settings, loss.tag(), log);
    }

    student.ema = ParamStore::from_parts(student.net.params().layout(), opt.ema());
    return student;
}

std::vector<double> one_step_generate(const FlowStage& stage, std::span<const double> z0,
                                      int condition) {
    if (!stage.is_one_step()) {
        throw UsageError("one_step_generate: stage '" + stage.prov.stage_id +
                         "' is a continuous flow; use euler_simulate");
    }
    std::vector<double> v = stage.velocity(z0, 0.0, condition);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = z0[i] + v[i];
    return v;
}

}  // namespace rectflow
