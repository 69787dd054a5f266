#include "rectflow/trainer.hpp"

#include <fstream>

#include "rectflow/net.hpp"
#include "rectflow/strfmt.hpp"

namespace rectflow {

void train_net(MlpVelocityNet& net, Optimizer& opt, const BatchFn& batch_fn,
               const LossGradFn& loss_fn, const TrainSettings& settings,
               const std::string& tag, std::vector<LossLogRow>* log) {
    if (settings.steps < 1) throw InputError("train: steps must be >= 1");
    if (settings.batch < 1) throw InputError("train: batch must be >= 1");

    Rng rng(settings.seed);
    PairBatch batch;
    std::vector<double> grads;
    for (long step = 1; step <= settings.steps; ++step) {
        batch_fn(step, rng, batch);
        const double loss = loss_fn(net, batch, rng, grads);
        opt.adamw_step(net.params(), grads);
        opt.ema_update(net.params());
        if (log && (step == 1 || step % settings.log_every == 0 || step == settings.steps)) {
            log->push_back({settings.log_step_offset + step, loss, tag});
        }
    }
}

BatchFn dataset_batch_fn(const PairDataset& dataset, int batch, double null_dropout_p) {
    if (dataset.meta.count < 1) throw InputError("train: pair dataset is empty");
    if (null_dropout_p < 0.0 || null_dropout_p >= 1.0) {
        throw InputError("train: null_dropout_p must lie in [0, 1)");
    }
    return [&dataset, batch, null_dropout_p](long, Rng& rng, PairBatch& out) {
        std::vector<int> idx(static_cast<std::size_t>(batch));
        for (int i = 0; i < batch; ++i) {
            idx[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(dataset.meta.count)));
        }
        out = dataset.gather(idx);
        if (null_dropout_p > 0.0) {
            for (int i = 0; i < batch; ++i) {
                if (rng.uniform() < null_dropout_p) out.conditions[i] = kNullCondition;
            }
        }
    };
}

void write_loss_log_csv(const std::string& path, const std::vector<LossLogRow>& rows) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("loss log: cannot open " + path);
    os << "step,loss,tag\n";
    for (const auto& row : rows) {
        os << row.step << ',' << fmt_g17(row.loss) << ',' << row.tag << '\n';
    }
    if (!os) throw IoError("loss log: write failed for " + path);
}

}  // namespace rectflow
