#include "rectflow/reflow.hpp"

#include <cmath>

#include "rectflow/parallel.hpp"

namespace rectflow {

PairDataset generate_pairs(const FlowStage& stage, const ConditionDist& conditions,
                           const PairGenSettings& settings) {
    if (stage.is_one_step()) {
        throw UsageError("generate_pairs: requires a continuous flow stage");
    }
    if (settings.count < 1) throw InputError("generate_pairs: count must be >= 1");
    if (settings.steps < 1) throw InputError("generate_pairs: steps must be >= 1");
    if (settings.alpha < 0.0) throw InputError("generate_pairs: alpha must be >= 0");

    const int d = stage.net.config().state_dim;
    PairDataset ds;
    ds.meta.stage_id = stage.prov.stage_id;
    ds.meta.stage_k = stage.k;
    ds.meta.stage_role = to_string(stage.role);
    ds.meta.weights_hash = stage.weights_hash();
    ds.meta.config_hash = settings.config_hash;
    ds.meta.steps = settings.steps;
    ds.meta.alpha = settings.alpha;
    ds.meta.seed = settings.seed;
    ds.meta.count = settings.count;
    ds.meta.state_dim = d;
    ds.meta.vocab_size = stage.net.config().vocab_size;
    ds.x0.resize(static_cast<std::size_t>(settings.count) * d);
    ds.x1.resize(static_cast<std::size_t>(settings.count) * d);
    ds.conditions.resize(static_cast<std::size_t>(settings.count));

    parallel_for(static_cast<std::size_t>(settings.count), settings.threads,
                 [&](std::size_t begin, std::size_t end) {
                     std::vector<double> z0(static_cast<std::size_t>(d));
                     for (std::size_t i = begin; i < end; ++i) {
                         Rng rng(mix_seed(settings.seed, i));
                         const int c = conditions.sample(rng);
                         for (int j = 0; j < d; ++j) z0[j] = rng.normal();
                         Trajectory traj;
                         try {
                             traj = euler_simulate(stage, z0, c, settings.steps,
                                                   settings.alpha);
                         } catch (const SimulationError& e) {
                             throw SimulationError("generate_pairs: pair " + std::to_string(i) +
                                                       ": " + e.what(),
                                                   e.step());
                         }
                         const auto z1 = traj.final_state();
                         double* px0 = ds.x0.data() + i * d;
                         double* px1 = ds.x1.data() + i * d;
                         for (int j = 0; j < d; ++j) {
                             px0[j] = z0[j];
                             px1[j] = z1[j];
                         }
                         ds.conditions[i] = c;
                     }
                 });
    return ds;
}

FlowStage reflow_step(const FlowStage& teacher, const PairDataset& pairs,
                      const TrainSettings& settings, std::vector<LossLogRow>* log) {
    if (teacher.is_one_step()) {
        throw UsageError("reflow: teacher must be a continuous flow");
    }
    if (pairs.meta.count < 1) throw InputError("reflow: pair dataset is empty");
    if (pairs.meta.weights_hash != teacher.weights_hash()) {
        throw LineageError("reflow: pairs were generated by stage '" + pairs.meta.stage_id +
                           "' (weights " + pairs.meta.weights_hash +
                           "), not by the given teacher (" + teacher.weights_hash() + ")");
    }
    if (pairs.meta.state_dim != teacher.net.config().state_dim) {
        throw InputError("reflow: pair dimension does not match the teacher");
    }

    FlowStage student = teacher.clone_for_training();
    student.k = teacher.k + 1;
    student.prov.stage_id = "v" + std::to_string(student.k);
    student.prov.seed = settings.seed;
    student.prov.train_steps = settings.steps;
    student.prov.teacher_k = 0;

    Optimizer opt(student.net.params(), settings.opt);
    train_net(
        student.net, opt, dataset_batch_fn(pairs, settings.batch, settings.null_dropout_p),
        [](const MlpVelocityNet& net, const PairBatch& batch, Rng& rng,
           std::vector<double>& grads) { return flow_loss_grad(net, batch, rng, grads); },
        settings, "flow", log);

    student.ema = ParamStore::from_parts(student.net.params().layout(), opt.ema());
    return student;
}

std::vector<FlowStage> run_reflow_chain(const FlowStage& base, int k_max,
                                        const PairGenSettings& pair_settings,
                                        const TrainSettings& train_settings,
                                        double lr_decay_per_stage,
                                        const ConditionDist& conditions,
                                        const ReflowChainHooks& hooks) {
    if (k_max < 2) throw InputError("reflow chain: k_max must be >= 2");
    if (lr_decay_per_stage < 1.0) {
        throw InputError("reflow chain: lr decay factor must be >= 1");
    }

    std::vector<FlowStage> stages;
    const FlowStage* teacher = &base;
    for (int k = base.k + 1; k <= k_max; ++k) {
        try {
            PairGenSettings ps = pair_settings;
            ps.seed = mix_seed(pair_settings.seed, static_cast<std::uint64_t>(k));
            PairDataset pairs = generate_pairs(*teacher, conditions, ps);

            TrainSettings ts = train_settings;
            ts.seed = mix_seed(train_settings.seed, static_cast<std::uint64_t>(k));
            ts.opt.lr = train_settings.opt.lr /
                        std::pow(lr_decay_per_stage, static_cast<double>(k - base.k - 1));
            std::vector<LossLogRow> log;
            stages.push_back(reflow_step(*teacher, pairs, ts, &log));
            if (hooks.on_stage) hooks.on_stage(stages.back(), pairs);
        } catch (const TrainingError& e) {
            throw TrainingError("reflow chain: stage k=" + std::to_string(k) + ": " + e.what(),
                                e.param_index());
        } catch (const SimulationError& e) {
            throw SimulationError("reflow chain: stage k=" + std::to_string(k) + ": " + e.what(),
                                  e.step());
        }
        teacher = &stages.back();
    }
    return stages;
}

}  // namespace rectflow
