#pragma once

#include <span>
#include <vector>

#include "rectflow/flow.hpp"
#include "rectflow/pairs.hpp"
#include "rectflow/trainer.hpp"

namespace rectflow {

enum class SimilarityKind { l2, multiscale_patch_l2 };

// Differentiable similarity loss between endpoints. l2 is the plain squared
// Euclidean distance. multiscale_patch_l2 treats vectors as h × w grids and
// averages squared differences of non-overlapping patch means across several
// patch sizes; size 1 is always included, so the loss is zero iff the inputs
// are identical.
struct SimilarityLoss {
    SimilarityKind kind = SimilarityKind::l2;
    int grid_h = 0;
    int grid_w = 0;
    std::vector<int> patch_sizes = {1, 2, 4};

    double value(std::span<const double> a, std::span<const double> b) const;
    // Returns the value and fills d(value)/d(b).
    double value_grad_b(std::span<const double> a, std::span<const double> b,
                        std::span<double> dldb) const;
    const char* tag() const { return kind == SimilarityKind::l2 ? "l2" : "patch"; }
    void validate(int state_dim) const;

    static SimilarityLoss l2_loss() { return {}; }
    static SimilarityLoss patch_loss(int h, int w, std::vector<int> sizes = {1, 2, 4});
};

// Mean over the batch of D(x1, x0 + v_student(x0, 0 | c)): the one-Euler-step
// compression objective. Time input pinned to 0.
double distill_loss(const MlpVelocityNet& student, const PairBatch& batch,
                    const SimilarityLoss& loss);
double distill_loss_grad(const MlpVelocityNet& student, const PairBatch& batch,
                         const SimilarityLoss& loss, std::vector<double>& grads);

struct DistillScheduleSegment {
    SimilarityLoss loss;
    double fraction = 1.0;  // of the total training steps
};

// Compresses a continuous teacher into a one-step stage. The student starts
// from the teacher's weights (optionally widened via student_hidden) and is
// trained through the loss schedule segments in order, sharing one optimizer.
FlowStage distill(const FlowStage& teacher, const PairDataset& pairs,
                  std::span<const DistillScheduleSegment> schedule,
                  const TrainSettings& settings, std::vector<LossLogRow>* log,
                  const std::vector<int>& student_hidden = {});

// x0 + v(x0, 0 | c) on the EMA weights; requires a one-step stage.
std::vector<double> one_step_generate(const FlowStage& stage, std::span<const double> z0,
                                      int condition);

}  // namespace rectflow
