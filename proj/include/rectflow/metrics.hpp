#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rectflow/datagen.hpp"
#include "rectflow/distill.hpp"
#include "rectflow/flow.hpp"
#include "rectflow/pairs.hpp"

namespace rectflow {

// Flat n × d sample matrix; optionally labeled per row for conditional
// two-sample comparisons.
struct SampleSet {
    int state_dim = 0;
    int count = 0;
    std::vector<double> x;
    std::vector<int> conditions;  // empty for unlabeled sets

    std::span<const double> row(int i) const {
        return {x.data() + static_cast<std::size_t>(i) * state_dim,
                static_cast<std::size_t>(state_dim)};
    }
};

// One evaluation row. Entries that are undefined for a stage's role
// (straightness of a one-step model, fidelity of a continuous flow) stay
// unset rather than being reported as 0.
struct MetricsRecord {
    std::string stage_id;
    int k = 0;
    StageRole role = StageRole::continuous;
    std::optional<double> straightness;
    double transport_l2sq = 0.0;
    double transport_l2 = 0.0;
    double energy_distance = 0.0;
    double mmd = 0.0;
    std::optional<double> coupling_fidelity;
    long sample_count = 0;
    std::uint64_t seed = 0;
    std::string config_hash;
};

// Monte-Carlo straightness estimate S(Z): trajectories from fresh prior
// noise and sampled conditions, left-endpoint quadrature on the Euler grid of
// mean ||(z1 - z0) - v(z_t, t | c)||^2. Defaults to 1000 trajectories at the
// call sites. One-step stages have no trajectory to measure; calling with one
// is a usage error, never a silent 0.
double straightness(const FlowStage& stage, int n_traj, int steps,
                    const ConditionDist& conditions, double alpha, std::uint64_t seed,
                    int threads = 1);

// Same quadrature over an arbitrary field with explicit start points
// (analytic-field tests).
double straightness_field(const VelocityFn& field, std::span<const double> z0s, int n_traj,
                          int d, int steps);

enum class TransportCost { l2sq, l2 };

double transport_cost(const PairDataset& pairs, TransportCost cost);
double transport_cost_flat(std::span<const double> x0, std::span<const double> x1, int d,
                           TransportCost cost);

// Energy distance via U-statistics, clipped at 0 against Monte-Carlo
// negativity. Singleton within-terms are 0.
double energy_distance(const SampleSet& a, const SampleSet& b, int threads = 1);

// Per-condition energy distance averaged with set A's label frequencies;
// catches conditional failures a pooled comparison would miss.
double energy_distance_by_condition(const SampleSet& a, const SampleSet& b, int threads = 1);

// Unbiased (U-statistic) squared MMD with a Gaussian kernel; may be slightly
// negative and is reported raw. bandwidth <= 0 selects the median heuristic.
// The biased (V-statistic) variant is exactly 0 on identical sets and is used
// for identity checks.
double mmd_gaussian(const SampleSet& a, const SampleSet& b, double bandwidth,
                    bool biased = false, int threads = 1);

// Lower median of pairwise distances in the pooled sample. Exact brute force
// up to `cap` points per set (deterministic truncation beyond it).
double median_pairwise_distance(const SampleSet& a, const SampleSet& b, int cap = 4096);

// Mean D(teacher 25-step endpoint, student one-step output) on shared noise
// and conditions.
double coupling_fidelity(const FlowStage& teacher, const FlowStage& student,
                         const SimilarityLoss& loss, int n, const ConditionDist& conditions,
                         double teacher_alpha, std::uint64_t seed, int threads = 1,
                         int teacher_steps = 25);

// CSV column order is fixed and documented in the README; the JSON variant
// carries the same fields with null for unset entries.
void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records);
void write_metrics_json(const std::string& path, const std::vector<MetricsRecord>& records);
std::string metrics_csv_header();

}  // namespace rectflow
