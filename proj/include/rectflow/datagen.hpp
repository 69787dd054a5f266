#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rectflow/coupling.hpp"
#include "rectflow/rng.hpp"

namespace rectflow {

enum class TargetFamily { gaussian_mixture, two_moons, checkerboard, grid_image };

const char* to_string(TargetFamily family);
TargetFamily target_family_from_string(const std::string& s);

// Synthetic conditional target distribution (the data side of the coupling).
// Labels 1..L select subsets of the family's components; index 0 is the NULL
// token used only for condition dropout during training.
struct TargetSpec {
    TargetFamily family = TargetFamily::gaussian_mixture;
    int vocab_size = 4;  // labels + NULL

    // gaussian-mixture
    std::vector<std::vector<double>> centers;
    std::vector<double> sigmas;   // isotropic std-dev per mode
    std::vector<double> weights;  // positive, sum to 1
    std::vector<std::vector<int>> label_modes;  // per label, 0-based mode indices

    // two-moons: points drawn from annulus half-sections of radial width
    // 2*moon_width around radius moon_radius, so membership is exact.
    double moon_radius = 1.0;
    double moon_width = 0.1;

    // checkerboard: board_cells × board_cells grid over
    // [-board_extent, board_extent]^2, permitted cells have even (i+j);
    // labels split the permitted cells round-robin.
    int board_cells = 4;
    double board_extent = 2.0;

    // grid-image: h × w grayscale blob images, one blob center per label.
    int grid_h = 8;
    int grid_w = 8;
    double blob_sigma = 1.5;
    double blob_jitter = 0.5;
    double pixel_noise = 0.01;
    std::vector<std::array<double, 2>> blob_centers;  // per label, (row, col)

    int state_dim() const;
    int label_count() const { return vocab_size - 1; }

    // Throws InputError listing the first violated constraint.
    void validate() const;

    // Default benchmark: 2-D, 6-mode Gaussian mixture on a circle, 3 labels
    // each selecting a pair of antipodal modes, so the independent coupling
    // is strongly crossed.
    static TargetSpec six_mode_benchmark();
    static TargetSpec grid_image_default(int labels = 3);
};

// Distribution over condition labels 1..L (never NULL).
struct ConditionDist {
    int vocab_size = 2;
    std::vector<double> weights;  // size L = vocab_size-1, normalized

    static ConditionDist uniform(int vocab_size);
    int sample(Rng& rng) const;
    double frequency(int label) const { return weights.at(label - 1); }
};

// n i.i.d. standard Gaussian vectors in R^d, flattened n × d.
std::vector<double> sample_prior(int d, int n, std::uint64_t seed);

// n i.i.d. draws from the conditional target; NULL is a training-time dropout
// token with no target of its own and is rejected here.
std::vector<double> sample_target(const TargetSpec& spec, int condition, int n,
                                  std::uint64_t seed);
void sample_target_into(const TargetSpec& spec, int condition, Rng& rng,
                        std::span<double> out);

// Independent coupling: x0 from the prior, x1 from the target of a label
// drawn from `conditions`; with probability null_dropout_p the stored label
// is replaced by NULL (the target is still drawn from the true label).
PairBatch make_training_batch(const TargetSpec& spec, const ConditionDist& conditions,
                              int batch, double null_dropout_p, Rng& rng);
PairBatch make_training_batch(const TargetSpec& spec, const ConditionDist& conditions,
                              int batch, double null_dropout_p, std::uint64_t seed);

// Exact membership predicates used by the property tests.
bool two_moons_member(const TargetSpec& spec, std::span<const double> x, int label);
bool checkerboard_member(const TargetSpec& spec, std::span<const double> x, int label);

}  // namespace rectflow
