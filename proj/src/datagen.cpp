#include "rectflow/datagen.hpp"

#include <cmath>

#include "rectflow/net.hpp"

namespace rectflow {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kMemberEps = 1e-9;  // absorbs sqrt round-off in radius checks
}  // namespace

const char* to_string(TargetFamily family) {
    switch (family) {
        case TargetFamily::gaussian_mixture: return "gaussian-mixture";
        case TargetFamily::two_moons: return "two-moons";
        case TargetFamily::checkerboard: return "checkerboard";
        case TargetFamily::grid_image: return "grid-image";
    }
    return "?";
}

TargetFamily target_family_from_string(const std::string& s) {
    if (s == "gaussian-mixture") return TargetFamily::gaussian_mixture;
    if (s == "two-moons") return TargetFamily::two_moons;
    if (s == "checkerboard") return TargetFamily::checkerboard;
    if (s == "grid-image") return TargetFamily::grid_image;
    throw InputError("unknown target family '" + s + "'");
}

int TargetSpec::state_dim() const {
    switch (family) {
        case TargetFamily::gaussian_mixture:
            return centers.empty() ? 0 : static_cast<int>(centers.front().size());
        case TargetFamily::two_moons:
        case TargetFamily::checkerboard:
            return 2;
        case TargetFamily::grid_image:
            return grid_h * grid_w;
    }
    return 0;
}

namespace {

std::vector<std::pair<int, int>> permitted_cells(const TargetSpec& spec) {
    std::vector<std::pair<int, int>> cells;
    for (int i = 0; i < spec.board_cells; ++i) {
        for (int j = 0; j < spec.board_cells; ++j) {
            if ((i + j) % 2 == 0) cells.emplace_back(i, j);
        }
    }
    return cells;
}

std::vector<int> label_cell_indices(const TargetSpec& spec, int label, int cell_count) {
    // Round-robin split of the permitted-cell list across labels.
    std::vector<int> mine;
    const int labels = spec.label_count();
    for (int m = 0; m < cell_count; ++m) {
        if (m % labels == label - 1) mine.push_back(m);
    }
    return mine;
}

}  // namespace

void TargetSpec::validate() const {
    if (vocab_size < 2) throw InputError("target: vocab_size must include NULL and a label");
    switch (family) {
        case TargetFamily::gaussian_mixture: {
            if (centers.empty()) throw InputError("target: mixture needs at least one mode");
            const std::size_t d = centers.front().size();
            for (const auto& c : centers) {
                if (c.size() != d) throw InputError("target: mode centers differ in dimension");
            }
            if (sigmas.size() != centers.size() || weights.size() != centers.size()) {
                throw InputError("target: sigmas/weights must match mode count");
            }
            double wsum = 0.0;
            for (double w : weights) {
                if (w <= 0.0) throw InputError("target: mixture weights must be positive");
                wsum += w;
            }
            if (std::abs(wsum - 1.0) > 1e-9) {
                throw InputError("target: mixture weights must sum to 1");
            }
            for (double s : sigmas) {
                if (s <= 0.0) throw InputError("target: mode sigmas must be positive");
            }
            if (static_cast<int>(label_modes.size()) != label_count()) {
                throw InputError("target: label_modes must cover every label");
            }
            for (const auto& modes : label_modes) {
                if (modes.empty()) throw InputError("target: a label selects no modes");
                for (int m : modes) {
                    if (m < 0 || m >= static_cast<int>(centers.size())) {
                        throw InputError("target: label selects mode out of range");
                    }
                }
            }
            break;
        }
        case TargetFamily::two_moons:
            if (label_count() != 2) throw InputError("target: two-moons needs exactly 2 labels");
            if (moon_width <= 0.0 || moon_width >= moon_radius) {
                throw InputError("target: moon_width must lie in (0, moon_radius)");
            }
            break;
        case TargetFamily::checkerboard: {
            if (board_cells < 2) throw InputError("target: board_cells must be >= 2");
            if (board_extent <= 0.0) throw InputError("target: board_extent must be positive");
            const int cells = static_cast<int>(permitted_cells(*this).size());
            if (label_count() < 1 || label_count() > cells) {
                throw InputError("target: label count must be in [1, permitted cells]");
            }
            break;
        }
        case TargetFamily::grid_image:
            if (grid_h < 2 || grid_w < 2) throw InputError("target: grid must be at least 2x2");
            if (blob_sigma <= 0.0) throw InputError("target: blob_sigma must be positive");
            if (pixel_noise < 0.0) throw InputError("target: pixel_noise must be >= 0");
            if (static_cast<int>(blob_centers.size()) != label_count()) {
                throw InputError("target: blob_centers must cover every label");
            }
            break;
    }
}

TargetSpec TargetSpec::six_mode_benchmark() {
    TargetSpec spec;
    spec.family = TargetFamily::gaussian_mixture;
    spec.vocab_size = 4;
    const double radius = 2.0;
    for (int m = 0; m < 6; ++m) {
        const double a = 2.0 * kPi * m / 6.0;
        spec.centers.push_back({radius * std::cos(a), radius * std::sin(a)});
        spec.sigmas.push_back(0.2);
        spec.weights.push_back(1.0 / 6.0);
    }
    // Each label pairs antipodal modes, so the independent coupling crosses
    // the origin and reflow has something to straighten.
    spec.label_modes = {{0, 3}, {1, 4}, {2, 5}};
    return spec;
}

TargetSpec TargetSpec::grid_image_default(int labels) {
    TargetSpec spec;
    spec.family = TargetFamily::grid_image;
    spec.vocab_size = labels + 1;
    for (int l = 0; l < labels; ++l) {
        const double a = 2.0 * kPi * l / labels;
        spec.blob_centers.push_back({spec.grid_h / 2.0 + (spec.grid_h / 3.0) * std::sin(a),
                                     spec.grid_w / 2.0 + (spec.grid_w / 3.0) * std::cos(a)});
    }
    return spec;
}

ConditionDist ConditionDist::uniform(int vocab_size) {
    ConditionDist dist;
    dist.vocab_size = vocab_size;
    dist.weights.assign(static_cast<std::size_t>(vocab_size - 1),
                        1.0 / (vocab_size - 1));
    return dist;
}

int ConditionDist::sample(Rng& rng) const {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(weights.size());
}

std::vector<double> sample_prior(int d, int n, std::uint64_t seed) {
    if (d < 1 || n < 1) throw InputError("sample_prior: d and n must be >= 1");
    Rng rng(seed);
    std::vector<double> out(static_cast<std::size_t>(n) * d);
    for (auto& v : out) v = rng.normal();
    return out;
}

void sample_target_into(const TargetSpec& spec, int condition, Rng& rng,
                        std::span<double> out) {
    if (condition == kNullCondition) {
        throw UsageError("sample_target: NULL is a dropout token, not a target condition");
    }
    if (condition < 0 || condition >= spec.vocab_size) {
        throw InputError("sample_target: condition " + std::to_string(condition) +
                         " out of range");
    }
    const int d = spec.state_dim();
    if (static_cast<int>(out.size()) != d) {
        throw InputError("sample_target: output dimension mismatch");
    }

    switch (spec.family) {
        case TargetFamily::gaussian_mixture: {
            const auto& modes = spec.label_modes[condition - 1];
            double wsum = 0.0;
            for (int m : modes) wsum += spec.weights[m];
            const double u = rng.uniform() * wsum;
            int mode = modes.back();
            double acc = 0.0;
            for (int m : modes) {
                acc += spec.weights[m];
                if (u < acc) {
                    mode = m;
                    break;
                }
            }
            const auto& c = spec.centers[mode];
            const double s = spec.sigmas[mode];
            for (int j = 0; j < d; ++j) out[j] = c[j] + s * rng.normal();
            break;
        }
        case TargetFamily::two_moons: {
            const double theta = kPi * rng.uniform();
            const double r = rng.uniform(spec.moon_radius - spec.moon_width,
                                         spec.moon_radius + spec.moon_width);
            if (condition == 1) {
                out[0] = r * std::cos(theta);
                out[1] = r * std::sin(theta);
            } else {
                out[0] = spec.moon_radius - r * std::cos(theta);
                out[1] = 0.5 * spec.moon_radius - r * std::sin(theta);
            }
            break;
        }
        case TargetFamily::checkerboard: {
            const auto cells = permitted_cells(spec);
            const auto mine = label_cell_indices(spec, condition, static_cast<int>(cells.size()));
            const auto [ci, cj] = cells[mine[rng.below(mine.size())]];
            const double w = 2.0 * spec.board_extent / spec.board_cells;
            out[0] = -spec.board_extent + (ci + rng.uniform()) * w;
            out[1] = -spec.board_extent + (cj + rng.uniform()) * w;
            break;
        }
        case TargetFamily::grid_image: {
            const auto& c = spec.blob_centers[condition - 1];
            const double amp = rng.uniform(0.8, 1.2);
            const double dr = rng.uniform(-spec.blob_jitter, spec.blob_jitter);
            const double dc = rng.uniform(-spec.blob_jitter, spec.blob_jitter);
            const double cr = c[0] + dr;
            const double cc = c[1] + dc;
            const double inv2s2 = 1.0 / (2.0 * spec.blob_sigma * spec.blob_sigma);
            for (int r = 0; r < spec.grid_h; ++r) {
                for (int col = 0; col < spec.grid_w; ++col) {
                    const double d2 = (r - cr) * (r - cr) + (col - cc) * (col - cc);
                    double px = amp * std::exp(-d2 * inv2s2);
                    if (spec.pixel_noise > 0.0) px += spec.pixel_noise * rng.normal();
                    out[static_cast<std::size_t>(r) * spec.grid_w + col] = px;
                }
            }
            break;
        }
    }
}

std::vector<double> sample_target(const TargetSpec& spec, int condition, int n,
                                  std::uint64_t seed) {
    if (n < 1) throw InputError("sample_target: n must be >= 1");
    const int d = spec.state_dim();
    std::vector<double> out(static_cast<std::size_t>(n) * d);
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        sample_target_into(spec, condition, rng,
                           {out.data() + static_cast<std::size_t>(i) * d,
                            static_cast<std::size_t>(d)});
    }
    return out;
}

PairBatch make_training_batch(const TargetSpec& spec, const ConditionDist& conditions,
                              int batch, double null_dropout_p, Rng& rng) {
    if (batch < 1) throw InputError("make_training_batch: batch must be >= 1");
    if (null_dropout_p < 0.0 || null_dropout_p >= 1.0) {
        throw InputError("make_training_batch: null_dropout_p must lie in [0, 1)");
    }
    const int d = spec.state_dim();
    PairBatch out;
    out.resize(d, batch);
    for (int i = 0; i < batch; ++i) {
        const int c = conditions.sample(rng);
        auto x1 = out.x1_at(i);
        sample_target_into(spec, c, rng, x1);
        auto x0 = out.x0_at(i);
        for (int j = 0; j < d; ++j) x0[j] = rng.normal();
        const bool drop = null_dropout_p > 0.0 && rng.uniform() < null_dropout_p;
        out.conditions[i] = drop ? kNullCondition : c;
    }
    return out;
}

PairBatch make_training_batch(const TargetSpec& spec, const ConditionDist& conditions,
                              int batch, double null_dropout_p, std::uint64_t seed) {
    Rng rng(seed);
    return make_training_batch(spec, conditions, batch, null_dropout_p, rng);
}

bool two_moons_member(const TargetSpec& spec, std::span<const double> x, int label) {
    if (x.size() != 2) return false;
    const double lo = spec.moon_radius - spec.moon_width - kMemberEps;
    const double hi = spec.moon_radius + spec.moon_width + kMemberEps;
    if (label == 1) {
        const double r = std::hypot(x[0], x[1]);
        return x[1] >= -kMemberEps && r >= lo && r <= hi;
    }
    const double r = std::hypot(x[0] - spec.moon_radius, x[1] - 0.5 * spec.moon_radius);
    return x[1] <= 0.5 * spec.moon_radius + kMemberEps && r >= lo && r <= hi;
}

bool checkerboard_member(const TargetSpec& spec, std::span<const double> x, int label) {
    if (x.size() != 2) return false;
    const double w = 2.0 * spec.board_extent / spec.board_cells;
    const int i = static_cast<int>(std::floor((x[0] + spec.board_extent) / w));
    const int j = static_cast<int>(std::floor((x[1] + spec.board_extent) / w));
    if (i < 0 || i >= spec.board_cells || j < 0 || j >= spec.board_cells) return false;
    if ((i + j) % 2 != 0) return false;
    const auto cells = permitted_cells(spec);
    int m = -1;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (cells[k] == std::make_pair(i, j)) {
            m = static_cast<int>(k);
            break;
        }
    }
    return m >= 0 && m % spec.label_count() == label - 1;
}

}  // namespace rectflow
