#include "rectflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "rectflow/parallel.hpp"
#include "rectflow/strfmt.hpp"

namespace rectflow {

namespace {

double dist(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void check_two_sample(const SampleSet& a, const SampleSet& b, const char* op) {
    if (a.count < 1 || b.count < 1) {
        throw InputError(std::string(op) + ": sample sets must be nonempty");
    }
    if (a.state_dim != b.state_dim) {
        throw InputError(std::string(op) + ": sample dimensions differ");
    }
}

// Per-row partial sums reduced in row order, so results are identical for
// any thread count.
double row_reduced_sum(int rows, int threads, const std::function<double(int)>& row_sum) {
    std::vector<double> partial(static_cast<std::size_t>(rows));
    parallel_for(static_cast<std::size_t>(rows), threads,
                 [&](std::size_t begin, std::size_t end) {
                     for (std::size_t i = begin; i < end; ++i) {
                         partial[i] = row_sum(static_cast<int>(i));
                     }
                 });
    double total = 0.0;
    for (double v : partial) total += v;
    return total;
}

}  // namespace

double straightness_field(const VelocityFn& field, std::span<const double> z0s, int n_traj,
                          int d, int steps) {
    if (steps < 2) throw InputError("straightness: steps must be >= 2");
    if (n_traj < 1) throw InputError("straightness: need at least one trajectory");
    double total = 0.0;
    std::vector<double> vels(static_cast<std::size_t>(steps) * d);
    for (int tr = 0; tr < n_traj; ++tr) {
        std::span<const double> z0{z0s.data() + static_cast<std::size_t>(tr) * d,
                                   static_cast<std::size_t>(d)};
        Trajectory traj = euler_simulate_field(
            field, z0, steps,
            [&](int step, double, std::span<const double>, std::span<const double> v,
                std::span<const double>) {
                std::copy(v.begin(), v.end(), vels.begin() + static_cast<std::size_t>(step) * d);
            });
        const auto z1 = traj.final_state();
        double acc = 0.0;
        for (int s = 0; s < steps; ++s) {
            const double* v = vels.data() + static_cast<std::size_t>(s) * d;
            for (int j = 0; j < d; ++j) {
                const double r = (z1[j] - z0[j]) - v[j];
                acc += r * r;
            }
        }
        total += acc / steps;
    }
    return total / n_traj;
}

double straightness(const FlowStage& stage, int n_traj, int steps,
                    const ConditionDist& conditions, double alpha, std::uint64_t seed,
                    int threads) {
    if (stage.is_one_step()) {
        throw UsageError("straightness: undefined for one-step stage '" +
                         stage.prov.stage_id + "'");
    }
    if (steps < 2) throw InputError("straightness: steps must be >= 2");
    if (n_traj < 1) throw InputError("straightness: need at least one trajectory");

    const int d = stage.net.config().state_dim;
    std::vector<double> per_traj(static_cast<std::size_t>(n_traj));
    parallel_for(static_cast<std::size_t>(n_traj), threads, [&](std::size_t begin,
                                                                std::size_t end) {
        std::vector<double> z0(static_cast<std::size_t>(d));
        std::vector<double> vels(static_cast<std::size_t>(steps) * d);
        for (std::size_t tr = begin; tr < end; ++tr) {
            Rng rng(mix_seed(seed, tr));
            const int c = conditions.sample(rng);
            for (int j = 0; j < d; ++j) z0[j] = rng.normal();
            Trajectory traj = euler_simulate(
                stage, z0, c, steps, alpha,
                [&](int step, double, std::span<const double>, std::span<const double> v,
                    std::span<const double>) {
                    std::copy(v.begin(), v.end(),
                              vels.begin() + static_cast<std::size_t>(step) * d);
                });
            const auto z1 = traj.final_state();
            double acc = 0.0;
            for (int s = 0; s < steps; ++s) {
                const double* v = vels.data() + static_cast<std::size_t>(s) * d;
                for (int j = 0; j < d; ++j) {
                    const double r = (z1[j] - z0[j]) - v[j];
                    acc += r * r;
                }
            }
            per_traj[tr] = acc / steps;
        }
    });
    double total = 0.0;
    for (double v : per_traj) total += v;
    return total / n_traj;
}

double transport_cost_flat(std::span<const double> x0, std::span<const double> x1, int d,
                           TransportCost cost) {
    if (x0.size() != x1.size() || x0.empty() || d < 1 || x0.size() % d != 0) {
        throw InputError("transport_cost: bad sample layout");
    }
    const std::size_t n = x0.size() / d;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) {
            const double diff = x1[i * d + j] - x0[i * d + j];
            acc += diff * diff;
        }
        total += cost == TransportCost::l2sq ? acc : std::sqrt(acc);
    }
    return total / static_cast<double>(n);
}

double transport_cost(const PairDataset& pairs, TransportCost cost) {
    if (pairs.meta.count < 1) throw InputError("transport_cost: empty dataset");
    return transport_cost_flat(pairs.x0, pairs.x1, pairs.meta.state_dim, cost);
}

double energy_distance(const SampleSet& a, const SampleSet& b, int threads) {
    check_two_sample(a, b, "energy_distance");
    const int n = a.count;
    const int m = b.count;

    const double cross = row_reduced_sum(n, threads, [&](int i) {
        double acc = 0.0;
        for (int j = 0; j < m; ++j) acc += dist(a.row(i), b.row(j));
        return acc;
    });
    double within_a = 0.0;
    if (n > 1) {
        within_a = row_reduced_sum(n, threads, [&](int i) {
            double acc = 0.0;
            for (int j = i + 1; j < n; ++j) acc += dist(a.row(i), a.row(j));
            return acc;
        });
        within_a = 2.0 * within_a / (static_cast<double>(n) * (n - 1));
    }
    double within_b = 0.0;
    if (m > 1) {
        within_b = row_reduced_sum(m, threads, [&](int i) {
            double acc = 0.0;
            for (int j = i + 1; j < m; ++j) acc += dist(b.row(i), b.row(j));
            return acc;
        });
        within_b = 2.0 * within_b / (static_cast<double>(m) * (m - 1));
    }
    const double value =
        2.0 * cross / (static_cast<double>(n) * m) - within_a - within_b;
    return std::max(0.0, value);
}

double energy_distance_by_condition(const SampleSet& a, const SampleSet& b, int threads) {
    check_two_sample(a, b, "energy_distance");
    if (a.conditions.empty() || b.conditions.empty()) {
        throw InputError("energy_distance_by_condition: sets must be labeled");
    }
    std::map<int, std::vector<int>> rows_a, rows_b;
    for (int i = 0; i < a.count; ++i) rows_a[a.conditions[i]].push_back(i);
    for (int i = 0; i < b.count; ++i) rows_b[b.conditions[i]].push_back(i);

    double total = 0.0;
    double weight_sum = 0.0;
    for (const auto& [label, ia] : rows_a) {
        auto it = rows_b.find(label);
        if (it == rows_b.end()) continue;
        SampleSet sa{a.state_dim, static_cast<int>(ia.size()), {}, {}};
        SampleSet sb{b.state_dim, static_cast<int>(it->second.size()), {}, {}};
        sa.x.reserve(ia.size() * a.state_dim);
        for (int i : ia) {
            auto r = a.row(i);
            sa.x.insert(sa.x.end(), r.begin(), r.end());
        }
        sb.x.reserve(it->second.size() * b.state_dim);
        for (int i : it->second) {
            auto r = b.row(i);
            sb.x.insert(sb.x.end(), r.begin(), r.end());
        }
        const double w = static_cast<double>(ia.size()) / a.count;
        total += w * energy_distance(sa, sb, threads);
        weight_sum += w;
    }
    if (weight_sum <= 0.0) {
        throw InputError("energy_distance_by_condition: no shared labels");
    }
    return total / weight_sum;
}

double median_pairwise_distance(const SampleSet& a, const SampleSet& b, int cap) {
    check_two_sample(a, b, "median_pairwise_distance");
    const int na = std::min(a.count, cap);
    const int nb = std::min(b.count, cap);
    const int n = na + nb;
    auto row = [&](int i) {
        return i < na ? a.row(i) : b.row(i - na);
    };
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) dists.push_back(dist(row(i), row(j)));
    }
    if (dists.empty()) return 0.0;
    const std::size_t mid = (dists.size() - 1) / 2;  // lower median
    std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
    return dists[mid];
}

double mmd_gaussian(const SampleSet& a, const SampleSet& b, double bandwidth, bool biased,
                    int threads) {
    check_two_sample(a, b, "mmd");
    if (a.count < 2 || b.count < 2) {
        throw InputError("mmd: need at least 2 samples per set");
    }
    double sigma = bandwidth;
    if (!(sigma > 0.0)) {
        sigma = std::max(median_pairwise_distance(a, b), 1e-12);
    }
    const double gamma = 1.0 / (2.0 * sigma * sigma);
    const int n = a.count;
    const int m = b.count;
    auto kernel_row = [&](const SampleSet& s, const SampleSet& t, int i, bool skip_diag) {
        double acc = 0.0;
        for (int j = 0; j < t.count; ++j) {
            if (skip_diag && j == i) continue;
            acc += std::exp(-gamma * sq_dist(s.row(i), t.row(j)));
        }
        return acc;
    };

    const double saa = row_reduced_sum(
        n, threads, [&](int i) { return kernel_row(a, a, i, /*skip_diag=*/!biased); });
    const double sbb = row_reduced_sum(
        m, threads, [&](int i) { return kernel_row(b, b, i, /*skip_diag=*/!biased); });
    const double sab =
        row_reduced_sum(n, threads, [&](int i) { return kernel_row(a, b, i, false); });

    if (biased) {
        return saa / (static_cast<double>(n) * n) + sbb / (static_cast<double>(m) * m) -
               2.0 * sab / (static_cast<double>(n) * m);
    }
    return saa / (static_cast<double>(n) * (n - 1)) +
           sbb / (static_cast<double>(m) * (m - 1)) -
           2.0 * sab / (static_cast<double>(n) * m);
}

double coupling_fidelity(const FlowStage& teacher, const FlowStage& student,
                         const SimilarityLoss& loss, int n, const ConditionDist& conditions,
                         double teacher_alpha, std::uint64_t seed, int threads,
                         int teacher_steps) {
    if (teacher.is_one_step()) {
        throw UsageError("coupling_fidelity: teacher must be a continuous flow");
    }
    if (!student.is_one_step()) {
        throw UsageError("coupling_fidelity: student must be a one-step stage");
    }
    if (n < 1) throw InputError("coupling_fidelity: n must be >= 1");
    const int d = teacher.net.config().state_dim;
    if (d != student.net.config().state_dim) {
        throw InputError("coupling_fidelity: stage dimensions differ");
    }
    loss.validate(d);

    std::vector<double> per_sample(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t begin,
                                                           std::size_t end) {
        std::vector<double> z0(static_cast<std::size_t>(d));
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng(mix_seed(seed, i));
            const int c = conditions.sample(rng);
            for (int j = 0; j < d; ++j) z0[j] = rng.normal();
            Trajectory traj = euler_simulate(teacher, z0, c, teacher_steps, teacher_alpha);
            const std::vector<double> out = one_step_generate(student, z0, c);
            per_sample[i] = loss.value(traj.final_state(), out);
        }
    });
    double total = 0.0;
    for (double v : per_sample) total += v;
    return total / n;
}

std::string metrics_csv_header() {
    return "config_hash,stage_id,k,role,straightness,transport_l2sq,transport_l2,"
           "energy_distance,mmd,coupling_fidelity,sample_count,seed";
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("metrics: cannot open " + path);
    os << metrics_csv_header() << '\n';
    for (const auto& r : records) {
        os << r.config_hash << ',' << r.stage_id << ',' << r.k << ',' << to_string(r.role)
           << ',' << (r.straightness ? fmt_g17(*r.straightness) : std::string()) << ','
           << fmt_g17(r.transport_l2sq) << ',' << fmt_g17(r.transport_l2) << ','
           << fmt_g17(r.energy_distance) << ',' << fmt_g17(r.mmd) << ','
           << (r.coupling_fidelity ? fmt_g17(*r.coupling_fidelity) : std::string()) << ','
           << r.sample_count << ',' << r.seed << '\n';
    }
    if (!os) throw IoError("metrics: write failed for " + path);
}

void write_metrics_json(const std::string& path, const std::vector<MetricsRecord>& records) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records) {
        nlohmann::json j{
            {"config_hash", r.config_hash},
            {"stage_id", r.stage_id},
            {"k", r.k},
            {"role", to_string(r.role)},
            {"transport_l2sq", r.transport_l2sq},
            {"transport_l2", r.transport_l2},
            {"energy_distance", r.energy_distance},
            {"mmd", r.mmd},
            {"sample_count", r.sample_count},
            {"seed", r.seed},
        };
        j["straightness"] = r.straightness ? nlohmann::json(*r.straightness)
                                           : nlohmann::json(nullptr);
        j["coupling_fidelity"] = r.coupling_fidelity ? nlohmann::json(*r.coupling_fidelity)
                                                     : nlohmann::json(nullptr);
        arr.push_back(std::move(j));
    }
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("metrics: cannot open " + path);
    os << arr.dump(2) << '\n';
    if (!os) throw IoError("metrics: write failed for " + path);
}

}  // namespace rectflow
