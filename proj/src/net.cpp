#include "rectflow/net.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace rectflow {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void time_features(double t, int freqs, double* out) {
    double omega = kPi;
    for (int j = 0; j < freqs; ++j) {
        out[2 * j] = std::sin(omega * t);
        out[2 * j + 1] = std::cos(omega * t);
        omega *= 2.0;
    }
}

std::vector<ParamSegment> make_layout(const NetConfig& cfg) {
    std::vector<ParamSegment> layout;
    layout.push_back({"cond_emb", static_cast<std::size_t>(cfg.vocab_size),
                      static_cast<std::size_t>(cfg.cond_emb_dim), 0});
    int in = cfg.input_dim();
    for (int l = 0; l < cfg.layer_count(); ++l) {
        const bool final_layer = l == static_cast<int>(cfg.hidden.size());
        const int out = final_layer ? cfg.state_dim : cfg.hidden[l];
        layout.push_back({"w" + std::to_string(l), static_cast<std::size_t>(out),
                          static_cast<std::size_t>(in), 0});
        layout.push_back({"b" + std::to_string(l), static_cast<std::size_t>(out), 1, 0});
        in = out;
    }
    return layout;
}

}  // namespace

MlpVelocityNet::MlpVelocityNet(NetConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.state_dim < 1) throw InputError("net: state_dim must be >= 1");
    if (cfg_.vocab_size < 1) throw InputError("net: vocab_size must be >= 1");
    if (cfg_.cond_emb_dim < 1) throw InputError("net: cond_emb_dim must be >= 1");
    if (cfg_.time_emb_freqs < 1) throw InputError("net: time_emb_freqs must be >= 1");
    for (int h : cfg_.hidden) {
        if (h < 1) throw InputError("net: hidden widths must be >= 1");
    }
    params_ = ParamStore(make_layout(cfg_));
}

int MlpVelocityNet::total_hidden() const {
    int total = 0;
    for (int h : cfg_.hidden) total += h;
    return total;
}

void MlpVelocityNet::init(Rng& rng, bool zero_final_layer) {
    const int layers = cfg_.layer_count();
    // cond_emb is segment 0, layer l occupies segments 1+2l (W) and 2+2l (b).
    double* emb = params_.segment(0);
    const auto& emb_info = params_.segment_info(0);
    for (std::size_t i = 0; i < emb_info.size(); ++i) emb[i] = 0.1 * rng.normal();

    for (int l = 0; l < layers; ++l) {
        const auto& winfo = params_.segment_info(1 + 2 * l);
        double* w = params_.segment(1 + 2 * l);
        double* b = params_.segment(2 + 2 * l);
        const bool final_layer = l == layers - 1;
        if (final_layer && zero_final_layer) {
            std::memset(w, 0, winfo.size() * sizeof(double));
        } else {
            const double scale = 1.0 / std::sqrt(static_cast<double>(winfo.cols));
            for (std::size_t i = 0; i < winfo.size(); ++i) w[i] = scale * rng.normal();
        }
        std::memset(b, 0, params_.segment_info(2 + 2 * l).size() * sizeof(double));
    }
}

void MlpVelocityNet::validate_input(double t, int condition) const {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw InputError("net: time t=" + std::to_string(t) + " outside [0,1]");
    }
    if (condition < 0 || condition >= cfg_.vocab_size) {
        throw InputError("net: condition index " + std::to_string(condition) +
                         " out of range [0," + std::to_string(cfg_.vocab_size) + ")");
    }
}

void MlpVelocityNet::forward_into(const ParamStore& params, std::span<const double> x,
                                  double t, int condition, std::span<double> out) const {
    validate_input(t, condition);
    if (static_cast<int>(x.size()) != cfg_.state_dim) {
        throw InputError("net: state dimension mismatch");
    }
    if (static_cast<int>(out.size()) != cfg_.state_dim) {
        throw InputError("net: output dimension mismatch");
    }

    const int in_dim = cfg_.input_dim();
    thread_local std::vector<double> buf_a, buf_b;
    buf_a.resize(static_cast<std::size_t>(in_dim));
    double* in = buf_a.data();
    for (int i = 0; i < cfg_.state_dim; ++i) in[i] = x[i];
    time_features(t, cfg_.time_emb_freqs, in + cfg_.state_dim);
    const double* emb = params.segment(0) +
                        static_cast<std::size_t>(condition) * cfg_.cond_emb_dim;
    for (int e = 0; e < cfg_.cond_emb_dim; ++e) {
        in[cfg_.state_dim + cfg_.time_emb_dim() + e] = emb[e];
    }

    const int layers = cfg_.layer_count();
    int cur_dim = in_dim;
    for (int l = 0; l < layers; ++l) {
        const auto& winfo = params.segment_info(1 + 2 * l);
        const double* w = params.segment(1 + 2 * l);
        const double* b = params.segment(2 + 2 * l);
        const int rows = static_cast<int>(winfo.rows);
        const bool final_layer = l == layers - 1;
        double* dst = final_layer ? out.data() : (buf_b.resize(rows), buf_b.data());
        for (int o = 0; o < rows; ++o) {
            const double* wrow = w + static_cast<std::size_t>(o) * cur_dim;
            double acc = b[o];
            for (int i = 0; i < cur_dim; ++i) acc += wrow[i] * in[i];
            dst[o] = final_layer ? acc : acc * sigmoid(acc);
        }
        if (!final_layer) {
            std::swap(buf_a, buf_b);
            in = buf_a.data();
            cur_dim = rows;
        }
    }
}

std::vector<double> MlpVelocityNet::forward(std::span<const double> x, double t,
                                            int condition) const {
    std::vector<double> out(static_cast<std::size_t>(cfg_.state_dim));
    forward_into(params_, x, t, condition, out);
    return out;
}

void MlpVelocityNet::forward_batch(ForwardTape& tape, std::span<const double> xs,
                                   std::span<const double> ts, std::span<const int> cs,
                                   std::vector<double>& ys) const {
    const int batch = static_cast<int>(ts.size());
    if (batch == 0) throw InputError("net: empty batch");
    if (xs.size() != static_cast<std::size_t>(batch) * cfg_.state_dim ||
        cs.size() != static_cast<std::size_t>(batch)) {
        throw InputError("net: batch size mismatch");
    }

    const int in_dim = cfg_.input_dim();
    const int th = total_hidden();
    tape.batch = batch;
    tape.inputs.resize(static_cast<std::size_t>(batch) * in_dim);
    tape.pre.resize(static_cast<std::size_t>(batch) * th);
    tape.sig.resize(static_cast<std::size_t>(batch) * th);
    tape.act.resize(static_cast<std::size_t>(batch) * th);
    tape.conditions.assign(cs.begin(), cs.end());
    ys.resize(static_cast<std::size_t>(batch) * cfg_.state_dim);

    const int layers = cfg_.layer_count();
    for (int s = 0; s < batch; ++s) {
        validate_input(ts[s], cs[s]);
        double* in = tape.inputs.data() + static_cast<std::size_t>(s) * in_dim;
        const double* x = xs.data() + static_cast<std::size_t>(s) * cfg_.state_dim;
        for (int i = 0; i < cfg_.state_dim; ++i) in[i] = x[i];
        time_features(ts[s], cfg_.time_emb_freqs, in + cfg_.state_dim);
        const double* emb = params_.segment(0) +
                            static_cast<std::size_t>(cs[s]) * cfg_.cond_emb_dim;
        for (int e = 0; e < cfg_.cond_emb_dim; ++e) {
            in[cfg_.state_dim + cfg_.time_emb_dim() + e] = emb[e];
        }

        const double* cur = in;
        int cur_dim = in_dim;
        int hoff = 0;
        for (int l = 0; l < layers; ++l) {
            const auto& winfo = params_.segment_info(1 + 2 * l);
            const double* w = params_.segment(1 + 2 * l);
            const double* b = params_.segment(2 + 2 * l);
            const int rows = static_cast<int>(winfo.rows);
            const bool final_layer = l == layers - 1;
            if (final_layer) {
                double* y = ys.data() + static_cast<std::size_t>(s) * cfg_.state_dim;
                for (int o = 0; o < rows; ++o) {
                    const double* wrow = w + static_cast<std::size_t>(o) * cur_dim;
                    double acc = b[o];
                    for (int i = 0; i < cur_dim; ++i) acc += wrow[i] * cur[i];
                    y[o] = acc;
                }
            } else {
                double* pre = tape.pre.data() + static_cast<std::size_t>(s) * th + hoff;
                double* sig = tape.sig.data() + static_cast<std::size_t>(s) * th + hoff;
                double* act = tape.act.data() + static_cast<std::size_t>(s) * th + hoff;
                for (int o = 0; o < rows; ++o) {
                    const double* wrow = w + static_cast<std::size_t>(o) * cur_dim;
                    double acc = b[o];
                    for (int i = 0; i < cur_dim; ++i) acc += wrow[i] * cur[i];
                    const double sg = sigmoid(acc);
                    pre[o] = acc;
                    sig[o] = sg;
                    act[o] = acc * sg;
                }
                cur = act;
                cur_dim = rows;
                hoff += rows;
            }
        }
    }
    tape.recorded = true;
}

void MlpVelocityNet::backward_batch(const ForwardTape& tape, std::span<const double> dys,
                                    std::vector<double>& grads) const {
    if (!tape.recorded) {
        throw StateError("net: backward called without a recorded forward pass");
    }
    if (dys.size() != static_cast<std::size_t>(tape.batch) * cfg_.state_dim) {
        throw InputError("net: output-gradient size mismatch");
    }
    grads.assign(params_.size(), 0.0);

    const int in_dim = cfg_.input_dim();
    const int th = total_hidden();
    const int layers = cfg_.layer_count();

    std::vector<double> delta_a(static_cast<std::size_t>(cfg_.state_dim));
    std::vector<double> delta_b;

    for (int s = 0; s < tape.batch; ++s) {
        const double* in0 = tape.inputs.data() + static_cast<std::size_t>(s) * in_dim;
        const double* dy = dys.data() + static_cast<std::size_t>(s) * cfg_.state_dim;

        delta_a.assign(dy, dy + cfg_.state_dim);
        double* delta = delta_a.data();
        int delta_dim = cfg_.state_dim;

        for (int l = layers - 1; l >= 0; --l) {
            const auto& winfo = params_.segment_info(1 + 2 * l);
            const double* w = params_.segment(1 + 2 * l);
            double* gw = grads.data() + winfo.offset;
            double* gb = grads.data() + params_.segment_info(2 + 2 * l).offset;
            const int cols = static_cast<int>(winfo.cols);

            // Input of layer l: the batch input for l=0, otherwise the
            // activations of layer l-1 (which start at sum(hidden[0..l-2])).
            const double* layer_in = in0;
            if (l > 0) {
                int off = 0;
                for (int k = 0; k + 1 < l; ++k) off += cfg_.hidden[k];
                layer_in = tape.act.data() + static_cast<std::size_t>(s) * th + off;
            }

            for (int o = 0; o < delta_dim; ++o) {
                const double d = delta[o];
                gb[o] += d;
                double* gwrow = gw + static_cast<std::size_t>(o) * cols;
                for (int i = 0; i < cols; ++i) gwrow[i] += d * layer_in[i];
            }

            if (l == 0) {
                // Propagate into the condition embedding slice of the input.
                const int emb_off = cfg_.state_dim + cfg_.time_emb_dim();
                double* gemb = grads.data() + params_.segment_info(0).offset +
                               static_cast<std::size_t>(tape.conditions[s]) * cfg_.cond_emb_dim;
                for (int e = 0; e < cfg_.cond_emb_dim; ++e) {
                    double acc = 0.0;
                    for (int o = 0; o < delta_dim; ++o) {
                        acc += w[static_cast<std::size_t>(o) * cols + emb_off + e] * delta[o];
                    }
                    gemb[e] += acc;
                }
                break;
            }

            // delta for the previous layer, through the silu of layer l-1.
            const int prev_rows = cfg_.hidden[l - 1];
            int off = 0;
            for (int k = 0; k + 1 < l; ++k) off += cfg_.hidden[k];
            const double* pre = tape.pre.data() + static_cast<std::size_t>(s) * th + off;
            const double* sg = tape.sig.data() + static_cast<std::size_t>(s) * th + off;
            delta_b.assign(static_cast<std::size_t>(prev_rows), 0.0);
            for (int o = 0; o < delta_dim; ++o) {
                const double d = delta[o];
                const double* wrow = w + static_cast<std::size_t>(o) * cols;
                for (int i = 0; i < prev_rows; ++i) delta_b[i] += wrow[i] * d;
            }
            for (int i = 0; i < prev_rows; ++i) {
                delta_b[i] *= sg[i] * (1.0 + pre[i] * (1.0 - sg[i]));
            }
            delta_a.swap(delta_b);
            delta = delta_a.data();
            delta_dim = prev_rows;
        }
    }
}

MlpVelocityNet MlpVelocityNet::widen(const MlpVelocityNet& src, const std::vector<int>& hidden,
                                     Rng& rng) {
    const NetConfig& scfg = src.config();
    if (hidden.size() != scfg.hidden.size()) {
        throw InputError("widen: layer count must match the source net");
    }
    for (std::size_t l = 0; l < hidden.size(); ++l) {
        if (hidden[l] < scfg.hidden[l]) {
            throw InputError("widen: hidden width " + std::to_string(hidden[l]) +
                             " below source width " + std::to_string(scfg.hidden[l]));
        }
    }
    NetConfig cfg = scfg;
    cfg.hidden = hidden;
    MlpVelocityNet dst(cfg);

    // Condition embedding carries over unchanged.
    const auto& semb = src.params_.segment_info(0);
    std::memcpy(dst.params_.segment(0), src.params_.segment(0), semb.size() * sizeof(double));

    const int layers = cfg.layer_count();
    for (int l = 0; l < layers; ++l) {
        const auto& sw = src.params_.segment_info(1 + 2 * l);
        const auto& dw = dst.params_.segment_info(1 + 2 * l);
        const double* swp = src.params_.segment(1 + 2 * l);
        double* dwp = dst.params_.segment(1 + 2 * l);
        const double scale = 1.0 / std::sqrt(static_cast<double>(dw.cols));
        for (std::size_t o = 0; o < dw.rows; ++o) {
            for (std::size_t i = 0; i < dw.cols; ++i) {
                double v;
                if (o < sw.rows && i < sw.cols) {
                    v = swp[o * sw.cols + i];
                } else if (o < sw.rows) {
                    // Old units must not see new activations, or the function
                    // changes at init.
                    v = 0.0;
                } else {
                    v = (l == layers - 1) ? 0.0 : scale * rng.normal();
                }
                dwp[o * dw.cols + i] = v;
            }
        }
        const auto& sb = src.params_.segment_info(2 + 2 * l);
        const double* sbp = src.params_.segment(2 + 2 * l);
        double* dbp = dst.params_.segment(2 + 2 * l);
        for (std::size_t o = 0; o < dst.params_.segment_info(2 + 2 * l).rows; ++o) {
            dbp[o] = o < sb.rows ? sbp[o] : 0.0;
        }
    }
    return dst;
}

}  // namespace rectflow
