#include "neodeform/amortizer.hpp"

#include <cmath>
#include <numeric>

#include "neodeform/adam.hpp"
#include "neodeform/io.hpp"
#include "neodeform/random.hpp"

namespace neodeform {

void NetArchitecture::validate() const {
    if (channels.empty() || channels.size() > 8) throw Error(ErrorCode::InvalidArgument, "need 1..8 levels");
    for (int c : channels)
        if (c < 1 || c > 4096) throw Error(ErrorCode::InvalidArgument, "channel width out of range");
}

std::vector<LayerShape> layer_shapes(const NetArchitecture& arch) {
    arch.validate();
    const auto& c = arch.channels;
    const int levels = arch.levels();
    std::vector<LayerShape> out;
    std::size_t offset = 0;
    auto add = [&](int in, int o, int k) {
        LayerShape s{in, o, k, offset, 0};
        s.bias_offset = offset + s.weight_count();
        offset = s.bias_offset + static_cast<std::size_t>(o);
        out.push_back(s);
    };
    auto block = [&](int in, int o) {
        add(in, o, 3);
        for (int k = 1; k < kConvsPerBlock; ++k) add(o, o, 3);
    };
    block(kNetInputChannels, c[0]);
    for (int l = 1; l < levels; ++l) block(c[l - 1], c[l]);
    for (int l = levels - 2; l >= 0; --l) block(c[l + 1] + c[l], c[l]);
    add(c[0], kNetOutputChannels, 1);
    return out;
}

NetWeights NetWeights::zeros(const NetArchitecture& arch) {
    NetWeights w{arch, layer_shapes(arch), {}};
    const LayerShape& last = w.layers.back();
    w.params.assign(last.bias_offset + last.out_channels, 0.0);
    return w;
}

Eigen::Map<RowMatrix> NetWeights::weight(std::size_t l) {
    const LayerShape& s = layers[l];
    return {params.data() + s.weight_offset, s.out_channels, s.in_channels * s.kernel * s.kernel};
}
Eigen::Map<const RowMatrix> NetWeights::weight(std::size_t l) const {
    const LayerShape& s = layers[l];
    return {params.data() + s.weight_offset, s.out_channels, s.in_channels * s.kernel * s.kernel};
}
Eigen::Map<Eigen::VectorXd> NetWeights::bias(std::size_t l) {
    return {params.data() + layers[l].bias_offset, layers[l].out_channels};
}
Eigen::Map<const Eigen::VectorXd> NetWeights::bias(std::size_t l) const {
    return {params.data() + layers[l].bias_offset, layers[l].out_channels};
}

NetWeights init_weights(const NetArchitecture& arch, std::uint64_t seed, bool zero_final) {
    NetWeights w = NetWeights::zeros(arch);
    Rng rng(seed);
    for (std::size_t l = 0; l < w.layer_count(); ++l) {
        const bool final_layer = l + 1 == w.layer_count();
        if (final_layer && zero_final) break;
        const LayerShape& s = w.layers[l];
        const double limit = std::sqrt(6.0 / (s.in_channels * s.kernel * s.kernel));
        for (std::size_t i = 0; i < s.weight_count(); ++i) w.params[s.weight_offset + i] = rng.uniform(-limit, limit);
    }
    return w;
}

NetWeights probe_weights(const NetArchitecture& arch, std::uint64_t seed) {
    NetWeights w = init_weights(arch, seed, false);
    Rng rng(seed ^ 0xB1A5ULL);
    for (std::size_t l = 0; l < w.layer_count(); ++l)
        for (Eigen::Index i = 0; i < w.bias(l).size(); ++i) w.bias(l)[i] = rng.uniform(-0.1, 0.1);
    w.weight(w.layer_count() - 1) *= 0.05;
    return w;
}

TrainOptions TrainOptions::slow() {
    TrainOptions o;
    o.learning_rate = 1e-5;
    return o;
}

namespace {

// Activations are channels x pixels, each channel plane row-major.

RowMatrix im2col(const RowMatrix& in, int h, int w) {
    const int p = h * w;
    RowMatrix cols = RowMatrix::Zero(in.rows() * 9, p);
    for (Eigen::Index c = 0; c < in.rows(); ++c) {
        const double* src = in.data() + c * p;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                double* dst = cols.data() + (c * 9 + ky * 3 + kx) * p;
                const int dy = ky - 1, dx = kx - 1;
                const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
                    const double* s = src + (y + dy) * w + dx;
                    double* d = dst + y * w;
                    for (int x = x0; x < x1; ++x) d[x] = s[x];
                }
            }
        }
    }
    return cols;
}

RowMatrix col2im(const RowMatrix& cols, int channels, int h, int w) {
    const int p = h * w;
    RowMatrix out = RowMatrix::Zero(channels, p);
    for (int c = 0; c < channels; ++c) {
        double* dst = out.data() + c * p;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const double* src = cols.data() + (c * 9 + ky * 3 + kx) * p;
                const int dy = ky - 1, dx = kx - 1;
                const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
                    double* d = dst + (y + dy) * w + dx;
                    const double* s = src + y * w;
                    for (int x = x0; x < x1; ++x) d[x] += s[x];
                }
            }
        }
    }
    return out;
}

RowMatrix leaky(const RowMatrix& pre) {
    return pre.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
}

RowMatrix leaky_backward(const RowMatrix& pre, const RowMatrix& d_act) {
    return d_act.binaryExpr(pre, [](double g, double v) { return v > 0.0 ? g : kLeakySlope * g; });
}

RowMatrix avg_pool(const RowMatrix& in, int h, int w) {
    const int ho = h / 2, wo = w / 2;
    RowMatrix out(in.rows(), ho * wo);
    for (Eigen::Index c = 0; c < in.rows(); ++c) {
        const double* s = in.data() + c * h * w;
        double* d = out.data() + c * ho * wo;
        for (int y = 0; y < ho; ++y)
            for (int x = 0; x < wo; ++x) {
                const double* q = s + 2 * y * w + 2 * x;
                d[y * wo + x] = 0.25 * (q[0] + q[1] + q[w] + q[w + 1]);
            }
    }
    return out;
}

RowMatrix avg_pool_backward(const RowMatrix& d_out, int h, int w) {
    const int ho = h / 2, wo = w / 2;
    RowMatrix d_in(d_out.rows(), h * w);
    for (Eigen::Index c = 0; c < d_out.rows(); ++c) {
        const double* s = d_out.data() + c * ho * wo;
        double* d = d_in.data() + c * h * w;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) d[y * w + x] = 0.25 * s[(y / 2) * wo + x / 2];
    }
    return d_in;
}

// Nearest-neighbour 2x upsampling from (h/2, w/2) to (h, w).
RowMatrix upsample(const RowMatrix& in, int h, int w) {
    const int wi = w / 2, hi = h / 2;
    RowMatrix out(in.rows(), h * w);
    for (Eigen::Index c = 0; c < in.rows(); ++c) {
        const double* s = in.data() + c * hi * wi;
        double* d = out.data() + c * h * w;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) d[y * w + x] = s[(y / 2) * wi + x / 2];
    }
    return out;
}

RowMatrix upsample_backward(const RowMatrix& d_out, int h, int w) {
    const int wi = w / 2, hi = h / 2;
    RowMatrix d_in = RowMatrix::Zero(d_out.rows(), hi * wi);
    for (Eigen::Index c = 0; c < d_out.rows(); ++c) {
        const double* s = d_out.data() + c * h * w;
        double* d = d_in.data() + c * hi * wi;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) d[(y / 2) * wi + x / 2] += s[y * w + x];
    }
    return d_in;
}

struct Conv3Result {
    RowMatrix cols;
    RowMatrix pre;
    RowMatrix act;
};

Conv3Result conv3_forward(const NetWeights& w, std::size_t layer, const RowMatrix& in, int h, int wd) {
    Conv3Result r;
    r.cols = im2col(in, h, wd);
    r.pre.noalias() = w.weight(layer) * r.cols;
    r.pre.colwise() += w.bias(layer);
    r.act = leaky(r.pre);
    return r;
}

// Accumulates parameter gradients into `grad`; returns dL/d(input) if wanted.
RowMatrix conv3_backward(const NetWeights& w, std::size_t layer, const Conv3Result& fwd, const RowMatrix& d_act, int h,
                         int wd, NetWeights& grad, bool need_input_grad) {
    const RowMatrix d_pre = leaky_backward(fwd.pre, d_act);
    grad.weight(layer).noalias() += d_pre * fwd.cols.transpose();
    grad.bias(layer) += d_pre.rowwise().sum();
    if (!need_input_grad) return {};
    const RowMatrix d_cols = w.weight(layer).transpose() * d_pre;
    return col2im(d_cols, w.layers[layer].in_channels, h, wd);
}

// kConvsPerBlock chained convolutions starting at `first`.
using Block = std::vector<Conv3Result>;

Block block_forward(const NetWeights& w, std::size_t first, const RowMatrix& in, int h, int wd) {
    Block b;
    b.reserve(kConvsPerBlock);
    b.push_back(conv3_forward(w, first, in, h, wd));
    for (int k = 1; k < kConvsPerBlock; ++k) b.push_back(conv3_forward(w, first + k, b.back().act, h, wd));
    return b;
}

RowMatrix block_backward(const NetWeights& w, std::size_t first, const Block& b, RowMatrix d_act, int h, int wd,
                         NetWeights& grad, bool need_input_grad) {
    for (int k = kConvsPerBlock - 1; k >= 0; --k)
        d_act = conv3_backward(w, first + k, b[k], d_act, h, wd, grad, k > 0 || need_input_grad);
    return d_act;
}

class ForwardPass {
public:
    ForwardPass(const NetWeights& w, const ScalarField& atrophy, const LabelField& labels) : w_(w) {
        if (!atrophy.same_shape(labels)) throw Error(ErrorCode::ShapeMismatch, "atrophy map and labels differ in shape");
        const int div = w.arch.divisor();
        if (atrophy.width() % div != 0 || atrophy.height() % div != 0)
            throw Error(ErrorCode::ShapeMismatch,
                        "grid sides must be multiples of " + std::to_string(div) + " for this network");
        const int levels = w.arch.levels();
        for (int l = 0; l < levels; ++l) {
            hs_.push_back(atrophy.height() >> l);
            ws_.push_back(atrophy.width() >> l);
        }

        const int p = static_cast<int>(atrophy.size());
        RowMatrix input = RowMatrix::Zero(kNetInputChannels, p);
        for (int i = 0; i < p; ++i) {
            input(0, i) = kAtrophyInputScale * (atrophy[i] - 1.0);
            input(1 + static_cast<int>(labels[i]), i) = 1.0;
        }

        enc_.resize(levels);
        enc_[0] = block_forward(w, encoder_layer(0), input, hs_[0], ws_[0]);
        for (int l = 1; l < levels; ++l)
            enc_[l] = block_forward(w, encoder_layer(l), avg_pool(act(enc_[l - 1]), hs_[l - 1], ws_[l - 1]), hs_[l],
                                    ws_[l]);

        dec_.resize(levels > 1 ? levels - 1 : 0);
        for (int l = levels - 2; l >= 0; --l) {
            const RowMatrix& below = l + 1 == levels - 1 ? act(enc_[l + 1]) : act(dec_[l + 1]);
            const RowMatrix& skip = act(enc_[l]);
            RowMatrix cat(below.rows() + skip.rows(), hs_[l] * ws_[l]);
            cat.topRows(below.rows()) = upsample(below, hs_[l], ws_[l]);
            cat.bottomRows(skip.rows()) = skip;
            dec_[l] = block_forward(w, decoder_layer(l), cat, hs_[l], ws_[l]);
        }

        const std::size_t fin = w.layer_count() - 1;
        out_.noalias() = w.weight(fin) * top();
        out_.colwise() += w.bias(fin);
    }

    DisplacementField displacement(int width, int height) const {
        DisplacementField u(width, height);
        for (std::size_t i = 0; i < u.size(); ++i) {
            u.ux[i] = out_(0, static_cast<Eigen::Index>(i));
            u.uy[i] = out_(1, static_cast<Eigen::Index>(i));
        }
        return u;
    }

    void backward(const DisplacementField& upstream, NetWeights& grad) const {
        const int levels = w_.arch.levels();
        const Eigen::Index p = out_.cols();
        if (static_cast<Eigen::Index>(upstream.size()) != p)
            throw Error(ErrorCode::ShapeMismatch, "upstream gradient does not match the network output");
        RowMatrix d_out(kNetOutputChannels, p);
        for (Eigen::Index i = 0; i < p; ++i) {
            d_out(0, i) = upstream.ux[static_cast<std::size_t>(i)];
            d_out(1, i) = upstream.uy[static_cast<std::size_t>(i)];
        }

        const std::size_t fin = w_.layer_count() - 1;
        grad.weight(fin).noalias() += d_out * top().transpose();
        grad.bias(fin) += d_out.rowwise().sum();
        RowMatrix d_top = w_.weight(fin).transpose() * d_out;

        std::vector<RowMatrix> d_enc(levels);
        for (int l = 0; l < levels; ++l) d_enc[l] = RowMatrix::Zero(act(enc_[l]).rows(), act(enc_[l]).cols());

        if (levels == 1) {
            d_enc[0] = std::move(d_top);
        } else {
            RowMatrix d_dec = std::move(d_top);
            for (int l = 0; l <= levels - 2; ++l) {
                const RowMatrix d_cat =
                    block_backward(w_, decoder_layer(l), dec_[l], std::move(d_dec), hs_[l], ws_[l], grad, true);
                const Eigen::Index skip_rows = act(enc_[l]).rows();
                const Eigen::Index below_rows = d_cat.rows() - skip_rows;
                d_enc[l] += d_cat.bottomRows(skip_rows);
                RowMatrix d_below = upsample_backward(d_cat.topRows(below_rows), hs_[l], ws_[l]);
                if (l + 1 == levels - 1) d_enc[l + 1] += d_below;
                else d_dec = std::move(d_below);
            }
        }

        for (int l = levels - 1; l >= 0; --l) {
            const RowMatrix d_in =
                block_backward(w_, encoder_layer(l), enc_[l], std::move(d_enc[l]), hs_[l], ws_[l], grad, l > 0);
            if (l > 0) d_enc[l - 1] += avg_pool_backward(d_in, hs_[l - 1], ws_[l - 1]);
        }
    }

private:
    static std::size_t encoder_layer(int level) { return static_cast<std::size_t>(level * kConvsPerBlock); }
    std::size_t decoder_layer(int level) const {
        // decoders follow the encoders, deepest first
        const int levels = w_.arch.levels();
        return static_cast<std::size_t>((levels + (levels - 2 - level)) * kConvsPerBlock);
    }
    static const RowMatrix& act(const Block& b) { return b.back().act; }
    const RowMatrix& top() const { return dec_.empty() ? act(enc_[0]) : act(dec_[0]); }

    const NetWeights& w_;
    std::vector<int> hs_, ws_;
    std::vector<Block> enc_;
    std::vector<Block> dec_;
    RowMatrix out_;
};

}  // namespace

DisplacementField net_forward(const NetWeights& w, const ScalarField& atrophy, const LabelField& labels) {
    return ForwardPass(w, atrophy, labels).displacement(atrophy.width(), atrophy.height());
}

NetWeights net_backward(const NetWeights& w, const ScalarField& atrophy, const LabelField& labels,
                        const DisplacementField& upstream) {
    NetWeights grad = NetWeights::zeros(w.arch);
    ForwardPass(w, atrophy, labels).backward(upstream, grad);
    return grad;
}

TrainResult train(std::span<const TrainingSample> dataset, const TrainOptions& opts, const NetArchitecture& arch) {
    if (dataset.empty()) throw Error(ErrorCode::InvalidArgument, "training set is empty");
    if (opts.epochs < 1 || opts.batch_size < 1) throw Error(ErrorCode::InvalidArgument, "epochs and batch_size must be >= 1");
    if (!(opts.learning_rate > 0)) throw Error(ErrorCode::InvalidArgument, "learning_rate must be positive");
    for (const auto& s : dataset)
        if (!s.atrophy.same_shape(dataset.front().atrophy) || !s.labels.same_shape(s.atrophy))
            throw Error(ErrorCode::ShapeMismatch, "training samples differ in shape");

    std::vector<LossModel> models;
    models.reserve(dataset.size());
    for (const auto& s : dataset) models.emplace_back(s.atrophy, s.labels, opts.params);

    TrainResult result{init_weights(arch, opts.seed), {}};
    NetWeights& w = result.weights;
    result.log.initial_loss = mean_prediction_loss(w, dataset, opts.params);

    Rng shuffle_rng(opts.seed ^ 0x5DEECE66DULL);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Adam adam(w.params.size(), AdamConfig{opts.learning_rate});
    NetWeights grad = NetWeights::zeros(arch);
    DisplacementField du;

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng.index(i + 1)]);
        double epoch_sum = 0.0;
        std::size_t epoch_used = 0, epoch_skipped = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opts.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(opts.batch_size));
            std::fill(grad.params.begin(), grad.params.end(), 0.0);
            std::size_t used = 0;
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t s = order[k];
                ForwardPass pass(w, dataset[s].atrophy, dataset[s].labels);
                const DisplacementField u = pass.displacement(dataset[s].atrophy.width(), dataset[s].atrophy.height());
                double loss;
                try {
                    loss = models[s].loss_and_gradient(u, du).total;
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::InvertedElement) throw;
                    ++epoch_skipped;
                    continue;
                }
                epoch_sum += loss;
                ++used;
                pass.backward(du, grad);
            }
            if (used == 0) continue;
            epoch_used += used;
            const double scale = 1.0 / static_cast<double>(used);
            for (double& g : grad.params) g *= scale;
            adam.step(w.params, grad.params);
        }
        result.log.epoch_loss.push_back(epoch_used ? epoch_sum / static_cast<double>(epoch_used) : 0.0);
        result.log.epoch_skipped.push_back(epoch_skipped);
    }
    return result;
}

double mean_prediction_loss(const NetWeights& w, std::span<const TrainingSample> samples, const EnergyParams& params) {
    if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "no samples");
    double sum = 0.0;
    for (const auto& s : samples) sum += total_loss(net_forward(w, s.atrophy, s.labels), s.atrophy, s.labels, params).total;
    return sum / static_cast<double>(samples.size());
}

NetGradCheckReport net_gradient_check(const NetWeights& w, const ScalarField& atrophy, const LabelField& labels,
                                      const EnergyParams& params, std::size_t n_probes, double step, double tolerance,
                                      std::uint64_t seed) {
    if (n_probes == 0) throw Error(ErrorCode::InvalidArgument, "n_probes must be >= 1");
    const LossModel model(atrophy, labels, params);
    DisplacementField du;
    model.loss_and_gradient(net_forward(w, atrophy, labels), du);
    const NetWeights analytic = net_backward(w, atrophy, labels, du);

    Rng rng(seed);
    NetGradCheckReport report;
    report.n_probes = n_probes;
    NetWeights probe = w;
    for (std::size_t k = 0; k < n_probes; ++k) {
        const std::size_t i = rng.index(w.params.size());
        const double saved = probe.params[i];
        probe.params[i] = saved + step;
        const double plus = model.loss(net_forward(probe, atrophy, labels)).total;
        probe.params[i] = saved - step;
        const double minus = model.loss(net_forward(probe, atrophy, labels)).total;
        probe.params[i] = saved;
        const double numeric = (plus - minus) / (2.0 * step);
        const double abs_err = std::abs(analytic.params[i] - numeric);
        report.max_abs_error = std::max(report.max_abs_error, abs_err);
        report.max_rel_error = std::max(report.max_rel_error, abs_err / std::max(1.0, std::abs(numeric)));
    }
    report.pass = report.max_rel_error < tolerance;
    return report;
}

namespace {
constexpr std::string_view kCheckpointMagic = "NAWT";
}

std::vector<std::uint8_t> encode_checkpoint(const NetWeights& w) {
    ByteWriter out;
    out.raw(kCheckpointMagic);
    out.u32(kCheckpointVersion);
    out.u32(static_cast<std::uint32_t>(w.arch.levels()));
    for (int c : w.arch.channels) out.u32(static_cast<std::uint32_t>(c));
    for (double v : w.params) out.f64(v);
    return std::move(out.bytes());
}

NetWeights decode_checkpoint(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    if (in.raw(kCheckpointMagic.size()) != kCheckpointMagic) throw Error(ErrorCode::BadMagic, "not a NAWT checkpoint");
    const std::uint32_t version = in.u32();
    if (version != kCheckpointVersion)
        throw Error(ErrorCode::UnsupportedVersion, "checkpoint version " + std::to_string(version));
    const std::uint32_t levels = in.u32();
    if (levels < 1 || levels > 8) throw Error(ErrorCode::BadHeader, "invalid level count");
    NetArchitecture arch;
    arch.channels.clear();
    for (std::uint32_t l = 0; l < levels; ++l) {
        const std::uint32_t c = in.u32();
        if (c < 1 || c > 4096) throw Error(ErrorCode::BadHeader, "invalid channel width");
        arch.channels.push_back(static_cast<int>(c));
    }
    NetWeights w = NetWeights::zeros(arch);
    if (in.remaining() < w.params.size() * 8) throw Error(ErrorCode::TruncatedPayload, "checkpoint parameters truncated");
    if (in.remaining() > w.params.size() * 8) throw Error(ErrorCode::BadHeader, "trailing bytes after parameters");
    for (double& v : w.params) v = in.f64();
    return w;
}

void save_checkpoint(const std::filesystem::path& path, const NetWeights& w) { write_bytes(path, encode_checkpoint(w)); }

NetWeights load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_bytes(path)); }

}  // namespace neodeform
