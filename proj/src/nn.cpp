#include "qread/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "qread/io.hpp"
#include "qread/kernels.hpp"
#include "qread/parallel.hpp"
#include "qread/rng.hpp"

namespace qread {

namespace {

constexpr char kMagic[5] = "QNNF";
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kForwardChunk = 512;

void relu_inplace(double* z, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) z[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void add_bias_rows(double* z, const std::vector<double>& b, std::size_t n) {
    const std::size_t m = b.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) z[i * m + j] += b[j];
}

// Batch activations for training: z[l] and a[l] per layer, row-major.
struct Activations {
    std::vector<std::vector<double>> z;  // pre-activation per layer
    std::vector<std::vector<double>> a;  // post-activation per layer (a.back() = logits)
};

void forward_training(const Network& net, const double* x, std::size_t n, Activations& acts) {
    const std::size_t nl = net.layers.size();
    acts.z.resize(nl);
    acts.a.resize(nl);
    const double* in = x;
    for (std::size_t l = 0; l < nl; ++l) {
        const Layer& layer = net.layers[l];
        acts.z[l].resize(n * layer.out);
        kernels::matmul_nt(in, layer.w.data(), acts.z[l].data(), n, layer.in, layer.out);
        add_bias_rows(acts.z[l].data(), layer.b, n);
        acts.a[l] = acts.z[l];
        if (l + 1 < nl) relu_inplace(acts.a[l].data(), acts.a[l].size());
        in = acts.a[l].data();
    }
}

struct AdamState {
    std::vector<std::vector<double>> mw, vw, mb, vb;
    std::uint64_t step = 0;
};

void apply_update(Layer& layer, const std::vector<double>& dw, const std::vector<double>& db,
                  const TrainConfig& cfg, AdamState* adam, std::size_t layer_idx) {
    if (cfg.optimizer == TrainConfig::Optimizer::sgd) {
        for (std::size_t i = 0; i < layer.w.size(); ++i) layer.w[i] -= cfg.learning_rate * dw[i];
        for (std::size_t i = 0; i < layer.b.size(); ++i) layer.b[i] -= cfg.learning_rate * db[i];
        return;
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    auto& mw = adam->mw[layer_idx];
    auto& vw = adam->vw[layer_idx];
    auto& mb = adam->mb[layer_idx];
    auto& vb = adam->vb[layer_idx];
    const double t = static_cast<double>(adam->step);
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < layer.w.size(); ++i) {
        mw[i] = beta1 * mw[i] + (1.0 - beta1) * dw[i];
        vw[i] = beta2 * vw[i] + (1.0 - beta2) * dw[i] * dw[i];
        layer.w[i] -= cfg.learning_rate * (mw[i] / c1) / (std::sqrt(vw[i] / c2) + eps);
    }
    for (std::size_t i = 0; i < layer.b.size(); ++i) {
        mb[i] = beta1 * mb[i] + (1.0 - beta1) * db[i];
        vb[i] = beta2 * vb[i] + (1.0 - beta2) * db[i] * db[i];
        layer.b[i] -= cfg.learning_rate * (mb[i] / c1) / (std::sqrt(vb[i] / c2) + eps);
    }
}

}  // namespace

void NetworkSpec::validate() const {
    if (input_dim < 1) throw Error("network input_dim must be >= 1");
    for (auto h : hidden_dims)
        if (h < 1) throw Error("network hidden dims must be >= 1");
    if (output_dim != 1) throw Error("network output_dim must be 1");
}

std::pair<std::uint32_t, std::uint32_t> NetworkSpec::layer_shape(std::size_t layer) const {
    std::uint32_t in = layer == 0 ? input_dim : hidden_dims[layer - 1];
    std::uint32_t out = layer == hidden_dims.size() ? output_dim : hidden_dims[layer];
    return {in, out};
}

bool operator==(const NetworkSpec& a, const NetworkSpec& b) {
    return a.input_dim == b.input_dim && a.hidden_dims == b.hidden_dims &&
           a.output_dim == b.output_dim;
}

std::uint64_t param_count(const NetworkSpec& spec) {
    spec.validate();
    std::uint64_t total = 0;
    for (std::size_t l = 0; l < spec.n_layers(); ++l) {
        auto [in, out] = spec.layer_shape(l);
        total += (std::uint64_t(in) + 1) * out;
    }
    return total;
}

Network init_network(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    Network net;
    net.spec = spec;
    net.layers.resize(spec.n_layers());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto [in, out] = spec.layer_shape(l);
        Layer& layer = net.layers[l];
        layer.in = in;
        layer.out = out;
        layer.w.resize(std::size_t(in) * out);
        layer.b.assign(out, 0.0);
        double bound = std::sqrt(6.0 / (double(in) + double(out)));
        Rng rng = Rng::substream(seed, l);
        for (auto& v : layer.w) v = rng.uniform(-bound, bound);
    }
    return net;
}

double forward(const Network& net, std::span<const double> input) {
    if (input.size() != net.spec.input_dim)
        throw Error("forward: input has " + std::to_string(input.size()) + " entries, expected " +
                    std::to_string(net.spec.input_dim));
    std::vector<double> cur(input.begin(), input.end());
    std::vector<double> next;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& layer = net.layers[l];
        next.resize(layer.out);
        for (std::uint32_t o = 0; o < layer.out; ++o)
            next[o] = kernels::dot(layer.w.data() + std::size_t(o) * layer.in, cur.data(), layer.in) +
                      layer.b[o];
        if (l + 1 < net.layers.size()) relu_inplace(next.data(), next.size());
        cur.swap(next);
    }
    return cur[0];
}

void forward_batch(const Network& net, const double* x, std::size_t n, double* logits) {
    std::vector<double> buf_a, buf_b;
    for (std::size_t start = 0; start < n; start += kForwardChunk) {
        std::size_t count = std::min(kForwardChunk, n - start);
        const double* in = x + start * net.spec.input_dim;
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            const Layer& layer = net.layers[l];
            auto& out = (l % 2 == 0) ? buf_a : buf_b;
            out.resize(count * layer.out);
            kernels::matmul_nt(in, layer.w.data(), out.data(), count, layer.in, layer.out);
            add_bias_rows(out.data(), layer.b, count);
            if (l + 1 < net.layers.size()) relu_inplace(out.data(), out.size());
            in = out.data();
        }
        for (std::size_t i = 0; i < count; ++i) logits[start + i] = in[i];
    }
}

std::vector<double> forward_batch(const Network& net, std::span<const double> x) {
    std::size_t n = x.size() / net.spec.input_dim;
    std::vector<double> logits(n);
    forward_batch(net, x.data(), n, logits.data());
    return logits;
}

std::vector<std::uint8_t> predict(std::span<const double> logits) {
    std::vector<std::uint8_t> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] > 0.0 ? 1 : 0;
    return out;
}

double sigmoid(double logit) {
    if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
    double e = std::exp(logit);
    return e / (1.0 + e);
}

double bce_loss(double logit, double label) {
    // max(z,0) - z*y + log(1 + exp(-|z|))
    return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

TrainStats train_minibatch(Network& net, const double* x, std::size_t n,
                           const BatchObjective& objective, const TrainConfig& cfg) {
    if (n == 0) throw Error("training set is empty");
    if (cfg.epochs < 1 || cfg.batch_size < 1) throw Error("epochs and batch_size must be >= 1");
    if (!(cfg.learning_rate > 0)) throw Error("learning_rate must be > 0");
    const std::size_t dim = net.spec.input_dim;
    const std::size_t bmax = std::min<std::size_t>(cfg.batch_size, n);

    AdamState adam;
    if (cfg.optimizer == TrainConfig::Optimizer::adam) {
        adam.mw.resize(net.layers.size());
        adam.vw.resize(net.layers.size());
        adam.mb.resize(net.layers.size());
        adam.vb.resize(net.layers.size());
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            adam.mw[l].assign(net.layers[l].w.size(), 0.0);
            adam.vw[l].assign(net.layers[l].w.size(), 0.0);
            adam.mb[l].assign(net.layers[l].b.size(), 0.0);
            adam.vb[l].assign(net.layers[l].b.size(), 0.0);
        }
    }

    // Fixed probe batch: the first bmax rows in data order.
    std::vector<std::uint32_t> probe_rows(bmax);
    std::iota(probe_rows.begin(), probe_rows.end(), 0u);
    std::vector<double> probe_x(bmax * dim);
    for (std::size_t i = 0; i < bmax; ++i)
        std::memcpy(probe_x.data() + i * dim, x + probe_rows[i] * dim, dim * sizeof(double));
    std::vector<double> probe_logits(bmax), probe_grad(bmax);

    auto probe_loss = [&]() {
        forward_batch(net, probe_x.data(), bmax, probe_logits.data());
        return objective(probe_rows, probe_logits, probe_grad);
    };

    TrainStats stats;
    stats.probe_losses.push_back(probe_loss());

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::vector<double> batch_x(bmax * dim);
    std::vector<std::uint32_t> batch_rows(bmax);
    std::vector<double> logits(bmax), dldz(bmax);
    Activations acts;
    std::vector<double> dw, db, delta, delta_prev;

    for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng = Rng::substream(cfg.seed, epoch + 1);
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        for (std::size_t start = 0; start < n; start += bmax) {
            const std::size_t b = std::min(bmax, n - start);
            for (std::size_t i = 0; i < b; ++i) {
                batch_rows[i] = order[start + i];
                std::memcpy(batch_x.data() + i * dim, x + std::size_t(batch_rows[i]) * dim,
                            dim * sizeof(double));
            }

            forward_training(net, batch_x.data(), b, acts);
            const auto& logit_layer = acts.a.back();
            for (std::size_t i = 0; i < b; ++i) logits[i] = logit_layer[i];

            double loss = objective(std::span(batch_rows.data(), b), std::span(logits.data(), b),
                                    std::span(dldz.data(), b));
            if (!std::isfinite(loss))
                throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(start / bmax));

            // Backward pass; delta starts as d(mean loss)/d logits.
            delta.assign(b, 0.0);
            for (std::size_t i = 0; i < b; ++i) delta[i] = dldz[i] / double(b);

            if (cfg.optimizer == TrainConfig::Optimizer::adam) ++adam.step;
            for (std::size_t l = net.layers.size(); l-- > 0;) {
                Layer& layer = net.layers[l];
                const double* a_prev = l == 0 ? batch_x.data() : acts.a[l - 1].data();
                dw.resize(layer.w.size());
                db.resize(layer.b.size());
                kernels::matmul_tn(delta.data(), a_prev, dw.data(), b, layer.out, layer.in);
                kernels::col_sums(delta.data(), db.data(), b, layer.out);

                if (l > 0) {
                    delta_prev.resize(b * layer.in);
                    kernels::matmul_nn(delta.data(), layer.w.data(), delta_prev.data(), b, layer.out,
                                       layer.in);
                    const auto& z_prev = acts.z[l - 1];
                    for (std::size_t i = 0; i < delta_prev.size(); ++i)
                        if (z_prev[i] <= 0.0) delta_prev[i] = 0.0;
                    delta.swap(delta_prev);
                }
                apply_update(layer, dw, db, cfg, &adam, l);
            }
        }
        stats.probe_losses.push_back(probe_loss());
    }
    return stats;
}

TrainStats train_supervised(Network& net, const double* x, std::span<const std::uint8_t> labels,
                            const TrainConfig& cfg) {
    BatchObjective obj = [&labels](std::span<const std::uint32_t> rows, std::span<const double> logits,
                                   std::span<double> dldz) {
        double loss = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double y = labels[rows[i]] ? 1.0 : 0.0;
            loss += bce_loss(logits[i], y);
            dldz[i] = sigmoid(logits[i]) - y;
        }
        return loss / double(rows.size());
    };
    return train_minibatch(net, x, labels.size(), obj, cfg);
}

TeacherResult train_teacher(std::vector<double>& x, std::span<const std::uint8_t> labels,
                            const NetworkSpec& spec, const TrainConfig& cfg) {
    spec.validate();
    const std::size_t dim = spec.input_dim;
    const std::size_t n = labels.size();
    if (x.size() != n * dim) throw Error("teacher input matrix does not match label count");
    if (n == 0) throw Error("teacher training set is empty");

    // Per-dimension standardization from training statistics.
    std::vector<double> mean(dim, 0.0), stdev(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) mean[j] += x[i * dim + j];
    for (std::size_t j = 0; j < dim; ++j) mean[j] /= double(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) {
            double d = x[i * dim + j] - mean[j];
            stdev[j] += d * d;
        }
    for (std::size_t j = 0; j < dim; ++j) {
        stdev[j] = std::sqrt(stdev[j] / double(n));
        if (!(stdev[j] > 0)) stdev[j] = 1.0;  // constant input dimension
    }
    parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t i) {
        for (std::size_t j = 0; j < dim; ++j) {
            double& v = x[std::size_t(i) * dim + j];
            v = (v - mean[j]) / stdev[j];
        }
    });

    TeacherResult result;
    result.net = init_network(spec, cfg.seed);
    result.stats = train_supervised(result.net, x.data(), labels, cfg);

    // Fold the standardization into the first layer so the stored network
    // consumes raw inputs: w'[o][j] = w[o][j]/std[j], b'[o] -= sum_j w'[o][j]*mean[j].
    Layer& first = result.net.layers[0];
    for (std::uint32_t o = 0; o < first.out; ++o) {
        double shift = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            double& w = first.w[std::size_t(o) * dim + j];
            w /= stdev[j];
            shift += w * mean[j];
        }
        first.b[o] -= shift;
    }
    return result;
}

std::vector<std::uint8_t> serialize_network(const Network& net) {
    ByteWriter w;
    w.magic(kMagic);
    w.u16(kVersion);
    w.u16(static_cast<std::uint16_t>(net.layers.size()));
    for (const auto& layer : net.layers) {
        w.u32(layer.in);
        w.u32(layer.out);
        for (double v : layer.w) w.f64(v);
        for (double v : layer.b) w.f64(v);
    }
    return w.data();
}

Network deserialize_network(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_magic(kMagic, "network file");
    std::uint16_t version = r.u16();
    if (version != kVersion)
        throw ParseError("unsupported network file version " + std::to_string(version), 4);
    std::uint16_t n_layers = r.u16();
    if (n_layers < 1) throw ParseError("network file has no layers", 6);

    Network net;
    net.layers.resize(n_layers);
    for (auto& layer : net.layers) {
        layer.in = r.u32();
        layer.out = r.u32();
        if (layer.in < 1 || layer.out < 1) throw ParseError("bad layer shape", r.pos() - 8);
        layer.w.resize(std::size_t(layer.in) * layer.out);
        layer.b.resize(layer.out);
        for (auto& v : layer.w) v = r.f64();
        for (auto& v : layer.b) v = r.f64();
    }
    r.expect_end("network file");

    net.spec.input_dim = net.layers.front().in;
    net.spec.output_dim = net.layers.back().out;
    for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) {
        if (net.layers[l].out != net.layers[l + 1].in)
            throw ParseError("layer shapes are inconsistent", 0);
        net.spec.hidden_dims.push_back(net.layers[l].out);
    }
    net.spec.validate();
    return net;
}

void save_network(const Network& net, const std::filesystem::path& path) {
    write_file(path, serialize_network(net));
}

Network load_network(const std::filesystem::path& path) {
    return deserialize_network(read_file(path));
}

}  // namespace qread
