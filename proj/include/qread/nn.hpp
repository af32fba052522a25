#pragma once

// Float feed-forward networks: single-logit binary classifiers with ReLU
// hidden layers, trained by mini-batch gradient descent (SGD or Adam).
// The same trainer core drives both plain supervised runs and the
// distillation objective.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "qread/error.hpp"

namespace qread {

struct NetworkSpec {
    std::uint32_t input_dim = 1;
    std::vector<std::uint32_t> hidden_dims;
    std::uint32_t output_dim = 1;  // single logit throughout

    void validate() const;
    std::size_t n_layers() const { return hidden_dims.size() + 1; }
    std::pair<std::uint32_t, std::uint32_t> layer_shape(std::size_t layer) const;

    static NetworkSpec student_a() { return {31, {16, 8}, 1}; }
    static NetworkSpec student_b() { return {201, {16, 8}, 1}; }
    static NetworkSpec teacher(std::uint32_t input_dim = 1000) {
        return {input_dim, {1000, 500, 250}, 1};
    }
};

bool operator==(const NetworkSpec& a, const NetworkSpec& b);

struct Layer {
    std::uint32_t in = 0, out = 0;
    std::vector<double> w;  // row-major, out x in
    std::vector<double> b;  // out
};

struct Network {
    NetworkSpec spec;
    std::vector<Layer> layers;
};

std::uint64_t param_count(const NetworkSpec& spec);

// Variance-scaled uniform init (bound sqrt(6 / (fan_in + fan_out))),
// zero biases; deterministic under the seed.
Network init_network(const NetworkSpec& spec, std::uint64_t seed);

double forward(const Network& net, std::span<const double> input);

// Logits for a row-major batch; processed in fixed-size chunks so memory
// stays bounded for wide networks.
void forward_batch(const Network& net, const double* x, std::size_t n, double* logits);
std::vector<double> forward_batch(const Network& net, std::span<const double> x);

// state = 1 iff logit > 0
std::vector<std::uint8_t> predict(std::span<const double> logits);

struct TrainConfig {
    double learning_rate = 1e-3;
    std::uint32_t epochs = 1;
    std::uint32_t batch_size = 256;
    std::uint64_t seed = 1;
    enum class Optimizer { sgd, adam } optimizer = Optimizer::adam;
};

// Per-batch objective: fills d(mean loss)/d logit_i (before the 1/B
// factor) and returns the mean loss over the batch.
using BatchObjective = std::function<double(std::span<const std::uint32_t> rows,
                                            std::span<const double> logits,
                                            std::span<double> dldz)>;

struct TrainStats {
    // Loss on a fixed probe batch: entry 0 before training, then one entry
    // per epoch.
    std::vector<double> probe_losses;
};

// Mini-batch trainer over a row-major feature matrix. Deterministic under
// (data order, seed, config). Throws Error when the loss turns non-finite.
TrainStats train_minibatch(Network& net, const double* x, std::size_t n,
                           const BatchObjective& objective, const TrainConfig& cfg);

// Numerically stable binary cross-entropy of sigmoid(logit) against a
// 0/1 label, and its logit derivative sigmoid(logit) - label.
double bce_loss(double logit, double label);
double sigmoid(double logit);

// Supervised training on a feature matrix (used directly for toy problems
// and as the alpha = 1 distillation path).
TrainStats train_supervised(Network& net, const double* x, std::span<const std::uint8_t> labels,
                            const TrainConfig& cfg);

// Teacher training on flattened raw traces: standardizes x per input
// dimension in place, trains, then folds the standardization into the
// first layer so the returned network consumes unstandardized inputs.
struct TeacherResult {
    Network net;
    TrainStats stats;
};
TeacherResult train_teacher(std::vector<double>& x, std::span<const std::uint8_t> labels,
                            const NetworkSpec& spec, const TrainConfig& cfg);

// QNNF weight file.
std::vector<std::uint8_t> serialize_network(const Network& net);
Network deserialize_network(std::span<const std::uint8_t> bytes);
void save_network(const Network& net, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

}  // namespace qread
