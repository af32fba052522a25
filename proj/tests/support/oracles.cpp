#include "support/oracles.hpp"

#include <cmath>
#include <random>

#include "qread/rng.hpp"

namespace qread::testing {

namespace {

// Standalone envelope + scalar, written directly from the defining
// formula so the oracle shares no code with the library implementation.
struct OracleFilter {
    std::vector<double> weights;  // concatenated I then Q

    static OracleFilter fit(const TraceSet& set, std::uint16_t qubit) {
        const std::uint32_t s = set.header.samples_per_channel;
        const std::size_t width = 2 * std::size_t(s);
        std::vector<double> sum0(width, 0.0), sum1(width, 0.0);
        std::vector<double> sq0(width, 0.0), sq1(width, 0.0);
        std::size_t n0 = 0, n1 = 0;
        std::vector<double> row(width);
        for (const auto& rec : set.records) {
            auto ci = rec.channel_i(qubit, s);
            auto cq = rec.channel_q(qubit, s);
            for (std::uint32_t t = 0; t < s; ++t) row[t] = double(ci[t]) * set.header.adc_scale;
            for (std::uint32_t t = 0; t < s; ++t) row[s + t] = double(cq[t]) * set.header.adc_scale;
            bool excited = rec.qubit_state(qubit);
            auto& sum = excited ? sum1 : sum0;
            auto& sq = excited ? sq1 : sq0;
            (excited ? n1 : n0) += 1;
            for (std::size_t t = 0; t < width; ++t) {
                sum[t] += row[t];
                sq[t] += row[t] * row[t];
            }
        }
        OracleFilter f;
        f.weights.resize(width);
        for (std::size_t t = 0; t < width; ++t) {
            double m0 = sum0[t] / double(n0);
            double m1 = sum1[t] / double(n1);
            double v0 = sq0[t] / double(n0) - m0 * m0;
            double v1 = sq1[t] / double(n1) - m1 * m1;
            f.weights[t] = (m0 - m1) / (v0 + v1 + 1e-12);
        }
        return f;
    }

    double scalar(const TraceSet& set, const ReadoutRecord& rec, std::uint16_t qubit) const {
        const std::uint32_t s = set.header.samples_per_channel;
        auto ci = rec.channel_i(qubit, s);
        auto cq = rec.channel_q(qubit, s);
        double acc = 0.0;
        for (std::uint32_t t = 0; t < s; ++t) acc += weights[t] * double(ci[t]) * set.header.adc_scale;
        for (std::uint32_t t = 0; t < s; ++t)
            acc += weights[s + t] * double(cq[t]) * set.header.adc_scale;
        return acc;
    }
};

double score(const OracleFilter& f, const TraceSet& train, const TraceSet& test,
             std::uint16_t qubit) {
    double m0 = 0.0, m1 = 0.0;
    std::size_t n0 = 0, n1 = 0;
    for (const auto& rec : train.records) {
        double v = f.scalar(train, rec, qubit);
        if (rec.qubit_state(qubit)) {
            m1 += v;
            ++n1;
        } else {
            m0 += v;
            ++n0;
        }
    }
    m0 /= double(n0);
    m1 /= double(n1);
    double threshold = 0.5 * (m0 + m1);
    bool excited_below = m1 < m0;

    std::size_t correct = 0;
    for (const auto& rec : test.records) {
        double v = f.scalar(test, rec, qubit);
        bool predicted = excited_below ? (v < threshold) : (v > threshold);
        if (predicted == rec.qubit_state(qubit)) ++correct;
    }
    return double(correct) / double(test.records.size());
}

}  // namespace

double mf_threshold_accuracy(const TraceSet& train, const TraceSet& test, std::uint16_t qubit) {
    OracleFilter f = OracleFilter::fit(train, qubit);
    return score(f, train, test, qubit);
}

double mf_threshold_accuracy(const TraceSet& set, std::uint16_t qubit) {
    return mf_threshold_accuracy(set, set, qubit);
}

double gaussian_bayes_accuracy(double d) { return 0.5 * std::erfc(-d / (2.0 * std::numbers::sqrt2)); }

void gaussian_blobs(std::size_t n_per_class, std::size_t dim, double d, std::uint64_t seed,
                    std::vector<double>& x, std::vector<std::uint8_t>& y) {
    x.resize(2 * n_per_class * dim);
    y.resize(2 * n_per_class);
    Rng rng(seed);
    for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
        bool positive = i % 2 == 1;
        y[i] = positive ? 1 : 0;
        double* row = x.data() + i * dim;
        for (std::size_t j = 0; j < dim; ++j) row[j] = rng.gaussian();
        row[0] += positive ? d / 2.0 : -d / 2.0;
    }
}

TempDir::TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("qread_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

SynthConfig small_desk_synth(std::uint32_t traces_per_config, std::uint64_t seed) {
    // Mirrors configs/desk.json: three high-SNR qubits, one crosstalk-heavy
    // low-SNR qubit (index 1), one in between.
    SynthConfig cfg;
    cfg.samples_per_channel = 500;
    cfg.sample_period_ns = 2.0f;
    cfg.adc_scale = 0.002f;
    cfg.traces_per_config = traces_per_config;
    cfg.seed = seed;
    cfg.qubits = {
        {0.55, -0.30, -0.25, 0.30, 140.0, 5.5, 30000.0},
        {0.53, -0.40, -0.40, 0.40, 1000.0, 1.2, 25000.0},
        {0.45, 0.35, -0.30, -0.25, 120.0, 7.0, 35000.0},
        {-0.50, 0.40, 0.30, -0.35, 150.0, 5.9, 30000.0},
        {0.60, 0.25, -0.30, -0.30, 130.0, 5.9, 40000.0},
    };
    cfg.crosstalk = {
        1.00, 0.05, 0.00, 0.00, 0.00,
        0.45, 1.00, 0.40, 0.05, 0.00,
        0.00, 0.15, 1.00, 0.15, 0.00,
        0.00, 0.05, 0.00, 1.00, 0.05,
        0.00, 0.00, 0.00, 0.05, 1.00,
    };
    return cfg;
}

}  // namespace qread::testing
