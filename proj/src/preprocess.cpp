#include "qread/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qread/io.hpp"
#include "qread/parallel.hpp"

namespace qread {

namespace {

constexpr char kMagic[5] = "QPRE";
constexpr std::uint16_t kVersion = 1;
constexpr double kVarEps = 1e-12;  // guards zero variance on noise-free data

// Per-sample mean and population variance of a set of equal-length traces.
void per_sample_moments(const std::vector<std::vector<double>>& traces, std::vector<double>& mean,
                        std::vector<double>& var) {
    const std::size_t s = traces.front().size();
    const double n = static_cast<double>(traces.size());
    mean.assign(s, 0.0);
    var.assign(s, 0.0);
    for (const auto& tr : traces) {
        if (tr.size() != s) throw DataError("matched-filter training traces have mismatched lengths");
        for (std::size_t t = 0; t < s; ++t) mean[t] += tr[t];
    }
    for (std::size_t t = 0; t < s; ++t) mean[t] /= n;
    for (const auto& tr : traces)
        for (std::size_t t = 0; t < s; ++t) {
            double d = tr[t] - mean[t];
            var[t] += d * d;
        }
    for (std::size_t t = 0; t < s; ++t) var[t] /= n;
}

std::vector<double> envelope_channel(const std::vector<double>& mean0, const std::vector<double>& var0,
                                     const std::vector<double>& mean1, const std::vector<double>& var1) {
    std::vector<double> e(mean0.size());
    for (std::size_t t = 0; t < e.size(); ++t)
        e[t] = (mean0[t] - mean1[t]) / (var0[t] + var1[t] + kVarEps);
    return e;
}

}  // namespace

std::uint32_t AveragingSpec::window(std::uint32_t s) const {
    if (groups_per_channel < 1) throw DataError("groups_per_channel must be >= 1");
    if (window_override) return *window_override;
    return s / groups_per_channel;
}

std::vector<double> average_windows(std::span<const double> channel, const AveragingSpec& spec) {
    const auto s = static_cast<std::uint32_t>(channel.size());
    const std::uint32_t g = spec.groups_per_channel;
    const std::uint32_t w = spec.window(s);
    if (w < 1) throw DataError("averaging window is empty (trace shorter than group count)");
    if (std::uint64_t(g) * w > s)
        throw DataError("averaging needs " + std::to_string(std::uint64_t(g) * w) +
                        " samples but the channel has " + std::to_string(s));
    std::vector<double> out(g);
    for (std::uint32_t i = 0; i < g; ++i) {
        double sum = 0.0;
        for (std::uint32_t t = 0; t < w; ++t) sum += channel[std::size_t(i) * w + t];
        out[i] = sum / double(w);
    }
    return out;
}

NormStats fit_norm_stats(std::span<const double> stream) {
    if (stream.empty()) throw DataError("cannot fit normalization on an empty stream");
    double x_min = stream[0];
    double sum = 0.0;
    for (double v : stream) {
        x_min = std::min(x_min, v);
        sum += v;
    }
    double mean = sum / double(stream.size());
    double sq = 0.0;
    for (double v : stream) {
        double d = v - mean;
        sq += d * d;
    }
    double sigma = std::sqrt(sq / double(stream.size()));
    if (!(sigma > 0)) throw DataError("degenerate stream: zero variance");
    NormStats stats;
    stats.x_min = x_min;
    stats.sigma = sigma;
    // round(log2 sigma) with exact .5 ties toward +inf
    stats.shift_k = static_cast<std::int32_t>(std::floor(std::log2(sigma) + 0.5));
    return stats;
}

double normalize(double x, const NormStats& stats, NormMode mode) {
    double div = mode == NormMode::exact ? stats.sigma : std::ldexp(1.0, stats.shift_k);
    return (x - stats.x_min) / div;
}

MFEnvelope train_mf_envelope(const std::vector<std::vector<double>>& i0,
                             const std::vector<std::vector<double>>& q0,
                             const std::vector<std::vector<double>>& i1,
                             const std::vector<std::vector<double>>& q1) {
    if (i0.size() < 2 || i1.size() < 2)
        throw DataError("matched-filter training needs at least 2 traces per class");
    if (i0.size() != q0.size() || i1.size() != q1.size())
        throw DataError("matched-filter training needs paired I/Q channels");
    if (i0.front().size() != i1.front().size())
        throw DataError("matched-filter training traces have mismatched lengths");

    std::vector<double> m0, v0, m1, v1;
    MFEnvelope env;
    per_sample_moments(i0, m0, v0);
    per_sample_moments(i1, m1, v1);
    env.e_i = envelope_channel(m0, v0, m1, v1);
    per_sample_moments(q0, m0, v0);
    per_sample_moments(q1, m1, v1);
    env.e_q = envelope_channel(m0, v0, m1, v1);
    return env;
}

double apply_mf(const MFEnvelope& env, std::span<const double> chan_i,
                std::span<const double> chan_q) {
    if (env.e_i.size() != chan_i.size() || env.e_q.size() != chan_q.size())
        throw DataError("matched-filter envelope length does not match the trace length");
    double acc = 0.0;
    for (std::size_t t = 0; t < chan_i.size(); ++t) acc += env.e_i[t] * chan_i[t];
    for (std::size_t t = 0; t < chan_q.size(); ++t) acc += env.e_q[t] * chan_q[t];
    return acc;
}

void analog_channels(const ReadoutRecord& rec, std::uint16_t qubit, std::uint32_t s,
                     double adc_scale, std::vector<double>& out_i, std::vector<double>& out_q) {
    auto ci = rec.channel_i(qubit, s);
    auto cq = rec.channel_q(qubit, s);
    out_i.resize(s);
    out_q.resize(s);
    for (std::uint32_t t = 0; t < s; ++t) {
        out_i[t] = double(ci[t]) * adc_scale;
        out_q[t] = double(cq[t]) * adc_scale;
    }
}

std::vector<double> build_feature_vector(const ReadoutRecord& rec, std::uint16_t qubit,
                                         const TraceSetHeader& header,
                                         const PreprocessConstants& pre, NormMode mode) {
    if (header.samples_per_channel != pre.samples_per_channel)
        throw DataError("record duration (" + std::to_string(header.samples_per_channel) +
                        " samples) does not match the preprocessing constants (" +
                        std::to_string(pre.samples_per_channel) + ")");
    std::vector<double> chan_i, chan_q;
    analog_channels(rec, qubit, header.samples_per_channel, header.adc_scale, chan_i, chan_q);

    AveragingSpec used = pre.averaging;
    used.window_override = pre.window;
    std::vector<double> avg_i = average_windows(chan_i, used);
    std::vector<double> avg_q = average_windows(chan_q, used);

    std::vector<double> out;
    out.reserve(pre.feature_dim());
    for (double v : avg_i) out.push_back(normalize(v, pre.stats[kStreamI], mode));
    for (double v : avg_q) out.push_back(normalize(v, pre.stats[kStreamQ], mode));
    if (pre.include_mf) {
        double mf = apply_mf(pre.envelope, chan_i, chan_q);
        out.push_back(normalize(mf, pre.stats[kStreamMF], mode));
    }
    return out;
}

PreprocessConstants fit_preprocess(const TraceSet& train, std::uint16_t qubit,
                                   const AveragingSpec& spec, bool include_mf) {
    if (train.records.empty()) throw DataError("cannot fit preprocessing on an empty trace set");
    if (qubit >= train.header.n_qubits)
        throw DataError("qubit " + std::to_string(qubit) + " out of range");

    const std::uint32_t s = train.header.samples_per_channel;
    PreprocessConstants pre;
    pre.qubit_id = qubit;
    pre.averaging = spec;
    pre.window = spec.window(s);
    pre.samples_per_channel = s;
    pre.include_mf = include_mf;

    if (include_mf) {
        std::vector<std::vector<double>> i0, q0, i1, q1;
        std::vector<double> ci, cq;
        for (const auto& rec : train.records) {
            analog_channels(rec, qubit, s, train.header.adc_scale, ci, cq);
            if (rec.qubit_state(qubit)) {
                i1.push_back(ci);
                q1.push_back(cq);
            } else {
                i0.push_back(ci);
                q0.push_back(cq);
            }
        }
        pre.envelope = train_mf_envelope(i0, q0, i1, q1);
    }

    // Pool averaged window values per channel, and MF scalars, into the
    // three normalization streams.
    const std::uint32_t g = spec.groups_per_channel;
    const std::size_t n = train.records.size();
    std::vector<double> stream_i(n * g), stream_q(n * g), stream_mf(include_mf ? n : 0);
    AveragingSpec used = pre.averaging;
    used.window_override = pre.window;
    parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t r) {
        std::vector<double> ci, cq;
        analog_channels(train.records[r], qubit, s, train.header.adc_scale, ci, cq);
        std::vector<double> ai = average_windows(ci, used);
        std::vector<double> aq = average_windows(cq, used);
        std::copy(ai.begin(), ai.end(), stream_i.begin() + r * g);
        std::copy(aq.begin(), aq.end(), stream_q.begin() + r * g);
        if (pre.include_mf) stream_mf[r] = apply_mf(pre.envelope, ci, cq);
    });

    pre.stats[kStreamI] = fit_norm_stats(stream_i);
    pre.stats[kStreamQ] = fit_norm_stats(stream_q);
    if (include_mf) pre.stats[kStreamMF] = fit_norm_stats(stream_mf);
    return pre;
}

std::vector<double> build_feature_matrix(const TraceSet& set, std::uint16_t qubit,
                                         const PreprocessConstants& pre, NormMode mode) {
    const std::size_t dim = pre.feature_dim();
    std::vector<double> out(set.records.size() * dim);
    parallel_for(static_cast<std::int64_t>(set.records.size()), [&](std::int64_t r) {
        std::vector<double> f = build_feature_vector(set.records[r], qubit, set.header, pre, mode);
        std::copy(f.begin(), f.end(), out.begin() + r * dim);
    });
    return out;
}

std::vector<std::uint8_t> serialize_preprocess(const PreprocessConstants& pre) {
    if (!pre.include_mf)
        throw DataError("ablated (MF-free) preprocessing constants are not serializable");
    ByteWriter w;
    w.magic(kMagic);
    w.u16(kVersion);
    w.u16(pre.qubit_id);
    w.u32(pre.averaging.groups_per_channel);
    w.u32(pre.window);
    w.u32(pre.samples_per_channel);
    for (const auto& st : pre.stats) {
        w.f64(st.x_min);
        w.f64(st.sigma);
        w.i32(st.shift_k);
    }
    for (double v : pre.envelope.e_i) w.f64(v);
    for (double v : pre.envelope.e_q) w.f64(v);
    return w.data();
}

PreprocessConstants deserialize_preprocess(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_magic(kMagic, "preprocessing file");
    std::uint16_t version = r.u16();
    if (version != kVersion)
        throw ParseError("unsupported preprocessing file version " + std::to_string(version), 4);
    PreprocessConstants pre;
    pre.qubit_id = r.u16();
    pre.averaging.groups_per_channel = r.u32();
    pre.window = r.u32();
    pre.averaging.window_override = pre.window;
    pre.samples_per_channel = r.u32();
    for (auto& st : pre.stats) {
        st.x_min = r.f64();
        st.sigma = r.f64();
        st.shift_k = r.i32();
    }
    pre.envelope.e_i.resize(pre.samples_per_channel);
    pre.envelope.e_q.resize(pre.samples_per_channel);
    for (auto& v : pre.envelope.e_i) v = r.f64();
    for (auto& v : pre.envelope.e_q) v = r.f64();
    r.expect_end("preprocessing file");
    return pre;
}

void save_preprocess(const PreprocessConstants& pre, const std::filesystem::path& path) {
    write_file(path, serialize_preprocess(pre));
}

PreprocessConstants load_preprocess(const std::filesystem::path& path) {
    return deserialize_preprocess(read_file(path));
}

}  // namespace qread
