#include "qread/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <string>

#include "qread/io.hpp"
#include "qread/parallel.hpp"
#include "qread/rng.hpp"

namespace qread {

namespace {

constexpr char kMagic[5] = "QTRC";
constexpr std::uint16_t kVersion = 1;

void validate(const SynthConfig& c) {
    if (c.qubits.empty()) throw DataError("synthetic config needs at least one qubit");
    if (c.samples_per_channel < 1) throw DataError("samples_per_channel must be >= 1");
    if (!(c.sample_period_ns > 0)) throw DataError("sample_period_ns must be > 0");
    if (!(c.adc_scale > 0)) throw DataError("adc_scale must be > 0");
    std::size_t n = c.qubits.size();
    if (c.crosstalk.size() != n * n) throw DataError("crosstalk matrix must be n_qubits x n_qubits");
    for (std::size_t q = 0; q < n; ++q) {
        const auto& s = c.qubits[q];
        if (!(s.tau_ns > 0)) throw DataError("tau_ns must be > 0 (qubit " + std::to_string(q) + ")");
        if (s.sigma_noise < 0) throw DataError("sigma_noise must be >= 0 (qubit " + std::to_string(q) + ")");
        if (!(s.t1_ns > 0)) throw DataError("t1_ns must be > 0 (qubit " + std::to_string(q) + ")");
        for (std::size_t r = 0; r < n; ++r) {
            double v = c.crosstalk[q * n + r];
            if (std::abs(v) > 1.0) throw DataError("crosstalk entries must satisfy |v| <= 1");
            if (q == r && v != 1.0) throw DataError("crosstalk diagonal must be 1");
        }
    }
}

std::int16_t quantize_code(double analog, double adc_scale, std::uint64_t& saturated) {
    double code = std::nearbyint(analog / adc_scale);
    if (code > 32767.0) {
        ++saturated;
        return 32767;
    }
    if (code < -32768.0) {
        ++saturated;
        return -32768;
    }
    return static_cast<std::int16_t>(code);
}

// Fills one record. All randomness comes from the record's own stream:
// per qubit, one relaxation draw when prepared excited, then S noise pairs.
std::uint64_t fill_record(const SynthConfig& cfg, std::uint32_t config_index,
                          std::uint32_t trace_index, ReadoutRecord& rec) {
    const std::uint16_t nq = cfg.n_qubits();
    const std::uint32_t s = cfg.samples_per_channel;
    const double dt = cfg.sample_period_ns;

    Rng rng = Rng::for_record(cfg.seed, config_index, trace_index);
    rec.label_bits = config_index;
    rec.samples.resize(std::size_t(nq) * 2 * s);

    // Raw per-qubit channels in analog units, before crosstalk mixing.
    std::vector<double> raw(std::size_t(nq) * 2 * s);
    for (std::uint16_t q = 0; q < nq; ++q) {
        const auto& qs = cfg.qubits[q];
        const bool excited = (config_index >> q) & 1u;
        double jump_ns = -1.0;
        if (excited) jump_ns = rng.exponential(qs.t1_ns);

        double* ri = raw.data() + std::size_t(q) * 2 * s;
        double* rq = ri + s;
        for (std::uint32_t t = 0; t < s; ++t) {
            double time_ns = double(t) * dt;
            bool follow_ground = !excited || (jump_ns >= 0.0 && time_ns >= jump_ns);
            double ci = follow_ground ? qs.c0_i : qs.c1_i;
            double cq = follow_ground ? qs.c0_q : qs.c1_q;
            double decay = std::exp(-time_ns / qs.tau_ns);
            // ring-up from the origin toward the steady-state center
            double mi = ci - ci * decay;
            double mq = cq - cq * decay;
            ri[t] = mi + qs.sigma_noise * rng.gaussian();
            rq[t] = mq + qs.sigma_noise * rng.gaussian();
        }
    }

    // Linear crosstalk mixing across qubits, then quantization.
    std::uint64_t saturated = 0;
    for (std::uint16_t q = 0; q < nq; ++q) {
        std::int16_t* out_i = rec.samples.data() + std::size_t(q) * 2 * s;
        std::int16_t* out_q = out_i + s;
        for (std::uint32_t t = 0; t < s; ++t) {
            double mi = 0.0, mq = 0.0;
            for (std::uint16_t r = 0; r < nq; ++r) {
                double lam = cfg.crosstalk[std::size_t(q) * nq + r];
                mi += lam * raw[std::size_t(r) * 2 * s + t];
                mq += lam * raw[std::size_t(r) * 2 * s + s + t];
            }
            out_i[t] = quantize_code(mi, cfg.adc_scale, saturated);
            out_q[t] = quantize_code(mq, cfg.adc_scale, saturated);
        }
    }
    return saturated;
}

}  // namespace

void mean_trajectory(const QubitSynth& q, bool state, double sample_period_ns,
                     std::uint32_t samples, std::vector<double>& out_i,
                     std::vector<double>& out_q) {
    out_i.resize(samples);
    out_q.resize(samples);
    double ci = state ? q.c1_i : q.c0_i;
    double cq = state ? q.c1_q : q.c0_q;
    for (std::uint32_t t = 0; t < samples; ++t) {
        double decay = std::exp(-(double(t) * sample_period_ns) / q.tau_ns);
        out_i[t] = ci - ci * decay;
        out_q[t] = cq - cq * decay;
    }
}

TraceSet generate_synthetic(const SynthConfig& config) {
    validate(config);
    const std::uint16_t nq = config.n_qubits();
    const std::uint32_t n_configs = 1u << nq;
    const std::uint64_t total = std::uint64_t(n_configs) * config.traces_per_config;

    TraceSet set;
    set.header.n_qubits = nq;
    set.header.samples_per_channel = config.samples_per_channel;
    set.header.sample_period_ns = config.sample_period_ns;
    set.header.adc_scale = config.adc_scale;
    set.header.n_traces = total;
    set.records.resize(total);

    std::atomic<std::uint64_t> saturated{0};
    parallel_for(static_cast<std::int64_t>(total), [&](std::int64_t idx) {
        std::uint32_t config_index = static_cast<std::uint32_t>(idx / config.traces_per_config);
        std::uint32_t trace_index = static_cast<std::uint32_t>(idx % config.traces_per_config);
        std::uint64_t sat = fill_record(config, config_index, trace_index, set.records[idx]);
        if (sat) saturated.fetch_add(sat, std::memory_order_relaxed);
    });

    std::uint64_t total_samples = total * std::uint64_t(nq) * 2 * config.samples_per_channel;
    if (total_samples > 0 && double(saturated.load()) > 0.01 * double(total_samples))
        throw DataError("more than 1% of samples saturate the 16-bit code range (" +
                        std::to_string(saturated.load()) + " of " + std::to_string(total_samples) +
                        "); adc_scale is misconfigured");
    return set;
}

std::vector<std::uint8_t> serialize_traces(const TraceSet& set) {
    ByteWriter w;
    w.magic(kMagic);
    w.u16(kVersion);
    w.u16(set.header.n_qubits);
    w.u32(set.header.samples_per_channel);
    w.f32(set.header.sample_period_ns);
    w.f32(set.header.adc_scale);
    w.u64(set.records.size());
    for (const auto& rec : set.records) {
        w.u32(rec.label_bits);
        for (std::int16_t v : rec.samples) w.i16(v);
    }
    return w.data();
}

TraceSet deserialize_traces(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_magic(kMagic, "trace file");
    std::uint16_t version = r.u16();
    if (version != kVersion)
        throw ParseError("unsupported trace file version " + std::to_string(version), 4);

    TraceSet set;
    set.header.n_qubits = r.u16();
    set.header.samples_per_channel = r.u32();
    set.header.sample_period_ns = r.f32();
    set.header.adc_scale = r.f32();
    set.header.n_traces = r.u64();
    if (set.header.n_qubits < 1) throw ParseError("n_qubits must be >= 1", 6);
    if (set.header.samples_per_channel < 1) throw ParseError("samples_per_channel must be >= 1", 8);
    if (!(set.header.sample_period_ns > 0)) throw ParseError("sample_period_ns must be > 0", 12);
    if (!(set.header.adc_scale > 0)) throw ParseError("adc_scale must be > 0", 16);

    const std::size_t per_record =
        std::size_t(set.header.n_qubits) * 2 * set.header.samples_per_channel;
    set.records.resize(set.header.n_traces);
    for (auto& rec : set.records) {
        rec.label_bits = r.u32();
        if (set.header.n_qubits < 32 && rec.label_bits >= (1u << set.header.n_qubits))
            throw ParseError("label_bits out of range for " +
                                 std::to_string(set.header.n_qubits) + " qubits",
                             r.pos() - 4);
        rec.samples.resize(per_record);
        for (auto& v : rec.samples) v = r.i16();
    }
    r.expect_end("trace file");
    return set;
}

void save_traces(const TraceSet& set, const std::filesystem::path& path) {
    write_file(path, serialize_traces(set));
}

TraceSet load_traces(const std::filesystem::path& path) { return deserialize_traces(read_file(path)); }

TraceSet slice_duration(const TraceSet& set, double duration_ns) {
    if (duration_ns > set.header.duration_ns())
        throw DataError("requested duration " + std::to_string(duration_ns) +
                        " ns exceeds stored trace duration " +
                        std::to_string(set.header.duration_ns()) + " ns");
    auto keep = static_cast<std::uint32_t>(duration_ns / double(set.header.sample_period_ns));
    if (keep < 1) throw DataError("duration keeps no samples");
    const std::uint32_t s = set.header.samples_per_channel;
    if (keep == s) return set;

    TraceSet out;
    out.header = set.header;
    out.header.samples_per_channel = keep;
    out.records.resize(set.records.size());
    parallel_for(static_cast<std::int64_t>(set.records.size()), [&](std::int64_t i) {
        const auto& src = set.records[i];
        auto& dst = out.records[i];
        dst.label_bits = src.label_bits;
        dst.samples.resize(std::size_t(set.header.n_qubits) * 2 * keep);
        for (std::uint16_t q = 0; q < set.header.n_qubits; ++q) {
            const std::int16_t* in = src.samples.data() + std::size_t(q) * 2 * s;
            std::int16_t* o = dst.samples.data() + std::size_t(q) * 2 * keep;
            std::copy(in, in + keep, o);          // I
            std::copy(in + s, in + s + keep, o + keep);  // Q
        }
    });
    return out;
}

std::pair<TraceSet, TraceSet> split(const TraceSet& set, std::uint32_t train_per_config,
                                    std::uint32_t test_per_config, std::uint64_t seed) {
    std::map<std::uint32_t, std::vector<std::size_t>> by_config;
    for (std::size_t i = 0; i < set.records.size(); ++i)
        by_config[set.records[i].label_bits].push_back(i);

    const std::uint64_t need = std::uint64_t(train_per_config) + test_per_config;
    TraceSet train, test;
    train.header = test.header = set.header;
    for (auto& [config, indices] : by_config) {
        if (indices.size() < need)
            throw DataError("state permutation " + std::to_string(config) + " has only " +
                            std::to_string(indices.size()) + " traces, need " + std::to_string(need));
        Rng rng = Rng::substream(seed, config);
        for (std::size_t i = indices.size(); i > 1; --i)
            std::swap(indices[i - 1], indices[rng.below(i)]);
        for (std::uint32_t i = 0; i < train_per_config; ++i)
            train.records.push_back(set.records[indices[i]]);
        for (std::uint32_t i = 0; i < test_per_config; ++i)
            test.records.push_back(set.records[indices[train_per_config + i]]);
    }
    train.header.n_traces = train.records.size();
    test.header.n_traces = test.records.size();
    return {std::move(train), std::move(test)};
}

}  // namespace qread
