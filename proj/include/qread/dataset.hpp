#pragma once

// Multi-qubit readout trace data model: a deterministic synthetic
// generator, the QTRC binary container, and slice/split operations.

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "qread/error.hpp"

namespace qread {

struct TraceSetHeader {
    std::uint16_t n_qubits = 0;
    std::uint32_t samples_per_channel = 0;  // S
    float sample_period_ns = 0.0f;
    float adc_scale = 0.0f;  // analog units per stored code
    std::uint64_t n_traces = 0;

    double duration_ns() const { return double(samples_per_channel) * double(sample_period_ns); }
};

// One readout shot: label bitmask plus per-qubit I/Q channels as signed
// 16-bit ADC codes, stored contiguously as
//   [q0.I[0..S), q0.Q[0..S), q1.I, q1.Q, ...].
struct ReadoutRecord {
    std::uint32_t label_bits = 0;
    std::vector<std::int16_t> samples;

    std::span<const std::int16_t> channel_i(std::uint16_t qubit, std::uint32_t s) const {
        return {samples.data() + std::size_t(qubit) * 2 * s, s};
    }
    std::span<const std::int16_t> channel_q(std::uint16_t qubit, std::uint32_t s) const {
        return {samples.data() + std::size_t(qubit) * 2 * s + s, s};
    }
    bool qubit_state(std::uint16_t qubit) const { return (label_bits >> qubit) & 1u; }
};

struct TraceSet {
    TraceSetHeader header;
    std::vector<ReadoutRecord> records;
};

struct QubitSynth {
    double c0_i = 0.0, c0_q = 0.0;  // ground steady-state center
    double c1_i = 0.0, c1_q = 0.0;  // excited steady-state center
    double tau_ns = 1.0;            // ring-up time constant
    double sigma_noise = 0.0;       // per-sample additive noise (analog units)
    double t1_ns = 1.0;             // relaxation time of the excited state
};

struct SynthConfig {
    std::vector<QubitSynth> qubits;
    std::vector<double> crosstalk;  // row-major n x n, diagonal must be 1
    std::uint32_t samples_per_channel = 500;
    float sample_period_ns = 2.0f;
    float adc_scale = 1e-3f;
    std::uint32_t traces_per_config = 100;
    std::uint64_t seed = 1;

    std::uint16_t n_qubits() const { return static_cast<std::uint16_t>(qubits.size()); }
};

// Generates traces_per_config records per state permutation, ordered by
// (permutation, trace index). Each record draws from its own RNG stream,
// so output is byte-identical for any thread count.
// Throws DataError if more than 1% of samples saturate the 16-bit range.
TraceSet generate_synthetic(const SynthConfig& config);

// Mean trajectory of one qubit channel pair in the absence of noise,
// relaxation and crosstalk; exposed for tests.
void mean_trajectory(const QubitSynth& q, bool state, double sample_period_ns,
                     std::uint32_t samples, std::vector<double>& out_i,
                     std::vector<double>& out_q);

std::vector<std::uint8_t> serialize_traces(const TraceSet& set);
TraceSet deserialize_traces(std::span<const std::uint8_t> bytes);

void save_traces(const TraceSet& set, const std::filesystem::path& path);
TraceSet load_traces(const std::filesystem::path& path);

// Keeps the first floor(duration_ns / sample_period_ns) samples of every
// channel. Throws DataError if the requested duration exceeds the stored one.
TraceSet slice_duration(const TraceSet& set, double duration_ns);

// Disjoint stratified split: per state permutation, train_per_config records
// into the first set and test_per_config into the second, chosen by a seeded
// shuffle of that permutation's records.
std::pair<TraceSet, TraceSet> split(const TraceSet& set, std::uint32_t train_per_config,
                                    std::uint32_t test_per_config, std::uint64_t seed);

}  // namespace qread
