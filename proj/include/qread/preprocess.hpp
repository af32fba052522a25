#pragma once

// Input compaction for the student networks: windowed averaging of I/Q
// channels, per-stream normalization statistics with a power-of-two
// divisor, matched-filter envelopes, and feature-vector assembly.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "qread/dataset.hpp"

namespace qread {

struct AveragingSpec {
    std::uint32_t groups_per_channel = 1;          // G
    std::optional<std::uint32_t> window_override;  // forces the window size W

    // Effective window for a trace of length s: the override if set,
    // otherwise floor(s / G).
    std::uint32_t window(std::uint32_t s) const;
};

// Per-stream normalization constants. shift_k is the exponent of the
// power of two nearest to sigma; ties in log2 round toward +inf.
struct NormStats {
    double x_min = 0.0;
    double sigma = 1.0;
    std::int32_t shift_k = 0;
};

enum class NormMode {
    exact,     // (x - x_min) / sigma, the float training path
    hardware,  // (x - x_min) / 2^shift_k, float twin of the fixed-point shift
};

// Matched-filter envelope for one qubit; one weight per time sample and
// channel, trained at a specific trace length.
struct MFEnvelope {
    std::vector<double> e_i;
    std::vector<double> e_q;
};

// Feature stream indices for the per-qubit NormStats triple.
enum Stream : int { kStreamI = 0, kStreamQ = 1, kStreamMF = 2 };

// Trained preprocessing constants for one qubit at one trace length.
struct PreprocessConstants {
    std::uint16_t qubit_id = 0;
    AveragingSpec averaging;
    std::uint32_t window = 0;              // W actually used
    std::uint32_t samples_per_channel = 0; // S the envelope was trained at
    NormStats stats[3];                    // I, Q, MF
    MFEnvelope envelope;
    bool include_mf = true;                // false for the averaging-only ablation

    std::uint32_t feature_dim() const {
        return 2 * averaging.groups_per_channel + (include_mf ? 1 : 0);
    }
};

// Windowed means. out[g] = mean(channel[g*W .. g*W + W)); samples beyond
// G*W are discarded. Throws DataError when G*W exceeds the channel length.
std::vector<double> average_windows(std::span<const double> channel, const AveragingSpec& spec);

// Min and population standard deviation of a stream, plus the nearest
// power-of-two exponent. Throws DataError on an empty or zero-variance stream.
NormStats fit_norm_stats(std::span<const double> stream);

double normalize(double x, const NormStats& stats, NormMode mode);

// Envelope entries (mean0[t] - mean1[t]) / (var0[t] + var1[t] + eps) per
// channel, from unpaired per-class trace sets. Inner vectors are one trace
// per entry; all must share one length.
MFEnvelope train_mf_envelope(const std::vector<std::vector<double>>& i0,
                             const std::vector<std::vector<double>>& q0,
                             const std::vector<std::vector<double>>& i1,
                             const std::vector<std::vector<double>>& q1);

// Dot product of the envelope with one record's channels.
double apply_mf(const MFEnvelope& env, std::span<const double> chan_i,
                std::span<const double> chan_q);

// Converts one qubit's stored codes to analog units (code * adc_scale).
void analog_channels(const ReadoutRecord& rec, std::uint16_t qubit, std::uint32_t s,
                     double adc_scale, std::vector<double>& out_i, std::vector<double>& out_q);

// [normalized averaged I | normalized averaged Q | normalized MF scalar].
std::vector<double> build_feature_vector(const ReadoutRecord& rec, std::uint16_t qubit,
                                         const TraceSetHeader& header,
                                         const PreprocessConstants& pre, NormMode mode);

// Fits averaging window, normalization stats and the MF envelope for one
// qubit over a training set.
PreprocessConstants fit_preprocess(const TraceSet& train, std::uint16_t qubit,
                                   const AveragingSpec& spec, bool include_mf = true);

// Feature matrix (row major, n x feature_dim) for every record in a set.
std::vector<double> build_feature_matrix(const TraceSet& set, std::uint16_t qubit,
                                         const PreprocessConstants& pre, NormMode mode);

// QPRE constants file.
std::vector<std::uint8_t> serialize_preprocess(const PreprocessConstants& pre);
PreprocessConstants deserialize_preprocess(std::span<const std::uint8_t> bytes);
void save_preprocess(const PreprocessConstants& pre, const std::filesystem::path& path);
PreprocessConstants load_preprocess(const std::filesystem::path& path);

}  // namespace qread
