#pragma once

// Bit-exact Q16.16 fixed-point inference engine mirroring the hardware
// datapath: window averaging, shift normalization, matched filter as a
// MAC layer, then fully connected layers with a balanced adder tree and
// sign-bit ReLU. Includes the per-stage cycle model.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qread/dataset.hpp"
#include "qread/nn.hpp"
#include "qread/preprocess.hpp"

namespace qread {

// Q16.16 value: raw / 2^16, saturating at the rails.
struct Fx32 {
    std::int32_t raw = 0;

    friend bool operator==(Fx32 a, Fx32 b) { return a.raw == b.raw; }
};

inline constexpr int kFxFracBits = 16;
inline constexpr double kFxScale = 65536.0;
inline constexpr std::int32_t kFxMaxRaw = 2147483647;
inline constexpr std::int32_t kFxMinRaw = -2147483647 - 1;

// Rounding of the post-multiply shift. Hardware uses the plain arithmetic
// shift (truncation toward -inf); nearest is kept for comparison studies.
enum class FxRounding { truncate, nearest };

// Round-to-nearest-even conversion; out-of-range input saturates and is
// counted.
Fx32 to_fx(double x, std::uint64_t& saturations);
Fx32 to_fx(double x);
double from_fx(Fx32 v);

Fx32 fx_add(Fx32 a, Fx32 b, std::uint64_t& saturations);
Fx32 fx_sub(Fx32 a, Fx32 b, std::uint64_t& saturations);
Fx32 fx_mul(Fx32 a, Fx32 b, std::uint64_t& saturations,
            FxRounding rounding = FxRounding::truncate);

// Balanced binary adder tree: adjacent pairs per round, odd element passes
// through. An empty input sums to zero.
Fx32 fx_tree_sum(std::span<const Fx32> terms, std::uint64_t& saturations);

// (x - x_min) >> shift_k with saturation; shifts left when shift_k < 0.
Fx32 fx_normalize(Fx32 x, Fx32 x_min, std::int32_t shift_k, std::uint64_t& saturations);

// ADC codes to Fx32 analog values (code * adc_scale); happens at load,
// outside the timed pipeline.
std::vector<Fx32> fx_ingest(std::span<const std::int16_t> codes, double adc_scale);

struct QuantLayer {
    std::uint32_t in = 0, out = 0;
    std::vector<Fx32> w;  // row-major, out x in
    std::vector<Fx32> b;  // out
};

// The deployable artifact: quantized network plus quantized preprocessing
// constants for one qubit.
struct QuantNetwork {
    NetworkSpec spec;
    std::vector<QuantLayer> layers;
    Fx32 x_min[3];            // I, Q, MF streams
    std::int32_t shift_k[3];  // in [-15, 15]
    std::vector<Fx32> env_i, env_q;
    Fx32 avg_reciprocal;       // round(2^16 / W)
    std::uint32_t window = 0;  // W
    std::uint32_t groups = 0;  // G
    std::uint32_t samples = 0; // S the constants were trained at
    FxRounding rounding = FxRounding::truncate;
};

// Converts trained float constants to Q16.16. The MF envelope and its
// normalization stream are pre-scaled by a power of two (folded into the
// stream's shift) so tiny envelope weights keep their resolution; the
// float value of the normalized feature is unchanged.
// Throws DataError listing any constant outside the representable range.
QuantNetwork quantize_network(const Network& net, const PreprocessConstants& pre);

struct FxResult {
    Fx32 logit;
    std::uint8_t state = 0;
    std::uint64_t saturations = 0;
};

// Full pipeline on one qubit's ingested channels.
FxResult fx_forward(const QuantNetwork& qnet, std::span<const Fx32> chan_i,
                    std::span<const Fx32> chan_q);

// Stage pieces, exposed for tests.
std::vector<Fx32> fx_average(const QuantNetwork& qnet, std::span<const Fx32> channel,
                             std::uint64_t& saturations);
Fx32 fx_matched_filter(const QuantNetwork& qnet, std::span<const Fx32> chan_i,
                       std::span<const Fx32> chan_q, std::uint64_t& saturations);
std::vector<Fx32> fx_fc_layer(const QuantLayer& layer, std::span<const Fx32> input, bool relu,
                              std::uint64_t& saturations, FxRounding rounding);

// Batch inference over a trace set; OpenMP with a serial twin for tests
// and the benchmark.
std::vector<FxResult> fx_infer_batch(const QuantNetwork& qnet, const TraceSet& set,
                                     std::uint16_t qubit);
std::vector<FxResult> fx_infer_batch_serial(const QuantNetwork& qnet, const TraceSet& set,
                                            std::uint16_t qubit);

// Cycle model. Stage costs:
//   avg   ceil(log2 W) + 1 tree levels plus the 4-cycle reciprocal multiply
//   norm  2
//   mf    4 + ceil(log2 2S) + 1
//   fc    4 + ceil(log2 (n_in + 1)) + 1, bias included in the tree
//   relu  1 per hidden activation, decision 1
struct StageLatency {
    std::string name;
    std::uint64_t cycles = 0;
};

struct LatencyReport {
    std::vector<StageLatency> stages;
    std::uint64_t total_cycles = 0;
    double clock_mhz = 0.0;
    double total_ns = 0.0;

    std::string to_json() const;
    std::string to_text() const;
};

std::uint32_t ceil_log2(std::uint64_t n);
LatencyReport latency_report(const QuantNetwork& qnet, double clock_mhz);

// QNNQ model file; bit-exact round trip.
std::vector<std::uint8_t> serialize_quant(const QuantNetwork& qnet);
QuantNetwork deserialize_quant(std::span<const std::uint8_t> bytes);
void save_quant(const QuantNetwork& qnet, const std::filesystem::path& path);
QuantNetwork load_quant(const std::filesystem::path& path);

}  // namespace qread
