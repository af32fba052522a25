#include "qread/fxp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "qread/io.hpp"
#include "qread/parallel.hpp"

namespace qread {

namespace {

constexpr char kMagic[5] = "QNNQ";
constexpr std::uint16_t kVersion = 1;

Fx32 saturate64(std::int64_t raw, std::uint64_t& saturations) {
    if (raw > kFxMaxRaw) {
        ++saturations;
        return {kFxMaxRaw};
    }
    if (raw < kFxMinRaw) {
        ++saturations;
        return {kFxMinRaw};
    }
    return {static_cast<std::int32_t>(raw)};
}

std::int64_t shift_product(std::int64_t product, FxRounding rounding) {
    if (rounding == FxRounding::nearest) product += std::int64_t(1) << (kFxFracBits - 1);
    return product >> kFxFracBits;  // arithmetic shift, truncation toward -inf
}

}  // namespace

Fx32 to_fx(double x, std::uint64_t& saturations) {
    double scaled = std::nearbyint(x * kFxScale);
    if (scaled > double(kFxMaxRaw)) {
        ++saturations;
        return {kFxMaxRaw};
    }
    if (scaled < double(kFxMinRaw)) {
        ++saturations;
        return {kFxMinRaw};
    }
    return {static_cast<std::int32_t>(scaled)};
}

Fx32 to_fx(double x) {
    std::uint64_t sat = 0;
    return to_fx(x, sat);
}

double from_fx(Fx32 v) { return double(v.raw) / kFxScale; }

Fx32 fx_add(Fx32 a, Fx32 b, std::uint64_t& saturations) {
    return saturate64(std::int64_t(a.raw) + b.raw, saturations);
}

Fx32 fx_sub(Fx32 a, Fx32 b, std::uint64_t& saturations) {
    return saturate64(std::int64_t(a.raw) - b.raw, saturations);
}

Fx32 fx_mul(Fx32 a, Fx32 b, std::uint64_t& saturations, FxRounding rounding) {
    std::int64_t product = std::int64_t(a.raw) * b.raw;
    return saturate64(shift_product(product, rounding), saturations);
}

Fx32 fx_tree_sum(std::span<const Fx32> terms, std::uint64_t& saturations) {
    if (terms.empty()) return {0};
    std::vector<Fx32> cur(terms.begin(), terms.end());
    std::vector<Fx32> next;
    while (cur.size() > 1) {
        next.clear();
        std::size_t i = 0;
        for (; i + 2 <= cur.size(); i += 2) next.push_back(fx_add(cur[i], cur[i + 1], saturations));
        if (i < cur.size()) next.push_back(cur[i]);
        cur.swap(next);
    }
    return cur[0];
}

Fx32 fx_normalize(Fx32 x, Fx32 x_min, std::int32_t shift_k, std::uint64_t& saturations) {
    std::int64_t diff = std::int64_t(x.raw) - x_min.raw;
    std::int64_t shifted;
    if (shift_k >= 0) {
        shifted = diff >> shift_k;
    } else {
        shifted = diff << (-shift_k);
    }
    return saturate64(shifted, saturations);
}

std::vector<Fx32> fx_ingest(std::span<const std::int16_t> codes, double adc_scale) {
    std::vector<Fx32> out(codes.size());
    std::uint64_t sat = 0;
    for (std::size_t i = 0; i < codes.size(); ++i) out[i] = to_fx(double(codes[i]) * adc_scale, sat);
    return out;
}

QuantNetwork quantize_network(const Network& net, const PreprocessConstants& pre) {
    net.spec.validate();
    if (!pre.include_mf)
        throw DataError("quantization requires the full feature pipeline (MF included)");
    if (net.spec.input_dim != pre.feature_dim())
        throw DataError("network input dim " + std::to_string(net.spec.input_dim) +
                        " does not match the feature dim " + std::to_string(pre.feature_dim()));
    for (int s = 0; s < 3; ++s)
        if (pre.stats[s].shift_k < -15 || pre.stats[s].shift_k > 15)
            throw DataError("normalization shift " + std::to_string(pre.stats[s].shift_k) +
                            " outside [-15, 15]; stream " + std::to_string(s) + " is mis-scaled");

    std::vector<std::string> offenders;
    auto convert = [&offenders](double v, const std::string& what) -> Fx32 {
        if (!std::isfinite(v) || std::abs(v) >= 32768.0) {
            offenders.push_back(what + " = " + std::to_string(v));
            return {0};
        }
        return to_fx(v);
    };

    QuantNetwork q;
    q.spec = net.spec;
    q.layers.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& src = net.layers[l];
        QuantLayer& dst = q.layers[l];
        dst.in = src.in;
        dst.out = src.out;
        dst.w.resize(src.w.size());
        dst.b.resize(src.b.size());
        for (std::size_t i = 0; i < src.w.size(); ++i)
            dst.w[i] = convert(src.w[i], "layer " + std::to_string(l) + " weight " + std::to_string(i));
        for (std::size_t i = 0; i < src.b.size(); ++i)
            dst.b[i] = convert(src.b[i], "layer " + std::to_string(l) + " bias " + std::to_string(i));
    }

    // Pre-scale the envelope by a power of two so its largest weight lands
    // in [1, 2); the scale folds into the MF stream's shift, leaving the
    // normalized feature value unchanged.
    double max_abs = 0.0;
    for (double v : pre.envelope.e_i) max_abs = std::max(max_abs, std::abs(v));
    for (double v : pre.envelope.e_q) max_abs = std::max(max_abs, std::abs(v));
    int prescale = 0;
    if (max_abs > 0.0 && std::isfinite(max_abs))
        prescale = -static_cast<int>(std::floor(std::log2(max_abs)));
    double env_scale = std::ldexp(1.0, prescale);

    q.env_i.resize(pre.envelope.e_i.size());
    q.env_q.resize(pre.envelope.e_q.size());
    for (std::size_t t = 0; t < q.env_i.size(); ++t)
        q.env_i[t] = convert(pre.envelope.e_i[t] * env_scale, "envelope I[" + std::to_string(t) + "]");
    for (std::size_t t = 0; t < q.env_q.size(); ++t)
        q.env_q[t] = convert(pre.envelope.e_q[t] * env_scale, "envelope Q[" + std::to_string(t) + "]");

    for (int s = 0; s < 3; ++s) {
        double x_min = pre.stats[s].x_min;
        std::int32_t shift = pre.stats[s].shift_k;
        if (s == kStreamMF) {
            x_min *= env_scale;
            shift += prescale;
        }
        if (shift < -15 || shift > 15)
            offenders.push_back("MF stream shift after envelope pre-scale = " + std::to_string(shift));
        q.x_min[s] = convert(x_min, "x_min stream " + std::to_string(s));
        q.shift_k[s] = shift;
    }

    q.window = pre.window;
    q.groups = pre.averaging.groups_per_channel;
    q.samples = pre.samples_per_channel;
    if (q.window < 1) throw DataError("averaging window must be >= 1");
    q.avg_reciprocal = {static_cast<std::int32_t>(std::nearbyint(kFxScale / double(q.window)))};

    if (!offenders.empty()) {
        std::string msg = "constants outside the Q16.16 range:";
        for (const auto& o : offenders) msg += "\n  " + o;
        throw DataError(msg);
    }
    return q;
}

std::vector<Fx32> fx_average(const QuantNetwork& qnet, std::span<const Fx32> channel,
                             std::uint64_t& saturations) {
    std::vector<Fx32> out(qnet.groups);
    for (std::uint32_t g = 0; g < qnet.groups; ++g) {
        // Window sums stay exact in 64 bits; the only rounding is the
        // single reciprocal multiply.
        std::int64_t sum = 0;
        for (std::uint32_t t = 0; t < qnet.window; ++t)
            sum += channel[std::size_t(g) * qnet.window + t].raw;
        std::int64_t product = sum * qnet.avg_reciprocal.raw;
        out[g] = saturate64(shift_product(product, qnet.rounding), saturations);
    }
    return out;
}

Fx32 fx_matched_filter(const QuantNetwork& qnet, std::span<const Fx32> chan_i,
                       std::span<const Fx32> chan_q, std::uint64_t& saturations) {
    std::vector<Fx32> products(chan_i.size() + chan_q.size());
    for (std::size_t t = 0; t < chan_i.size(); ++t)
        products[t] = fx_mul(qnet.env_i[t], chan_i[t], saturations, qnet.rounding);
    for (std::size_t t = 0; t < chan_q.size(); ++t)
        products[chan_i.size() + t] = fx_mul(qnet.env_q[t], chan_q[t], saturations, qnet.rounding);
    return fx_tree_sum(products, saturations);
}

std::vector<Fx32> fx_fc_layer(const QuantLayer& layer, std::span<const Fx32> input, bool relu,
                              std::uint64_t& saturations, FxRounding rounding) {
    std::vector<Fx32> out(layer.out);
    std::vector<Fx32> terms(layer.in + 1);
    for (std::uint32_t o = 0; o < layer.out; ++o) {
        const Fx32* w_row = layer.w.data() + std::size_t(o) * layer.in;
        for (std::uint32_t i = 0; i < layer.in; ++i)
            terms[i] = fx_mul(w_row[i], input[i], saturations, rounding);
        terms[layer.in] = layer.b[o];
        Fx32 z = fx_tree_sum(terms, saturations);
        if (relu && z.raw < 0) z.raw = 0;  // sign-bit check
        out[o] = z;
    }
    return out;
}

FxResult fx_forward(const QuantNetwork& qnet, std::span<const Fx32> chan_i,
                    std::span<const Fx32> chan_q) {
    if (chan_i.size() != qnet.samples || chan_q.size() != qnet.samples)
        throw DataError("record has " + std::to_string(chan_i.size()) +
                        " samples per channel, the quantized model expects " +
                        std::to_string(qnet.samples));

    FxResult res;
    std::uint64_t& sat = res.saturations;

    std::vector<Fx32> avg_i = fx_average(qnet, chan_i, sat);
    std::vector<Fx32> avg_q = fx_average(qnet, chan_q, sat);
    Fx32 mf = fx_matched_filter(qnet, chan_i, chan_q, sat);

    // Concatenate [norm I | norm Q | norm MF].
    std::vector<Fx32> features;
    features.reserve(2 * qnet.groups + 1);
    for (Fx32 v : avg_i) features.push_back(fx_normalize(v, qnet.x_min[kStreamI], qnet.shift_k[kStreamI], sat));
    for (Fx32 v : avg_q) features.push_back(fx_normalize(v, qnet.x_min[kStreamQ], qnet.shift_k[kStreamQ], sat));
    features.push_back(fx_normalize(mf, qnet.x_min[kStreamMF], qnet.shift_k[kStreamMF], sat));

    std::vector<Fx32> act(features.begin(), features.end());
    for (std::size_t l = 0; l < qnet.layers.size(); ++l) {
        bool relu = l + 1 < qnet.layers.size();
        act = fx_fc_layer(qnet.layers[l], act, relu, sat, qnet.rounding);
    }

    res.logit = act[0];
    res.state = act[0].raw > 0 ? 1 : 0;  // tie at zero classifies as ground
    return res;
}

namespace {

FxResult infer_one(const QuantNetwork& qnet, const TraceSet& set, std::uint16_t qubit,
                   std::size_t r) {
    const auto& rec = set.records[r];
    auto codes_i = rec.channel_i(qubit, set.header.samples_per_channel);
    auto codes_q = rec.channel_q(qubit, set.header.samples_per_channel);
    std::vector<Fx32> ci = fx_ingest(codes_i, set.header.adc_scale);
    std::vector<Fx32> cq = fx_ingest(codes_q, set.header.adc_scale);
    return fx_forward(qnet, ci, cq);
}

}  // namespace

std::vector<FxResult> fx_infer_batch(const QuantNetwork& qnet, const TraceSet& set,
                                     std::uint16_t qubit) {
    std::vector<FxResult> out(set.records.size());
    parallel_for(static_cast<std::int64_t>(set.records.size()),
                 [&](std::int64_t r) { out[r] = infer_one(qnet, set, qubit, r); });
    return out;
}

std::vector<FxResult> fx_infer_batch_serial(const QuantNetwork& qnet, const TraceSet& set,
                                            std::uint16_t qubit) {
    std::vector<FxResult> out(set.records.size());
    for (std::size_t r = 0; r < set.records.size(); ++r) out[r] = infer_one(qnet, set, qubit, r);
    return out;
}

std::uint32_t ceil_log2(std::uint64_t n) {
    std::uint32_t k = 0;
    while ((std::uint64_t(1) << k) < n) ++k;
    return k;
}

LatencyReport latency_report(const QuantNetwork& qnet, double clock_mhz) {
    if (!(clock_mhz > 0)) throw DataError("clock_mhz must be > 0");
    LatencyReport rep;
    rep.clock_mhz = clock_mhz;

    auto add = [&rep](const std::string& name, std::uint64_t cycles) {
        rep.stages.push_back({name, cycles});
    };
    add("avg", std::uint64_t(ceil_log2(qnet.window)) + 1 + 4);
    add("norm", 2);
    add("mf", 4 + std::uint64_t(ceil_log2(2 * std::uint64_t(qnet.samples))) + 1);
    for (std::size_t l = 0; l < qnet.layers.size(); ++l) {
        add("fc" + std::to_string(l + 1),
            4 + std::uint64_t(ceil_log2(std::uint64_t(qnet.layers[l].in) + 1)) + 1);
        if (l + 1 < qnet.layers.size()) add("relu" + std::to_string(l + 1), 1);
    }
    add("decision", 1);

    for (const auto& s : rep.stages) rep.total_cycles += s.cycles;
    rep.total_ns = double(rep.total_cycles) * 1000.0 / clock_mhz;
    return rep;
}

std::string LatencyReport::to_json() const {
    nlohmann::json j;
    for (const auto& s : stages) j["stages"].push_back({{"name", s.name}, {"cycles", s.cycles}});
    j["total_cycles"] = total_cycles;
    j["clock_mhz"] = clock_mhz;
    j["total_ns"] = total_ns;
    j["published_reference"] = {
        {"note", "reference, unit-ambiguous: published per-component latencies are labeled in ns "
                 "at a 100 MHz clock; they are echoed here, not asserted"},
        {"mf", 11},
        {"avg_norm_small", 9},
        {"network_small", 12},
        {"avg_norm_large", 6},
        {"network_large", 15},
        {"total", 32},
    };
    return j.dump(2) + "\n";
}

std::string LatencyReport::to_text() const {
    std::ostringstream os;
    os << "stage      cycles\n";
    for (const auto& s : stages) {
        os << s.name;
        for (std::size_t i = s.name.size(); i < 11; ++i) os << ' ';
        os << s.cycles << "\n";
    }
    os << "total      " << total_cycles << " cycles = " << total_ns << " ns at " << clock_mhz
       << " MHz\n";
    os << "published reference (unit-ambiguous): MF 11, AVG&NORM 9/6, network 12/15, total 32\n";
    return os.str();
}

std::vector<std::uint8_t> serialize_quant(const QuantNetwork& qnet) {
    ByteWriter w;
    w.magic(kMagic);
    w.u16(kVersion);
    w.u16(static_cast<std::uint16_t>(qnet.layers.size()));
    for (const auto& layer : qnet.layers) {
        w.u32(layer.in);
        w.u32(layer.out);
    }
    for (const auto& layer : qnet.layers)
        for (Fx32 v : layer.w) w.i32(v.raw);
    for (const auto& layer : qnet.layers)
        for (Fx32 v : layer.b) w.i32(v.raw);
    for (Fx32 v : qnet.x_min) w.i32(v.raw);
    for (std::int32_t v : qnet.shift_k) w.i32(v);
    for (Fx32 v : qnet.env_i) w.i32(v.raw);
    for (Fx32 v : qnet.env_q) w.i32(v.raw);
    w.i32(qnet.avg_reciprocal.raw);
    w.i32(static_cast<std::int32_t>(qnet.window));
    w.i32(static_cast<std::int32_t>(qnet.groups));
    w.i32(static_cast<std::int32_t>(qnet.samples));
    return w.data();
}

QuantNetwork deserialize_quant(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_magic(kMagic, "quantized model file");
    std::uint16_t version = r.u16();
    if (version != kVersion)
        throw ParseError("unsupported quantized model version " + std::to_string(version), 4);
    std::uint16_t n_layers = r.u16();
    if (n_layers < 1) throw ParseError("quantized model has no layers", 6);

    QuantNetwork q;
    q.layers.resize(n_layers);
    for (auto& layer : q.layers) {
        layer.in = r.u32();
        layer.out = r.u32();
        if (layer.in < 1 || layer.out < 1) throw ParseError("bad layer shape", r.pos() - 8);
        layer.w.resize(std::size_t(layer.in) * layer.out);
        layer.b.resize(layer.out);
    }
    for (auto& layer : q.layers)
        for (auto& v : layer.w) v.raw = r.i32();
    for (auto& layer : q.layers)
        for (auto& v : layer.b) v.raw = r.i32();
    for (auto& v : q.x_min) v.raw = r.i32();
    for (auto& v : q.shift_k) v = r.i32();

    q.spec.input_dim = q.layers.front().in;
    q.spec.output_dim = q.layers.back().out;
    for (std::size_t l = 0; l + 1 < q.layers.size(); ++l) {
        if (q.layers[l].out != q.layers[l + 1].in)
            throw ParseError("layer shapes are inconsistent", 0);
        q.spec.hidden_dims.push_back(q.layers[l].out);
    }

    // Envelope length comes from the trailing fixed block: the remaining
    // payload is 2S + 4 words.
    std::uint64_t words_left = r.remaining() / 4;
    if (r.remaining() % 4 != 0 || words_left < 4)
        throw ParseError("quantized model payload is truncated", r.pos());
    std::uint64_t s = (words_left - 4) / 2;
    if ((words_left - 4) % 2 != 0) throw ParseError("envelope channels have unequal length", r.pos());
    q.env_i.resize(s);
    q.env_q.resize(s);
    for (auto& v : q.env_i) v.raw = r.i32();
    for (auto& v : q.env_q) v.raw = r.i32();
    q.avg_reciprocal.raw = r.i32();
    q.window = static_cast<std::uint32_t>(r.i32());
    q.groups = static_cast<std::uint32_t>(r.i32());
    q.samples = static_cast<std::uint32_t>(r.i32());
    r.expect_end("quantized model file");

    if (q.samples != s) throw ParseError("envelope length does not match stored sample count", 0);
    if (q.spec.input_dim != 2 * q.groups + 1)
        throw ParseError("network input dim does not match feature layout", 0);
    q.spec.validate();
    return q;
}

void save_quant(const QuantNetwork& qnet, const std::filesystem::path& path) {
    write_file(path, serialize_quant(qnet));
}

QuantNetwork load_quant(const std::filesystem::path& path) {
    return deserialize_quant(read_file(path));
}

}  // namespace qread
