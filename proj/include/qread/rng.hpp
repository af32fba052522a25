#pragma once

// Counter-based random streams. Every consumer derives an independent
// stream from (seed, index...) so results do not depend on evaluation
// order or thread count. Distributions are implemented explicitly
// (Box-Muller, inverse CDF) rather than via <random> distributions,
// whose output is implementation-defined.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace qread {

// SplitMix64 finalizer; good avalanche, cheap.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t stream) : state_(mix64(stream ^ 0x2545F4914F6CDD1DULL)) {}

    // Stream for one generated record, independent of all others.
    static Rng for_record(std::uint64_t seed, std::uint64_t config_index, std::uint64_t trace_index) {
        std::uint64_t s = seed;
        s = mix64(s ^ (0xD1B54A32D192ED03ULL * (config_index + 1)));
        s = mix64(s ^ (0x9E3779B97F4A7C15ULL * (trace_index + 1)));
        return Rng(s);
    }

    // Named substream of an existing seed (e.g. per qubit, per epoch).
    static Rng substream(std::uint64_t seed, std::uint64_t tag) {
        return Rng(mix64(seed ^ (0xBF58476D1CE4E5B9ULL * (tag + 1))));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller; second deviate is cached.
    double gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(t);
        have_cached_ = true;
        return r * std::cos(t);
    }

    // Exponential with the given mean, via inverse CDF.
    double exponential(double mean) {
        double u = 1.0 - uniform01();  // (0, 1]
        return -mean * std::log(u);
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace qread
