// Compares the OpenMP kernels against their serial references: wall time,
// throughput and an exactness check. Mirrors the hot loops of the
// pipeline: trace generation, forward/backward matrix products, and
// fixed-point batch inference.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "qread/dataset.hpp"
#include "qread/fxp.hpp"
#include "qread/kernels.hpp"
#include "qread/nn.hpp"
#include "qread/parallel.hpp"
#include "qread/preprocess.hpp"
#include "qread/rng.hpp"

namespace {

using namespace qread;
using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

template <class F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        auto t0 = Clock::now();
        fn();
        best = std::min(best, seconds(t0, Clock::now()));
    }
    return best;
}

void report(const char* name, double serial_s, double parallel_s, double gflop, bool exact) {
    std::printf("%-22s serial %8.3f ms   omp %8.3f ms   speedup %5.2fx", name, serial_s * 1e3,
                parallel_s * 1e3, serial_s / parallel_s);
    if (gflop > 0) std::printf("   %6.2f GFLOP/s", gflop / parallel_s);
    std::printf("   %s\n", exact ? "bit-exact" : "MISMATCH");
}

std::vector<double> random_matrix(std::size_t n, std::uint64_t seed) {
    std::vector<double> m(n);
    Rng rng(seed);
    for (auto& v : m) v = rng.uniform(-1.0, 1.0);
    return m;
}

SynthConfig bench_synth() {
    SynthConfig cfg;
    cfg.qubits.resize(3);
    for (std::size_t q = 0; q < 3; ++q) {
        cfg.qubits[q].c0_i = 0.6;
        cfg.qubits[q].c0_q = -0.2;
        cfg.qubits[q].c1_i = -0.4;
        cfg.qubits[q].c1_q = 0.5;
        cfg.qubits[q].tau_ns = 120.0;
        cfg.qubits[q].sigma_noise = 0.8;
        cfg.qubits[q].t1_ns = 40000.0;
    }
    cfg.crosstalk = {1, 0.1, 0, 0.1, 1, 0.1, 0, 0.1, 1};
    cfg.traces_per_config = 250;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

int main() {
    std::printf("threads available: %d\n\n", max_threads());

    {
        const std::size_t n = 256, k = 1000, m = 1000;
        auto a = random_matrix(n * k, 1);
        auto b = random_matrix(m * k, 2);
        std::vector<double> c_serial(n * m), c_omp(n * m);
        double ts = time_best_of(3, [&] {
            kernels::matmul_nt_serial(a.data(), b.data(), c_serial.data(), n, k, m);
        });
        double tp = time_best_of(3, [&] {
            kernels::matmul_nt(a.data(), b.data(), c_omp.data(), n, k, m);
        });
        bool same = std::memcmp(c_serial.data(), c_omp.data(), c_serial.size() * 8) == 0;
        report("matmul_nt 256x1000^2", ts, tp, 2.0 * n * k * m / 1e9, same);
    }
    {
        const std::size_t n = 256, m = 1000, k = 1000;
        auto a = random_matrix(n * m, 3);
        auto b = random_matrix(n * k, 4);
        std::vector<double> c_serial(m * k), c_omp(m * k);
        double ts = time_best_of(3, [&] {
            kernels::matmul_tn_serial(a.data(), b.data(), c_serial.data(), n, m, k);
        });
        double tp = time_best_of(3, [&] {
            kernels::matmul_tn(a.data(), b.data(), c_omp.data(), n, m, k);
        });
        bool same = std::memcmp(c_serial.data(), c_omp.data(), c_serial.size() * 8) == 0;
        report("matmul_tn 256x1000^2", ts, tp, 2.0 * n * k * m / 1e9, same);
    }
    {
        const std::size_t n = 256, m = 1000, k = 1000;
        auto a = random_matrix(n * m, 5);
        auto b = random_matrix(m * k, 6);
        std::vector<double> c_serial(n * k), c_omp(n * k);
        double ts = time_best_of(3, [&] {
            kernels::matmul_nn_serial(a.data(), b.data(), c_serial.data(), n, m, k);
        });
        double tp = time_best_of(3, [&] {
            kernels::matmul_nn(a.data(), b.data(), c_omp.data(), n, m, k);
        });
        bool same = std::memcmp(c_serial.data(), c_omp.data(), c_serial.size() * 8) == 0;
        report("matmul_nn 256x1000^2", ts, tp, 2.0 * n * k * m / 1e9, same);
    }

    {
        SynthConfig cfg = bench_synth();
        TraceSet parallel_set, serial_set;
        double tp = time_best_of(2, [&] { parallel_set = generate_synthetic(cfg); });
        double ts;
        {
            ThreadLimit one(1);
            ts = time_best_of(2, [&] { serial_set = generate_synthetic(cfg); });
        }
        bool same = serialize_traces(serial_set) == serialize_traces(parallel_set);
        report("generate 2k traces", ts, tp, 0, same);

        // Fixed-point batch inference on a quantized random student.
        AveragingSpec avg{15, 32};
        PreprocessConstants pre = fit_preprocess(parallel_set, 0, avg);
        Network net = init_network({2 * avg.groups_per_channel + 1, {16, 8}, 1}, 11);
        QuantNetwork qn = quantize_network(net, pre);
        std::vector<FxResult> rs, rp;
        double fs = time_best_of(2, [&] { rs = fx_infer_batch_serial(qn, parallel_set, 0); });
        double fp = time_best_of(2, [&] { rp = fx_infer_batch(qn, parallel_set, 0); });
        bool fx_same = rs.size() == rp.size();
        for (std::size_t i = 0; fx_same && i < rs.size(); ++i)
            fx_same = rs[i].logit == rp[i].logit && rs[i].state == rp[i].state &&
                      rs[i].saturations == rp[i].saturations;
        report("fx_infer 2k traces", fs, fp, 0, fx_same);
    }
    return 0;
}
