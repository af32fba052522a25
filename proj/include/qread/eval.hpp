#pragma once

// Fidelity metrics, geometric-mean aggregation, compression accounting
// and float-vs-fixed agreement analysis.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qread/error.hpp"
#include "qread/nn.hpp"

namespace qread {

struct Confusion {
    std::uint64_t n00 = 0, n01 = 0, n10 = 0, n11 = 0;  // n<label><prediction>
    std::uint64_t total() const { return n00 + n01 + n10 + n11; }
};

struct FidelityResult {
    double fidelity = 0.0;
    Confusion confusion;
};

// Plain assignment accuracy; test sets are class-balanced by construction.
FidelityResult assignment_fidelity(std::span<const std::uint8_t> predictions,
                                   std::span<const std::uint8_t> labels);

// (prod F_i)^(1/N) via the mean of logs; a zero entry short-circuits to 0.
// Throws DataError when empty or any entry is outside [0, 1].
double geometric_mean(std::span<const double> fidelities);

struct CompressionReport {
    std::uint64_t teacher_params_total = 0;
    std::uint64_t student_params_total = 0;
    double ncr = 0.0;  // 1 - student/teacher
    // per-architecture counts, one entry per distinct spec
    std::vector<std::pair<std::string, std::uint64_t>> teacher_breakdown;
    std::vector<std::pair<std::string, std::uint64_t>> student_breakdown;
    // single-network baseline comparison (one teacher vs all students)
    std::uint64_t single_baseline_params = 0;
    double reduction_vs_single_baseline = 0.0;

    std::string to_json() const;
};

CompressionReport compression_report(const std::vector<NetworkSpec>& teacher_specs,
                                     const std::vector<NetworkSpec>& student_specs);

struct AgreementResult {
    double agreement = 0.0;      // fraction of identical classifications
    double max_logit_dev = 0.0;  // max |float - fixed| logit gap
};

AgreementResult agreement(std::span<const std::uint8_t> float_preds,
                          std::span<const std::uint8_t> fx_preds,
                          std::span<const double> float_logits,
                          std::span<const double> fx_logits);

// Duration-sweep grid: per (duration, qubit) fidelity plus composites.
struct SweepReport {
    std::vector<double> durations_ns;  // ascending
    std::uint16_t n_qubits = 0;
    std::vector<double> grid;  // row-major, durations x qubits

    double& at(std::size_t duration_idx, std::uint16_t qubit) {
        return grid[duration_idx * n_qubits + qubit];
    }
    double at(std::size_t duration_idx, std::uint16_t qubit) const {
        return grid[duration_idx * n_qubits + qubit];
    }

    double composite(std::size_t duration_idx) const;  // geometric mean over qubits
    double best_per_qubit_composite() const;
    std::string to_csv() const;
    std::string to_json() const;
};

SweepReport make_sweep_report(std::span<const double> durations_ns, std::uint16_t n_qubits);

}  // namespace qread
