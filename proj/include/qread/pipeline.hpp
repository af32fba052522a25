#pragma once

// End-to-end pipeline steps behind the CLI subcommands. Every step reads
// and writes only the declared artifact files, so any prefix of the chain
// can be re-run; `run_repro` chains them all and emits one summary.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qread/config.hpp"
#include "qread/dataset.hpp"
#include "qread/eval.hpp"
#include "qread/fxp.hpp"
#include "qread/nn.hpp"
#include "qread/preprocess.hpp"

namespace qread {

// Advisory lock on the artifacts directory; a second concurrent
// invocation fails fast instead of corrupting artifacts.
class ArtifactLock {
public:
    explicit ArtifactLock(const std::filesystem::path& artifacts_dir);
    ~ArtifactLock();
    ArtifactLock(const ArtifactLock&) = delete;
    ArtifactLock& operator=(const ArtifactLock&) = delete;

private:
    std::filesystem::path path_;
    bool held_ = false;
};

struct ArtifactPaths {
    explicit ArtifactPaths(const RunConfig& cfg);

    std::filesystem::path dataset;
    std::filesystem::path artifacts_dir;
    std::filesystem::path reports_dir;

    std::filesystem::path preprocess(std::uint16_t qubit) const;
    std::filesystem::path preprocess_at(std::uint16_t qubit, double duration_ns) const;
    std::filesystem::path teacher(std::uint16_t qubit) const;
    std::filesystem::path teacher_logits(std::uint16_t qubit) const;
    std::filesystem::path student(std::uint16_t qubit) const;
    std::filesystem::path student_ablated(std::uint16_t qubit) const;
    std::filesystem::path student_at(std::uint16_t qubit, double duration_ns) const;
    std::filesystem::path quant(std::uint16_t qubit) const;
    std::filesystem::path manifest(const std::string& step) const;
};

// In-memory cache threaded through `run_repro` so chained steps skip
// re-reading the trace file and re-running the teacher forward pass.
struct PipelineCache {
    std::optional<TraceSet> traces;
    std::optional<std::pair<TraceSet, TraceSet>> train_test;
    std::map<std::uint16_t, std::vector<double>> teacher_train_logits;
};

// Per-qubit hard labels of a trace set.
std::vector<std::uint8_t> labels_for(const TraceSet& set, std::uint16_t qubit);

// Flattened raw per-qubit trace (I then Q, analog units): the teacher's
// input view.
std::vector<double> teacher_inputs(const TraceSet& set, std::uint16_t qubit);

// Teacher logits over a trace set, built chunk-wise to bound memory.
std::vector<double> teacher_logits_for(const Network& teacher, const TraceSet& set,
                                       std::uint16_t qubit);

void step_generate(const RunConfig& cfg, PipelineCache* cache = nullptr);

void step_train_mf(const RunConfig& cfg, PipelineCache* cache = nullptr);

struct TeacherStepResult {
    std::map<std::uint16_t, TrainStats> stats;
};
TeacherStepResult step_train_teacher(const RunConfig& cfg, PipelineCache* cache = nullptr);

struct DistillStepResult {
    std::map<std::uint16_t, double> student_fidelity;      // held-out, float path
    std::map<std::uint16_t, double> final_probe_loss;
    double ablated_fidelity = 0.0;  // low-SNR qubit, averaging-only input
};
DistillStepResult step_distill(const RunConfig& cfg, PipelineCache* cache = nullptr);

void step_quantize(const RunConfig& cfg);

struct QubitEval {
    double teacher_fidelity = 0.0;
    double student_fidelity = 0.0;  // float path, exact normalization
    Confusion student_confusion;
    double fx_fidelity = 0.0;
    double agreement = 0.0;  // float hardware-mode twin vs fixed point
    double max_logit_dev = 0.0;
    std::uint64_t fx_saturations = 0;
    std::uint64_t test_records = 0;
};

struct EvaluateReport {
    std::vector<QubitEval> qubits;
    double f_gm_all = 0.0;           // geometric mean of float student fidelities
    double f_gm_excl_low_snr = 0.0;  // same, excluding the low-SNR qubit
    double f_gm_fx = 0.0;            // geometric mean of fixed-point fidelities
    std::string to_json() const;
};
EvaluateReport step_evaluate(const RunConfig& cfg, PipelineCache* cache = nullptr);

// Checks an expectations JSON (flat {metric: threshold} object) against an
// evaluation report; returns human-readable violations.
std::vector<std::string> check_expectations(const EvaluateReport& report,
                                            const std::string& expectations_json);

SweepReport step_sweep(const RunConfig& cfg, PipelineCache* cache = nullptr);

// Latency model from config alone; weights do not affect cycle counts.
std::vector<LatencyReport> step_latency(const RunConfig& cfg, double clock_mhz);

// generate -> train-mf -> train-teacher -> distill -> quantize -> evaluate
// -> sweep -> latency; writes reports/summary.json and returns its text.
std::string run_repro(const RunConfig& cfg);

}  // namespace qread
