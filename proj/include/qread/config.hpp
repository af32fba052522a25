#pragma once

// Declarative run configuration: one JSON file drives the whole pipeline.
// Seeds are mandatory so every published number is reproducible.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qread/dataset.hpp"
#include "qread/distill.hpp"
#include "qread/nn.hpp"
#include "qread/preprocess.hpp"

namespace qread {

enum class Arch { fnn_a, fnn_b };

struct RunConfig {
    std::filesystem::path dataset_path;
    std::filesystem::path artifacts_dir;
    std::filesystem::path reports_dir;

    SynthConfig synth;

    std::uint32_t train_per_config = 0;
    std::uint32_t test_per_config = 0;
    std::uint64_t split_seed = 0;

    AveragingSpec avg_a;  // window override applies at the full duration only
    AveragingSpec avg_b;

    std::vector<std::uint32_t> teacher_hidden_dims;
    TrainConfig teacher_train;

    DistillConfig distill;
    std::vector<Arch> architecture_map;  // per qubit
    std::uint16_t low_snr_qubit = 0;     // MF-ablation study target
    bool cache_teacher_logits_to_disk = false;
    // Students train on the same normalization the deployed datapath
    // computes (hardware shift) by default; exact sigma division is kept
    // as a study option.
    NormMode student_feature_mode = NormMode::hardware;

    std::vector<double> durations_ns;  // ascending; last one is the full duration
    double clock_mhz = 100.0;

    std::uint16_t n_qubits() const { return synth.n_qubits(); }
    const AveragingSpec& averaging_for(std::uint16_t qubit) const;
    NetworkSpec student_spec(std::uint16_t qubit) const;
    NetworkSpec teacher_spec() const;

    // Averaging spec for a sliced trace length: the full-duration window
    // override applies only at the trained full length; otherwise the
    // window falls back to floor(S / G).
    AveragingSpec averaging_at(std::uint16_t qubit, std::uint32_t samples) const;

    void validate() const;  // throws ConfigError with the offending key path
};

// Parses and validates a config file. The QREAD_ARTIFACTS environment
// variable, when set, overrides paths.artifacts_dir.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& json_text);

// Canonical serialization of the parsed config (used for the manifest hash).
std::string dump_run_config(const RunConfig& cfg);

// FNV-1a hash of the canonical config dump.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace qread
