#pragma once

// Test-only oracles, independent of the library code paths they check.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qread/dataset.hpp"
#include "qread/preprocess.hpp"

namespace qread::testing {

// Matched-filter + midpoint-threshold classifier: fits an envelope on the
// train set, places the decision threshold halfway between the class means
// of the filtered scalar, and scores the test set. The baseline every
// learned model is judged against.
double mf_threshold_accuracy(const TraceSet& train, const TraceSet& test, std::uint16_t qubit);

// Same, scored on the training set (resubstitution).
double mf_threshold_accuracy(const TraceSet& set, std::uint16_t qubit);

// Analytic two-class Gaussian Bayes accuracy for mean separation d at unit
// sigma: Phi(d / 2).
double gaussian_bayes_accuracy(double d);

// Two Gaussian blobs in `dim` dimensions, means +-d/2 along the first
// coordinate, unit noise; labels 1 for the positive blob.
void gaussian_blobs(std::size_t n_per_class, std::size_t dim, double d, std::uint64_t seed,
                    std::vector<double>& x, std::vector<std::uint8_t>& y);

// Scratch directory under the system temp root, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Small five-qubit synthetic config used across test suites; a scaled-down
// sibling of the shipped desk config (same centers and noise, fewer traces).
SynthConfig small_desk_synth(std::uint32_t traces_per_config, std::uint64_t seed);

}  // namespace qread::testing
