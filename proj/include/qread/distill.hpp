#pragma once

// Knowledge distillation: student networks trained on compact feature
// vectors against a composite of hard-label cross-entropy and an MSE
// match to the frozen teacher's temperature-scaled logits.

#include <cstdint>
#include <span>
#include <vector>

#include "qread/nn.hpp"

namespace qread {

struct DistillConfig {
    double alpha = 0.5;       // weight of the hard-label term, in [0, 1]
    double temperature = 2.0; // logit softening divisor, > 0
    TrainConfig train;

    void validate() const;
};

// alpha * BCE(sigmoid(student), label) + (1 - alpha) * (student/T - teacher/T)^2
double distill_loss(double student_logit, double teacher_logit, double label, double alpha,
                    double temperature);

// d distill_loss / d student_logit
double distill_loss_grad(double student_logit, double teacher_logit, double label, double alpha,
                         double temperature);

// Paired per-record views of one training set: student features plus the
// frozen teacher's logits on the raw view, plus hard labels.
struct DistillBatchView {
    const double* features = nullptr;  // row-major, n x feature_dim
    std::size_t feature_dim = 0;
    std::span<const double> teacher_logits;
    std::span<const std::uint8_t> labels;
    std::size_t size() const { return labels.size(); }

    void validate() const;
};

struct StudentResult {
    Network net;
    TrainStats stats;
};

// Trains a student of the given shape on the feature view. The teacher is
// consumed only through its precomputed logits, so it cannot be mutated.
// With alpha = 1 the teacher term vanishes and the computation path is
// exactly the supervised one.
StudentResult train_student(const DistillBatchView& view, const NetworkSpec& spec,
                            const DistillConfig& cfg);

}  // namespace qread
