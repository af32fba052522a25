#include "qread/distill.hpp"

#include <cmath>
#include <string>

namespace qread {

void DistillConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("distill alpha must be in [0, 1]");
    if (!(temperature > 0.0)) throw Error("distill temperature must be > 0");
}

void DistillBatchView::validate() const {
    if (features == nullptr || feature_dim == 0) throw Error("distill view has no features");
    if (teacher_logits.size() != labels.size())
        throw Error("distill view length mismatch: " + std::to_string(teacher_logits.size()) +
                    " teacher logits vs " + std::to_string(labels.size()) + " labels");
}

double distill_loss(double student_logit, double teacher_logit, double label, double alpha,
                    double temperature) {
    double ce = bce_loss(student_logit, label);
    double soft = (student_logit - teacher_logit) / temperature;
    double kd = soft * soft;
    return alpha * ce + (1.0 - alpha) * kd;
}

double distill_loss_grad(double student_logit, double teacher_logit, double label, double alpha,
                         double temperature) {
    double dce = sigmoid(student_logit) - label;
    double dkd = 2.0 * (student_logit - teacher_logit) / (temperature * temperature);
    return alpha * dce + (1.0 - alpha) * dkd;
}

StudentResult train_student(const DistillBatchView& view, const NetworkSpec& spec,
                            const DistillConfig& cfg) {
    cfg.validate();
    view.validate();
    spec.validate();

    StudentResult result;
    result.net = init_network(spec, cfg.train.seed);

    if (cfg.alpha == 1.0) {
        // Pure supervised path; the teacher is ignored entirely.
        result.stats = train_supervised(result.net, view.features, view.labels, cfg.train);
        return result;
    }

    const double alpha = cfg.alpha;
    const double temp = cfg.temperature;
    BatchObjective obj = [&view, alpha, temp](std::span<const std::uint32_t> rows,
                                              std::span<const double> logits,
                                              std::span<double> dldz) {
        double loss = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double y = view.labels[rows[i]] ? 1.0 : 0.0;
            double t = view.teacher_logits[rows[i]];
            loss += distill_loss(logits[i], t, y, alpha, temp);
            dldz[i] = distill_loss_grad(logits[i], t, y, alpha, temp);
        }
        return loss / double(rows.size());
    };
    result.stats = train_minibatch(result.net, view.features, view.size(), obj, cfg.train);
    return result;
}

}  // namespace qread
