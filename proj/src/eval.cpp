#include "qread/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace qread {

FidelityResult assignment_fidelity(std::span<const std::uint8_t> predictions,
                                   std::span<const std::uint8_t> labels) {
    if (predictions.empty()) throw DataError("cannot score an empty prediction set");
    if (predictions.size() != labels.size())
        throw DataError("predictions and labels have different lengths");
    FidelityResult res;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        bool p = predictions[i] != 0;
        bool y = labels[i] != 0;
        if (!y && !p) ++res.confusion.n00;
        if (!y && p) ++res.confusion.n01;
        if (y && !p) ++res.confusion.n10;
        if (y && p) ++res.confusion.n11;
    }
    res.fidelity = double(res.confusion.n00 + res.confusion.n11) / double(predictions.size());
    return res;
}

double geometric_mean(std::span<const double> fidelities) {
    if (fidelities.empty()) throw DataError("geometric mean of an empty set");
    double log_sum = 0.0;
    for (double f : fidelities) {
        if (!(f >= 0.0 && f <= 1.0))
            throw DataError("fidelity " + std::to_string(f) + " outside [0, 1]");
        if (f == 0.0) return 0.0;
        log_sum += std::log(f);
    }
    return std::exp(log_sum / double(fidelities.size()));
}

namespace {

std::string spec_name(const NetworkSpec& spec) {
    std::string s = std::to_string(spec.input_dim);
    for (auto h : spec.hidden_dims) s += "-" + std::to_string(h);
    s += "-" + std::to_string(spec.output_dim);
    return s;
}

void breakdown(const std::vector<NetworkSpec>& specs,
               std::vector<std::pair<std::string, std::uint64_t>>& out, std::uint64_t& total) {
    for (const auto& spec : specs) {
        std::uint64_t p = param_count(spec);
        total += p;
        std::string name = spec_name(spec);
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == name; });
        if (it == out.end()) out.push_back({name, p});
    }
}

}  // namespace

CompressionReport compression_report(const std::vector<NetworkSpec>& teacher_specs,
                                     const std::vector<NetworkSpec>& student_specs) {
    if (teacher_specs.empty() || student_specs.empty())
        throw DataError("compression report needs at least one teacher and one student spec");
    CompressionReport rep;
    breakdown(teacher_specs, rep.teacher_breakdown, rep.teacher_params_total);
    breakdown(student_specs, rep.student_breakdown, rep.student_params_total);
    rep.ncr = 1.0 - double(rep.student_params_total) / double(rep.teacher_params_total);
    rep.single_baseline_params = param_count(teacher_specs.front());
    rep.reduction_vs_single_baseline =
        1.0 - double(rep.student_params_total) / double(rep.single_baseline_params);
    return rep;
}

std::string CompressionReport::to_json() const {
    nlohmann::json j;
    j["teacher_params_total"] = teacher_params_total;
    j["student_params_total"] = student_params_total;
    j["ncr"] = ncr;
    for (const auto& [name, params] : teacher_breakdown)
        j["teacher_breakdown"][name] = params;
    for (const auto& [name, params] : student_breakdown)
        j["student_breakdown"][name] = params;
    j["single_baseline_params"] = single_baseline_params;
    j["reduction_vs_single_baseline"] = reduction_vs_single_baseline;
    j["note"] = "the published 98.93% single-baseline reduction is not reproduced by this "
                "parameter count; both figures are reported";
    return j.dump(2) + "\n";
}

AgreementResult agreement(std::span<const std::uint8_t> float_preds,
                          std::span<const std::uint8_t> fx_preds,
                          std::span<const double> float_logits,
                          std::span<const double> fx_logits) {
    if (float_preds.size() != fx_preds.size() || float_logits.size() != fx_logits.size() ||
        float_preds.size() != float_logits.size())
        throw DataError("agreement inputs have mismatched lengths");
    if (float_preds.empty()) throw DataError("agreement over an empty set");
    AgreementResult res;
    std::uint64_t same = 0;
    for (std::size_t i = 0; i < float_preds.size(); ++i) {
        if ((float_preds[i] != 0) == (fx_preds[i] != 0)) ++same;
        res.max_logit_dev = std::max(res.max_logit_dev, std::abs(float_logits[i] - fx_logits[i]));
    }
    res.agreement = double(same) / double(float_preds.size());
    return res;
}

SweepReport make_sweep_report(std::span<const double> durations_ns, std::uint16_t n_qubits) {
    if (durations_ns.empty() || n_qubits == 0) throw DataError("sweep needs durations and qubits");
    if (!std::is_sorted(durations_ns.begin(), durations_ns.end()))
        throw DataError("sweep durations must be sorted ascending");
    SweepReport rep;
    rep.durations_ns.assign(durations_ns.begin(), durations_ns.end());
    rep.n_qubits = n_qubits;
    rep.grid.assign(durations_ns.size() * n_qubits, 0.0);
    return rep;
}

double SweepReport::composite(std::size_t duration_idx) const {
    std::span<const double> row(grid.data() + duration_idx * n_qubits, n_qubits);
    return geometric_mean(row);
}

double SweepReport::best_per_qubit_composite() const {
    std::vector<double> best(n_qubits, 0.0);
    for (std::uint16_t q = 0; q < n_qubits; ++q)
        for (std::size_t d = 0; d < durations_ns.size(); ++d)
            best[q] = std::max(best[q], at(d, q));
    return geometric_mean(best);
}

std::string SweepReport::to_csv() const {
    std::ostringstream os;
    os << "duration_ns,qubit,fidelity\n";
    char buf[64];
    for (std::size_t d = 0; d < durations_ns.size(); ++d)
        for (std::uint16_t q = 0; q < n_qubits; ++q) {
            std::snprintf(buf, sizeof(buf), "%.0f,%u,%.17g", durations_ns[d], unsigned(q), at(d, q));
            os << buf << "\n";
        }
    return os.str();
}

std::string SweepReport::to_json() const {
    nlohmann::json j;
    j["durations_ns"] = durations_ns;
    j["n_qubits"] = n_qubits;
    for (std::size_t d = 0; d < durations_ns.size(); ++d) {
        nlohmann::json row;
        for (std::uint16_t q = 0; q < n_qubits; ++q) row.push_back(at(d, q));
        j["fidelity"].push_back({{"duration_ns", durations_ns[d]}, {"per_qubit", row},
                                 {"composite", composite(d)}});
    }
    j["best_per_qubit_composite"] = best_per_qubit_composite();
    return j.dump(2) + "\n";
}

}  // namespace qread
