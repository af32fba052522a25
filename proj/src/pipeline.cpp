#include "qread/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include <json.hpp>

#include "qread/distill.hpp"
#include "qread/io.hpp"
#include "qread/parallel.hpp"
#include "qread/rng.hpp"

namespace qread {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

std::string iso_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t qubit, std::uint64_t tag) {
    return mix64(base ^ mix64((qubit << 32) | tag));
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_manifest(const RunConfig& cfg, const ArtifactPaths& paths, const std::string& step,
                    const std::vector<std::string>& outputs, json extra = json::object()) {
    json m;
    m["step"] = step;
    m["version"] = kVersion;
    m["config_hash"] = hex64(config_hash(cfg));
    m["seeds"] = {{"synthetic", cfg.synth.seed},
                  {"split", cfg.split_seed},
                  {"teacher", cfg.teacher_train.seed},
                  {"distill", cfg.distill.train.seed}};
    m["timestamp_utc"] = iso_now();
    m["outputs"] = outputs;
    if (!extra.empty()) m["results"] = extra;
    write_text_file(paths.manifest(step), m.dump(2) + "\n");
}

void require_artifact(const std::filesystem::path& path, const std::string& producer) {
    if (!std::filesystem::exists(path))
        throw DataError("missing artifact " + path.string() + "; run `qread " + producer +
                        "` first");
}

const TraceSet& cached_traces(const RunConfig& cfg, PipelineCache& cache) {
    if (!cache.traces) {
        require_artifact(cfg.dataset_path, "generate");
        cache.traces = load_traces(cfg.dataset_path);
    }
    return *cache.traces;
}

const std::pair<TraceSet, TraceSet>& cached_split(const RunConfig& cfg, PipelineCache& cache) {
    if (!cache.train_test) {
        const TraceSet& all = cached_traces(cfg, cache);
        cache.train_test = split(all, cfg.train_per_config, cfg.test_per_config, cfg.split_seed);
    }
    return *cache.train_test;
}

constexpr char kLogitsMagic[5] = "TLOG";

void save_logits(const std::filesystem::path& path, std::span<const double> logits) {
    ByteWriter w;
    w.magic(kLogitsMagic);
    w.u64(logits.size());
    for (double v : logits) w.f64(v);
    write_file(path, w.data());
}

std::vector<double> load_logits(const std::filesystem::path& path) {
    auto bytes = read_file(path);
    ByteReader r(bytes);
    r.expect_magic(kLogitsMagic, "teacher logits file");
    std::vector<double> out(r.u64());
    for (auto& v : out) v = r.f64();
    r.expect_end("teacher logits file");
    return out;
}

// Teacher logits on the full-duration training view, shared by distill and
// sweep. Order of preference: in-memory cache, on-disk cache, recompute.
const std::vector<double>& teacher_train_logits(const RunConfig& cfg, const ArtifactPaths& paths,
                                                PipelineCache& cache, std::uint16_t qubit) {
    auto it = cache.teacher_train_logits.find(qubit);
    if (it != cache.teacher_train_logits.end()) return it->second;

    auto disk = paths.teacher_logits(qubit);
    if (cfg.cache_teacher_logits_to_disk && std::filesystem::exists(disk)) {
        auto [pos, _] = cache.teacher_train_logits.emplace(qubit, load_logits(disk));
        return pos->second;
    }

    require_artifact(paths.teacher(qubit), "train-teacher");
    Network teacher = load_network(paths.teacher(qubit));
    const auto& [train, test] = cached_split(cfg, cache);
    (void)test;
    std::vector<double> logits = teacher_logits_for(teacher, train, qubit);
    if (cfg.cache_teacher_logits_to_disk) save_logits(disk, logits);
    auto [pos, _] = cache.teacher_train_logits.emplace(qubit, std::move(logits));
    return pos->second;
}

QuantNetwork latency_skeleton(const RunConfig& cfg, std::uint16_t qubit) {
    const std::uint32_t s = cfg.synth.samples_per_channel;
    AveragingSpec avg = cfg.averaging_at(qubit, s);
    NetworkSpec spec = cfg.student_spec(qubit);
    QuantNetwork q;
    q.spec = spec;
    q.layers.resize(spec.n_layers());
    for (std::size_t l = 0; l < q.layers.size(); ++l) {
        auto [in, out] = spec.layer_shape(l);
        q.layers[l].in = in;
        q.layers[l].out = out;
        q.layers[l].w.resize(std::size_t(in) * out);
        q.layers[l].b.resize(out);
    }
    q.window = avg.window(s);
    q.groups = avg.groups_per_channel;
    q.samples = s;
    q.env_i.resize(s);
    q.env_q.resize(s);
    q.avg_reciprocal = to_fx(1.0 / double(q.window));
    return q;
}

}  // namespace

ArtifactLock::ArtifactLock(const std::filesystem::path& artifacts_dir) {
    std::filesystem::create_directories(artifacts_dir);
    path_ = artifacts_dir / ".qread.lock";
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
        throw DataError("artifacts directory is locked by another invocation (" + path_.string() +
                        " exists); remove the lock file if it is stale");
    ::close(fd);
    held_ = true;
}

ArtifactLock::~ArtifactLock() {
    if (held_) {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
}

ArtifactPaths::ArtifactPaths(const RunConfig& cfg)
    : dataset(cfg.dataset_path), artifacts_dir(cfg.artifacts_dir), reports_dir(cfg.reports_dir) {}

static std::string dur_tag(double duration_ns) {
    return "d" + std::to_string(static_cast<long long>(std::llround(duration_ns)));
}

std::filesystem::path ArtifactPaths::preprocess(std::uint16_t q) const {
    return artifacts_dir / ("pre_q" + std::to_string(q) + ".qpre");
}
std::filesystem::path ArtifactPaths::preprocess_at(std::uint16_t q, double d) const {
    return artifacts_dir / ("pre_q" + std::to_string(q) + "_" + dur_tag(d) + ".qpre");
}
std::filesystem::path ArtifactPaths::teacher(std::uint16_t q) const {
    return artifacts_dir / ("teacher_q" + std::to_string(q) + ".qnnf");
}
std::filesystem::path ArtifactPaths::teacher_logits(std::uint16_t q) const {
    return artifacts_dir / ("teacher_logits_q" + std::to_string(q) + ".tlog");
}
std::filesystem::path ArtifactPaths::student(std::uint16_t q) const {
    return artifacts_dir / ("student_q" + std::to_string(q) + ".qnnf");
}
std::filesystem::path ArtifactPaths::student_ablated(std::uint16_t q) const {
    return artifacts_dir / ("student_q" + std::to_string(q) + "_nomf.qnnf");
}
std::filesystem::path ArtifactPaths::student_at(std::uint16_t q, double d) const {
    return artifacts_dir / ("student_q" + std::to_string(q) + "_" + dur_tag(d) + ".qnnf");
}
std::filesystem::path ArtifactPaths::quant(std::uint16_t q) const {
    return artifacts_dir / ("quant_q" + std::to_string(q) + ".qnnq");
}
std::filesystem::path ArtifactPaths::manifest(const std::string& step) const {
    return artifacts_dir / ("manifest_" + step + ".json");
}

std::vector<std::uint8_t> labels_for(const TraceSet& set, std::uint16_t qubit) {
    std::vector<std::uint8_t> out(set.records.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = set.records[i].qubit_state(qubit) ? 1 : 0;
    return out;
}

std::vector<double> teacher_inputs(const TraceSet& set, std::uint16_t qubit) {
    const std::uint32_t s = set.header.samples_per_channel;
    const double scale = set.header.adc_scale;
    std::vector<double> x(set.records.size() * std::size_t(2) * s);
    parallel_for(static_cast<std::int64_t>(set.records.size()), [&](std::int64_t i) {
        const auto& rec = set.records[i];
        auto ci = rec.channel_i(qubit, s);
        auto cq = rec.channel_q(qubit, s);
        double* row = x.data() + std::size_t(i) * 2 * s;
        for (std::uint32_t t = 0; t < s; ++t) row[t] = double(ci[t]) * scale;
        for (std::uint32_t t = 0; t < s; ++t) row[s + t] = double(cq[t]) * scale;
    });
    return x;
}

std::vector<double> teacher_logits_for(const Network& teacher, const TraceSet& set,
                                       std::uint16_t qubit) {
    const std::uint32_t s = set.header.samples_per_channel;
    if (teacher.spec.input_dim != 2 * s)
        throw DataError("teacher expects " + std::to_string(teacher.spec.input_dim) +
                        " inputs but the trace view has " + std::to_string(2 * s));
    const double scale = set.header.adc_scale;
    const std::size_t chunk = 512;
    std::vector<double> logits(set.records.size());
    std::vector<double> x(chunk * std::size_t(2) * s);
    for (std::size_t start = 0; start < set.records.size(); start += chunk) {
        std::size_t count = std::min(chunk, set.records.size() - start);
        parallel_for(static_cast<std::int64_t>(count), [&](std::int64_t i) {
            const auto& rec = set.records[start + i];
            auto ci = rec.channel_i(qubit, s);
            auto cq = rec.channel_q(qubit, s);
            double* row = x.data() + std::size_t(i) * 2 * s;
            for (std::uint32_t t = 0; t < s; ++t) row[t] = double(ci[t]) * scale;
            for (std::uint32_t t = 0; t < s; ++t) row[s + t] = double(cq[t]) * scale;
        });
        forward_batch(teacher, x.data(), count, logits.data() + start);
    }
    return logits;
}

void step_generate(const RunConfig& cfg, PipelineCache* cache) {
    TraceSet set = generate_synthetic(cfg.synth);
    save_traces(set, cfg.dataset_path);
    ArtifactPaths paths(cfg);
    write_manifest(cfg, paths, "generate", {cfg.dataset_path.string()},
                   json{{"n_traces", set.records.size()}});
    if (cache) cache->traces = std::move(set);
}

void step_train_mf(const RunConfig& cfg, PipelineCache* cache) {
    PipelineCache local;
    PipelineCache& c = cache ? *cache : local;
    const auto& [train, test] = cached_split(cfg, c);
    (void)test;
    ArtifactPaths paths(cfg);
    std::vector<std::string> outputs;
    for (std::uint16_t q = 0; q < cfg.n_qubits(); ++q) {
        AveragingSpec avg = cfg.averaging_at(q, train.header.samples_per_channel);
        PreprocessConstants pre = fit_preprocess(train, q, avg);
        save_preprocess(pre, paths.preprocess(q));
        outputs.push_back(paths.preprocess(q).string());
    }
    write_manifest(cfg, paths, "train-mf", outputs);
}

TeacherStepResult step_train_teacher(const RunConfig& cfg, PipelineCache* cache) {
    PipelineCache local;
    PipelineCache& c = cache ? *cache : local;
    const auto& [train, test] = cached_split(cfg, c);
    (void)test;
    ArtifactPaths paths(cfg);

    TeacherStepResult result;
    std::vector<std::string> outputs;
    json extra;
    for (std::uint16_t q = 0; q < cfg.n_qubits(); ++q) {
        std::vector<double> x = teacher_inputs(train, q);
        std::vector<std::uint8_t> labels = labels_for(train, q);
        TrainConfig tc = cfg.teacher_train;
        tc.seed = derive_seed(cfg.teacher_train.seed, q, 0);
        TeacherResult r = train_teacher(x, labels, cfg.teacher_spec(), tc);
        save_network(r.net, paths.teacher(q));
        outputs.push_back(paths.teacher(q).string());
        extra["probe_losses"]["q" + std::to_string(q)] = r.stats.probe_losses;
        result.stats.emplace(q, std::move(r.stats));
    }
    write_manifest(cfg, paths, "train-teacher", outputs, extra);
    return result;
}

DistillStepResult step_distill(const RunConfig& cfg, PipelineCache* cache) {
    PipelineCache local;
    PipelineCache& c = cache ? *cache : local;
    const auto& [train, test] = cached_split(cfg, c);
    ArtifactPaths paths(cfg);

    DistillStepResult result;
    std::vector<std::string> outputs;
    json extra;
    for (std::uint16_t q = 0; q < cfg.n_qubits(); ++q) {
        require_artifact(paths.preprocess(q), "train-mf");
        PreprocessConstants pre = load_preprocess(paths.preprocess(q));
        std::vector<double> feats = build_feature_matrix(train, q, pre, cfg.student_feature_mode);
        std::vector<std::uint8_t> labels = labels_for(train, q);
        const std::vector<double>& t_logits = teacher_train_logits(cfg, paths, c, q);

        DistillBatchView view;
        view.features = feats.data();
        view.feature_dim = pre.feature_dim();
        view.teacher_logits = t_logits;
        view.labels = labels;

        DistillConfig dc = cfg.distill;
        dc.train.seed = derive_seed(cfg.distill.train.seed, q, 0);
        StudentResult student = train_student(view, cfg.student_spec(q), dc);
        save_network(student.net, paths.student(q));
        outputs.push_back(paths.student(q).string());

        std::vector<double> test_feats = build_feature_matrix(test, q, pre, cfg.student_feature_mode);
        std::vector<double> test_logits = forward_batch(student.net, test_feats);
        FidelityResult fid = assignment_fidelity(predict(test_logits), labels_for(test, q));
        result.student_fidelity[q] = fid.fidelity;
        result.final_probe_loss[q] = student.stats.probe_losses.back();
        extra["students"]["q" + std::to_string(q)] = {
            {"fidelity", fid.fidelity}, {"final_probe_loss", student.stats.probe_losses.back()}};

        if (q == cfg.low_snr_qubit) {
            // Ablation study: same architecture and data without the MF
            // feature, to measure what the matched filter contributes.
            AveragingSpec avg = cfg.averaging_at(q, train.header.samples_per_channel);
            PreprocessConstants pre_nomf = fit_preprocess(train, q, avg, /*include_mf=*/false);
            std::vector<double> f2 = build_feature_matrix(train, q, pre_nomf, cfg.student_feature_mode);
            DistillBatchView view2 = view;
            view2.features = f2.data();
            view2.feature_dim = pre_nomf.feature_dim();
            NetworkSpec spec2 = cfg.student_spec(q);
            spec2.input_dim = pre_nomf.feature_dim();
            DistillConfig dc2 = cfg.distill;
            dc2.train.seed = derive_seed(cfg.distill.train.seed, q, 1);
            StudentResult ablated = train_student(view2, spec2, dc2);
            save_network(ablated.net, paths.student_ablated(q));
            outputs.push_back(paths.student_ablated(q).string());

            std::vector<double> tf2 = build_feature_matrix(test, q, pre_nomf, cfg.student_feature_mode);
            std::vector<double> tl2 = forward_batch(ablated.net, tf2);
            FidelityResult fid2 = assignment_fidelity(predict(tl2), labels_for(test, q));
            result.ablated_fidelity = fid2.fidelity;
            extra["ablation"] = {{"qubit", q},
                                 {"fidelity_with_mf", fid.fidelity},
                                 {"fidelity_without_mf", fid2.fidelity}};
        }
    }
    write_manifest(cfg, paths, "distill", outputs, extra);
    return result;
}

void step_quantize(const RunConfig& cfg) {
    ArtifactPaths paths(cfg);
    std::vector<std::string> outputs;
    for (std::uint16_t q = 0; q < cfg.n_qubits(); ++q) {
        require_artifact(paths.preprocess(q), "train-mf");
        require_artifact(paths.student(q), "distill");
        PreprocessConstants pre = load_preprocess(paths.preprocess(q));
        Network student = load_network(paths.student(q));
        QuantNetwork qn = quantize_network(student, pre);
        save_quant(qn, paths.quant(q));
        outputs.push_back(paths.quant(q).string());
    }
    write_manifest(cfg, paths, "quantize", outputs);
}

EvaluateReport step_evaluate(const RunConfig& cfg, PipelineCache* cache) {
    PipelineCache local;
    PipelineCache& c = cache ? *cache : local;
    const auto& [train, test] = cached_split(cfg, c);
    (void)train;
    if (test.records.empty()) throw DataError("evaluation test set is empty");
    ArtifactPaths paths(cfg);

    EvaluateReport report;
    std::vector<double> float_fids, fx_fids;
    for (std::uint16_t q = 0; q < cfg.n_qubits(); ++q) {
        require_artifact(paths.preprocess(q), "train-mf");
        require_artifact(paths.student(q), "distill");
        require_artifact(paths.quant(q), "quantize");
        require_artifact(paths.teacher(q), "train-teacher");
        PreprocessConstants pre = load_preprocess(paths.preprocess(q));
        Network student = load_network(paths.student(q));
        QuantNetwork qn = load_quant(paths.quant(q));
        Network teacher = load_network(paths.teacher(q));

        std::vector<std::uint8_t> labels = labels_for(test, q);
        QubitEval ev;
        ev.test_records = test.records.size();

        // Float student on the training-path features.
        std::vector<double> feats = build_feature_matrix(test, q, pre, cfg.student_feature_mode);
        std::vector<double> logits = forward_batch(student, feats);
        FidelityResult fid = assignment_fidelity(predict(logits), labels);
        ev.student_fidelity = fid.fidelity;
        ev.student_confusion = fid.confusion;

        // Teacher on the raw view.
        std::vector<double> t_logits = teacher_logits_for(teacher, test, q);
        ev.teacher_fidelity = assignment_fidelity(predict(t_logits), labels).fidelity;

        // Fixed point vs its float twin (hardware-mode normalization).
        std::vector<double> hw_logits;
        if (cfg.student_feature_mode == NormMode::hardware) {
            hw_logits = logits;
        } else {
            std::vector<double> hw_feats = build_feature_matrix(test, q, pre, NormMode::hardware);
            hw_logits = forward_batch(student, hw_feats);
        }
        std::vector<FxResult> fx = fx_infer_batch(qn, test, q);
        std::vector<double> fx_logits(fx.size());
        std::vector<std::uint8_t> fx_preds(fx.size());
        for (std::size_t i = 0; i < fx.size(); ++i) {
            fx_logits[i] = from_fx(fx[i].logit);
            fx_preds[i] = fx[i].state;
            ev.fx_saturations += fx[i].saturations;
        }
        ev.fx_fidelity = assignment_fidelity(fx_preds, labels).fidelity;
        AgreementResult agr = agreement(predict(hw_logits), fx_preds, hw_logits, fx_logits);
        ev.agreement = agr.agreement;
        ev.max_logit_dev = agr.max_logit_dev;

        float_fids.push_back(ev.student_fidelity);
        fx_fids.push_back(ev.fx_fidelity);
        report.qubits.push_back(ev);
    }

    report.f_gm_all = geometric_mean(float_fids);
    report.f_gm_fx = geometric_mean(fx_fids);
    std::vector<double> subset;
    for (std::uint16_t q = 0; q < cfg.n_qubits(); ++q)
        if (q != cfg.low_snr_qubit) subset.push_back(float_fids[q]);
    report.f_gm_excl_low_snr = subset.empty() ? report.f_gm_all : geometric_mean(subset);

    write_text_file(paths.reports_dir / "evaluate.json", report.to_json());
    write_manifest(cfg, paths, "evaluate", {(paths.reports_dir / "evaluate.json").string()});
    return report;
}

std::string EvaluateReport::to_json() const {
    json j;
    for (std::size_t q = 0; q < qubits.size(); ++q) {
        const QubitEval& e = qubits[q];
        j["qubits"].push_back({{"qubit", q},
                               {"teacher_fidelity", e.teacher_fidelity},
                               {"student_fidelity", e.student_fidelity},
                               {"confusion",
                                {{"n00", e.student_confusion.n00},
                                 {"n01", e.student_confusion.n01},
                                 {"n10", e.student_confusion.n10},
                                 {"n11", e.student_confusion.n11}}},
                               {"fx_fidelity", e.fx_fidelity},
                               {"agreement", e.agreement},
                               {"max_logit_dev", e.max_logit_dev},
                               {"fx_saturations", e.fx_saturations},
                               {"test_records", e.test_records}});
    }
    j["f_gm_all"] = f_gm_all;
    j["f_gm_excl_low_snr"] = f_gm_excl_low_snr;
    j["f_gm_fx"] = f_gm_fx;
    return j.dump(2) + "\n";
}

std::vector<std::string> check_expectations(const EvaluateReport& report,
                                            const std::string& expectations_json) {
    json j;
    try {
        j = json::parse(expectations_json);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("expectations file is not valid JSON: ") + e.what());
    }
    std::vector<std::string> violations;
    auto check_min = [&](const char* key, double value, const std::string& what) {
        if (j.contains(key) && value < j[key].get<double>())
            violations.push_back(what + " = " + std::to_string(value) + " below expected " +
                                 std::to_string(j[key].get<double>()));
    };
    for (std::size_t q = 0; q < report.qubits.size(); ++q) {
        const auto& e = report.qubits[q];
        std::string tag = "qubit " + std::to_string(q);
        check_min("min_student_fidelity", e.student_fidelity, tag + " student fidelity");
        check_min("min_agreement", e.agreement, tag + " float/fixed agreement");
        if (j.contains("max_fidelity_drop_vs_teacher")) {
            double drop = e.teacher_fidelity - e.student_fidelity;
            if (drop > j["max_fidelity_drop_vs_teacher"].get<double>())
                violations.push_back(tag + " fidelity drop vs teacher = " + std::to_string(drop));
        }
    }
    check_min("min_f_gm", report.f_gm_all, "geometric-mean fidelity");
    return violations;
}

SweepReport step_sweep(const RunConfig& cfg, PipelineCache* cache) {
    PipelineCache local;
    PipelineCache& c = cache ? *cache : local;
    const auto& [train, test] = cached_split(cfg, c);
    ArtifactPaths paths(cfg);

    SweepReport report = make_sweep_report(cfg.durations_ns, cfg.n_qubits());
    std::vector<std::string> outputs;
    for (std::size_t d = 0; d < cfg.durations_ns.size(); ++d) {
        double duration = cfg.durations_ns[d];
        TraceSet train_d = slice_duration(train, duration);
        TraceSet test_d = slice_duration(test, duration);
        for (std::uint16_t q = 0; q < cfg.n_qubits(); ++q) {
            AveragingSpec avg = cfg.averaging_at(q, train_d.header.samples_per_channel);
            PreprocessConstants pre = fit_preprocess(train_d, q, avg);
            save_preprocess(pre, paths.preprocess_at(q, duration));

            std::vector<double> feats = build_feature_matrix(train_d, q, pre, cfg.student_feature_mode);
            std::vector<std::uint8_t> labels = labels_for(train_d, q);
            DistillBatchView view;
            view.features = feats.data();
            view.feature_dim = pre.feature_dim();
            view.teacher_logits = teacher_train_logits(cfg, paths, c, q);
            view.labels = labels;

            DistillConfig dc = cfg.distill;
            dc.train.seed = derive_seed(cfg.distill.train.seed, q, 100 + d);
            StudentResult student = train_student(view, cfg.student_spec(q), dc);
            save_network(student.net, paths.student_at(q, duration));
            outputs.push_back(paths.student_at(q, duration).string());

            std::vector<double> tf = build_feature_matrix(test_d, q, pre, cfg.student_feature_mode);
            std::vector<double> tl = forward_batch(student.net, tf);
            report.at(d, q) = assignment_fidelity(predict(tl), labels_for(test_d, q)).fidelity;
        }
    }
    write_text_file(paths.reports_dir / "sweep.json", report.to_json());
    write_text_file(paths.reports_dir / "sweep.csv", report.to_csv());
    write_manifest(cfg, paths, "sweep",
                   {(paths.reports_dir / "sweep.json").string(),
                    (paths.reports_dir / "sweep.csv").string()});
    return report;
}

std::vector<LatencyReport> step_latency(const RunConfig& cfg, double clock_mhz) {
    ArtifactPaths paths(cfg);
    std::vector<LatencyReport> reports;
    std::vector<std::string> outputs;
    for (std::uint16_t q = 0; q < cfg.n_qubits(); ++q) {
        QuantNetwork skel = latency_skeleton(cfg, q);
        LatencyReport rep = latency_report(skel, clock_mhz);
        auto jpath = paths.reports_dir / ("latency_q" + std::to_string(q) + ".json");
        auto tpath = paths.reports_dir / ("latency_q" + std::to_string(q) + ".txt");
        write_text_file(jpath, rep.to_json());
        write_text_file(tpath, rep.to_text());
        outputs.push_back(jpath.string());
        outputs.push_back(tpath.string());
        reports.push_back(std::move(rep));
    }
    write_manifest(cfg, paths, "latency", outputs);
    return reports;
}

std::string run_repro(const RunConfig& cfg) {
    PipelineCache cache;
    ArtifactPaths paths(cfg);

    step_generate(cfg, &cache);
    step_train_mf(cfg, &cache);
    TeacherStepResult teacher = step_train_teacher(cfg, &cache);
    DistillStepResult distilled = step_distill(cfg, &cache);
    step_quantize(cfg);
    EvaluateReport evaluation = step_evaluate(cfg, &cache);
    SweepReport sweep = step_sweep(cfg, &cache);
    std::vector<LatencyReport> latency = step_latency(cfg, cfg.clock_mhz);

    // Architecture-derivable reference numbers (independent of this run's
    // configuration): parameter counts and the published fidelity row.
    NetworkSpec a = NetworkSpec::student_a();
    NetworkSpec b = NetworkSpec::student_b();
    NetworkSpec t = NetworkSpec::teacher();
    CompressionReport comp = compression_report({t, t, t, t, t}, {a, a, a, b, b});
    const std::vector<double> published_row = {0.968, 0.748, 0.929, 0.934, 0.959};
    std::vector<double> published_subset = {0.968, 0.929, 0.934, 0.959};

    json summary;
    summary["reference"] = {
        {"param_counts",
         {{"student_a", param_count(a)},
          {"student_b", param_count(b)},
          {"teacher", param_count(t)},
          {"students_total", 3 * param_count(a) + 2 * param_count(b)},
          {"teachers_total", 5 * param_count(t)}}},
        {"ncr", comp.ncr},
        {"reduction_vs_single_baseline", comp.reduction_vs_single_baseline},
        {"published_fidelities", published_row},
        {"published_f_5q", geometric_mean(published_row)},
        {"published_f_4q", geometric_mean(published_subset)},
    };

    json run;
    for (auto& [q, stats] : teacher.stats)
        run["teacher_probe_losses"]["q" + std::to_string(q)] = stats.probe_losses;
    run["evaluate"] = json::parse(evaluation.to_json());
    run["ablation"] = {{"qubit", cfg.low_snr_qubit},
                       {"fidelity_with_mf", distilled.student_fidelity.at(cfg.low_snr_qubit)},
                       {"fidelity_without_mf", distilled.ablated_fidelity}};
    run["sweep"] = json::parse(sweep.to_json());
    for (std::size_t q = 0; q < latency.size(); ++q)
        run["latency_total_cycles"]["q" + std::to_string(q)] = latency[q].total_cycles;
    summary["run"] = run;

    std::string text = summary.dump(2) + "\n";
    write_text_file(paths.reports_dir / "summary.json", text);
    write_manifest(cfg, paths, "repro", {(paths.reports_dir / "summary.json").string()});
    return text;
}

}  // namespace qread
