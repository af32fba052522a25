#include "qread/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace qread {

namespace {

using nlohmann::json;

const json& member(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw ConfigError("config key '" + path + "' must be an object");
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError("config key '" + path + "." + key + "' is missing");
    return *it;
}

double num(const json& j, const std::string& key, const std::string& path) {
    const json& v = member(j, key, path);
    if (!v.is_number()) throw ConfigError("config key '" + path + "." + key + "' must be a number");
    return v.get<double>();
}

std::uint64_t uint(const json& j, const std::string& key, const std::string& path) {
    const json& v = member(j, key, path);
    if (!v.is_number_unsigned())
        throw ConfigError("config key '" + path + "." + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::string str(const json& j, const std::string& key, const std::string& path) {
    const json& v = member(j, key, path);
    if (!v.is_string()) throw ConfigError("config key '" + path + "." + key + "' must be a string");
    return v.get<std::string>();
}

TrainConfig parse_train(const json& j, const std::string& path) {
    TrainConfig t;
    t.learning_rate = num(j, "learning_rate", path);
    t.epochs = static_cast<std::uint32_t>(uint(j, "epochs", path));
    t.batch_size = static_cast<std::uint32_t>(uint(j, "batch_size", path));
    t.seed = uint(j, "seed", path);
    std::string opt = str(j, "optimizer", path);
    if (opt == "adam")
        t.optimizer = TrainConfig::Optimizer::adam;
    else if (opt == "sgd")
        t.optimizer = TrainConfig::Optimizer::sgd;
    else
        throw ConfigError("config key '" + path + ".optimizer' must be \"adam\" or \"sgd\"");
    return t;
}

AveragingSpec parse_averaging(const json& j, const std::string& path) {
    AveragingSpec spec;
    spec.groups_per_channel = static_cast<std::uint32_t>(uint(j, "groups", path));
    if (j.contains("window_override_at_full_duration"))
        spec.window_override =
            static_cast<std::uint32_t>(uint(j, "window_override_at_full_duration", path));
    return spec;
}

}  // namespace

const AveragingSpec& RunConfig::averaging_for(std::uint16_t qubit) const {
    return architecture_map.at(qubit) == Arch::fnn_a ? avg_a : avg_b;
}

NetworkSpec RunConfig::student_spec(std::uint16_t qubit) const {
    const AveragingSpec& avg = averaging_for(qubit);
    return {2 * avg.groups_per_channel + 1, {16, 8}, 1};
}

NetworkSpec RunConfig::teacher_spec() const {
    return {2 * synth.samples_per_channel, teacher_hidden_dims, 1};
}

AveragingSpec RunConfig::averaging_at(std::uint16_t qubit, std::uint32_t samples) const {
    AveragingSpec spec = averaging_for(qubit);
    if (samples != synth.samples_per_channel) spec.window_override.reset();
    return spec;
}

void RunConfig::validate() const {
    const std::uint16_t nq = n_qubits();
    if (nq == 0) throw ConfigError("config key 'synthetic.qubits' must not be empty");
    if (architecture_map.size() != nq)
        throw ConfigError("config key 'distill.architecture_map' must list one entry per qubit");
    if (low_snr_qubit >= nq) throw ConfigError("config key 'distill.low_snr_qubit' out of range");
    if (train_per_config == 0 || test_per_config == 0)
        throw ConfigError("config keys 'split.train_per_config'/'test_per_config' must be > 0");
    if (train_per_config + test_per_config > synth.traces_per_config)
        throw ConfigError("config: split train+test exceeds synthetic.traces_per_config");
    if (durations_ns.empty()) throw ConfigError("config key 'durations_ns' must not be empty");
    if (!std::is_sorted(durations_ns.begin(), durations_ns.end()))
        throw ConfigError("config key 'durations_ns' must be sorted ascending");
    double full = double(synth.samples_per_channel) * double(synth.sample_period_ns);
    if (durations_ns.back() > full)
        throw ConfigError("config key 'durations_ns' exceeds the stored trace duration");
    if (!(clock_mhz > 0)) throw ConfigError("config key 'clock_mhz' must be > 0");
    if (teacher_hidden_dims.empty())
        throw ConfigError("config key 'teacher.hidden_dims' must not be empty");
    try {
        distill.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("config key 'distill': ") + e.what());
    }
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig cfg;
    const json& paths = member(j, "paths", "");
    cfg.dataset_path = str(paths, "dataset", "paths");
    cfg.artifacts_dir = str(paths, "artifacts_dir", "paths");
    cfg.reports_dir = str(paths, "reports_dir", "paths");
    if (const char* env = std::getenv("QREAD_ARTIFACTS")) cfg.artifacts_dir = env;

    const json& synth = member(j, "synthetic", "");
    cfg.synth.samples_per_channel = static_cast<std::uint32_t>(uint(synth, "samples_per_channel", "synthetic"));
    cfg.synth.sample_period_ns = static_cast<float>(num(synth, "sample_period_ns", "synthetic"));
    cfg.synth.adc_scale = static_cast<float>(num(synth, "adc_scale", "synthetic"));
    cfg.synth.traces_per_config = static_cast<std::uint32_t>(uint(synth, "traces_per_config", "synthetic"));
    cfg.synth.seed = uint(synth, "seed", "synthetic");
    const json& qubits = member(synth, "qubits", "synthetic");
    if (!qubits.is_array() || qubits.empty())
        throw ConfigError("config key 'synthetic.qubits' must be a non-empty array");
    for (std::size_t q = 0; q < qubits.size(); ++q) {
        std::string qpath = "synthetic.qubits[" + std::to_string(q) + "]";
        const json& jq = qubits[q];
        QubitSynth s;
        const json& c0 = member(jq, "c0", qpath);
        const json& c1 = member(jq, "c1", qpath);
        if (!c0.is_array() || c0.size() != 2 || !c1.is_array() || c1.size() != 2)
            throw ConfigError("config key '" + qpath + ".c0/c1' must be [I, Q] pairs");
        s.c0_i = c0[0].get<double>();
        s.c0_q = c0[1].get<double>();
        s.c1_i = c1[0].get<double>();
        s.c1_q = c1[1].get<double>();
        s.tau_ns = num(jq, "tau_ns", qpath);
        s.sigma_noise = num(jq, "sigma_noise", qpath);
        s.t1_ns = num(jq, "t1_ns", qpath);
        cfg.synth.qubits.push_back(s);
    }
    const json& xt = member(synth, "crosstalk", "synthetic");
    if (!xt.is_array() || xt.size() != qubits.size())
        throw ConfigError("config key 'synthetic.crosstalk' must have one row per qubit");
    for (std::size_t r = 0; r < xt.size(); ++r) {
        if (!xt[r].is_array() || xt[r].size() != qubits.size())
            throw ConfigError("config key 'synthetic.crosstalk[" + std::to_string(r) +
                              "]' must have one column per qubit");
        for (const auto& v : xt[r]) cfg.synth.crosstalk.push_back(v.get<double>());
    }

    const json& split = member(j, "split", "");
    cfg.train_per_config = static_cast<std::uint32_t>(uint(split, "train_per_config", "split"));
    cfg.test_per_config = static_cast<std::uint32_t>(uint(split, "test_per_config", "split"));
    cfg.split_seed = uint(split, "seed", "split");

    const json& avg = member(j, "averaging", "");
    cfg.avg_a = parse_averaging(member(avg, "fnn_a", "averaging"), "averaging.fnn_a");
    cfg.avg_b = parse_averaging(member(avg, "fnn_b", "averaging"), "averaging.fnn_b");

    const json& teacher = member(j, "teacher", "");
    const json& hidden = member(teacher, "hidden_dims", "teacher");
    if (!hidden.is_array() || hidden.empty())
        throw ConfigError("config key 'teacher.hidden_dims' must be a non-empty array");
    for (const auto& h : hidden) cfg.teacher_hidden_dims.push_back(h.get<std::uint32_t>());
    cfg.teacher_train = parse_train(teacher, "teacher");

    const json& distill = member(j, "distill", "");
    cfg.distill.alpha = num(distill, "alpha", "distill");
    cfg.distill.temperature = num(distill, "temperature", "distill");
    cfg.distill.train = parse_train(distill, "distill");
    const json& arch_map = member(distill, "architecture_map", "distill");
    if (!arch_map.is_array())
        throw ConfigError("config key 'distill.architecture_map' must be an array");
    for (std::size_t q = 0; q < arch_map.size(); ++q) {
        std::string a = arch_map[q].get<std::string>();
        if (a == "fnn_a")
            cfg.architecture_map.push_back(Arch::fnn_a);
        else if (a == "fnn_b")
            cfg.architecture_map.push_back(Arch::fnn_b);
        else
            throw ConfigError("config key 'distill.architecture_map[" + std::to_string(q) +
                              "]' must be \"fnn_a\" or \"fnn_b\"");
    }
    cfg.low_snr_qubit = static_cast<std::uint16_t>(uint(distill, "low_snr_qubit", "distill"));
    if (distill.contains("cache_teacher_logits_to_disk"))
        cfg.cache_teacher_logits_to_disk = distill["cache_teacher_logits_to_disk"].get<bool>();
    if (distill.contains("feature_norm_mode")) {
        std::string mode = str(distill, "feature_norm_mode", "distill");
        if (mode == "hardware")
            cfg.student_feature_mode = NormMode::hardware;
        else if (mode == "exact")
            cfg.student_feature_mode = NormMode::exact;
        else
            throw ConfigError("config key 'distill.feature_norm_mode' must be \"hardware\" or \"exact\"");
    }

    const json& durations = member(j, "durations_ns", "");
    if (!durations.is_array() || durations.empty())
        throw ConfigError("config key 'durations_ns' must be a non-empty array");
    for (const auto& d : durations) cfg.durations_ns.push_back(d.get<double>());
    cfg.clock_mhz = num(j, "clock_mhz", "");

    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& cfg) {
    json j;
    j["paths"] = {{"dataset", cfg.dataset_path.string()},
                  {"artifacts_dir", cfg.artifacts_dir.string()},
                  {"reports_dir", cfg.reports_dir.string()}};
    json qubits = json::array();
    for (const auto& q : cfg.synth.qubits)
        qubits.push_back({{"c0", {q.c0_i, q.c0_q}},
                          {"c1", {q.c1_i, q.c1_q}},
                          {"tau_ns", q.tau_ns},
                          {"sigma_noise", q.sigma_noise},
                          {"t1_ns", q.t1_ns}});
    json xt = json::array();
    for (std::size_t r = 0; r < cfg.synth.qubits.size(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < cfg.synth.qubits.size(); ++c)
            row.push_back(cfg.synth.crosstalk[r * cfg.synth.qubits.size() + c]);
        xt.push_back(row);
    }
    j["synthetic"] = {{"samples_per_channel", cfg.synth.samples_per_channel},
                      {"sample_period_ns", cfg.synth.sample_period_ns},
                      {"adc_scale", cfg.synth.adc_scale},
                      {"traces_per_config", cfg.synth.traces_per_config},
                      {"seed", cfg.synth.seed},
                      {"qubits", qubits},
                      {"crosstalk", xt}};
    j["split"] = {{"train_per_config", cfg.train_per_config},
                  {"test_per_config", cfg.test_per_config},
                  {"seed", cfg.split_seed}};
    auto avg_json = [](const AveragingSpec& a) {
        json v = {{"groups", a.groups_per_channel}};
        if (a.window_override) v["window_override_at_full_duration"] = *a.window_override;
        return v;
    };
    j["averaging"] = {{"fnn_a", avg_json(cfg.avg_a)}, {"fnn_b", avg_json(cfg.avg_b)}};
    auto train_json = [](const TrainConfig& t) {
        return json{{"learning_rate", t.learning_rate},
                    {"epochs", t.epochs},
                    {"batch_size", t.batch_size},
                    {"seed", t.seed},
                    {"optimizer", t.optimizer == TrainConfig::Optimizer::adam ? "adam" : "sgd"}};
    };
    j["teacher"] = train_json(cfg.teacher_train);
    j["teacher"]["hidden_dims"] = cfg.teacher_hidden_dims;
    j["distill"] = train_json(cfg.distill.train);
    j["distill"]["alpha"] = cfg.distill.alpha;
    j["distill"]["temperature"] = cfg.distill.temperature;
    json arch = json::array();
    for (Arch a : cfg.architecture_map) arch.push_back(a == Arch::fnn_a ? "fnn_a" : "fnn_b");
    j["distill"]["architecture_map"] = arch;
    j["distill"]["low_snr_qubit"] = cfg.low_snr_qubit;
    j["distill"]["cache_teacher_logits_to_disk"] = cfg.cache_teacher_logits_to_disk;
    j["distill"]["feature_norm_mode"] =
        cfg.student_feature_mode == NormMode::hardware ? "hardware" : "exact";
    j["durations_ns"] = cfg.durations_ns;
    j["clock_mhz"] = cfg.clock_mhz;
    return j.dump(2) + "\n";
}

std::uint64_t config_hash(const RunConfig& cfg) {
    std::string s = dump_run_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace qread
