// Command-line entry point: wires the training/quantization/evaluation
// pipeline end to end from one declarative config file.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qread/io.hpp"
#include "qread/pipeline.hpp"

namespace {

using namespace qread;

struct Options {
    std::string config_path;
    int qubit = -1;
    double duration_ns = -1.0;
    double clock_mhz = -1.0;
    long long seed = -1;
    bool validate_only = false;
    std::string format = "text";
    std::string expectations_path;
};

RunConfig load_config(const Options& opt) {
    RunConfig cfg = load_run_config(opt.config_path);
    if (opt.seed >= 0) {
        // One flag reseeds the whole pipeline deterministically.
        cfg.synth.seed = static_cast<std::uint64_t>(opt.seed);
        cfg.split_seed = cfg.synth.seed + 1;
        cfg.teacher_train.seed = cfg.synth.seed + 2;
        cfg.distill.train.seed = cfg.synth.seed + 3;
    }
    return cfg;
}

int cmd_infer(const RunConfig& cfg, const Options& opt) {
    if (opt.qubit < 0 || opt.qubit >= cfg.n_qubits())
        throw ConfigError("infer needs --qubit in [0, " + std::to_string(cfg.n_qubits() - 1) + "]");
    auto q = static_cast<std::uint16_t>(opt.qubit);
    ArtifactPaths paths(cfg);
    TraceSet set = load_traces(cfg.dataset_path);
    if (opt.duration_ns > 0) set = slice_duration(set, opt.duration_ns);
    QuantNetwork qn = load_quant(paths.quant(q));

    std::vector<FxResult> results = fx_infer_batch(qn, set, q);
    std::uint64_t excited = 0, correct = 0, saturations = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        excited += results[i].state;
        correct += results[i].state == (set.records[i].qubit_state(q) ? 1 : 0);
        saturations += results[i].saturations;
    }

    if (opt.format == "csv") {
        std::string csv = "record,label,state,logit,saturations\n";
        char buf[96];
        for (std::size_t i = 0; i < results.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%u,%u,%.17g,%llu\n", i,
                          unsigned(set.records[i].qubit_state(q)), unsigned(results[i].state),
                          from_fx(results[i].logit),
                          static_cast<unsigned long long>(results[i].saturations));
            csv += buf;
        }
        write_text_file(paths.reports_dir / ("infer_q" + std::to_string(q) + ".csv"), csv);
    } else {
        nlohmann::json j;
        for (std::size_t i = 0; i < results.size(); ++i)
            j["records"].push_back({{"record", i},
                                    {"label", set.records[i].qubit_state(q) ? 1 : 0},
                                    {"state", results[i].state},
                                    {"logit", from_fx(results[i].logit)},
                                    {"saturations", results[i].saturations}});
        j["summary"] = {{"records", results.size()},
                        {"excited", excited},
                        {"accuracy_vs_labels", double(correct) / double(results.size())},
                        {"saturations", saturations}};
        write_text_file(paths.reports_dir / ("infer_q" + std::to_string(q) + ".json"),
                        j.dump(2) + "\n");
    }
    std::printf("infer qubit %u: %zu records, %llu excited, accuracy %.4f, %llu saturations\n", q,
                results.size(), static_cast<unsigned long long>(excited),
                double(correct) / double(results.size()),
                static_cast<unsigned long long>(saturations));
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, const Options& opt) {
    EvaluateReport report = step_evaluate(cfg);
    if (opt.format == "json") {
        std::cout << report.to_json();
    } else {
        for (std::size_t q = 0; q < report.qubits.size(); ++q) {
            const auto& e = report.qubits[q];
            std::printf(
                "qubit %zu: teacher %.4f  student %.4f  fx %.4f  agreement %.4f  max|dlogit| %.2e\n",
                q, e.teacher_fidelity, e.student_fidelity, e.fx_fidelity, e.agreement,
                e.max_logit_dev);
        }
        std::printf("F_gm all %.4f  excl low-SNR %.4f  fx %.4f\n", report.f_gm_all,
                    report.f_gm_excl_low_snr, report.f_gm_fx);
    }
    if (!opt.expectations_path.empty()) {
        std::ifstream in(opt.expectations_path);
        if (!in) throw ConfigError("cannot open expectations file: " + opt.expectations_path);
        std::ostringstream ss;
        ss << in.rdbuf();
        auto violations = check_expectations(report, ss.str());
        if (!violations.empty()) {
            for (const auto& v : violations) std::fprintf(stderr, "expectation violated: %s\n", v.c_str());
            return 3;
        }
    }
    return 0;
}

int cmd_latency(const RunConfig& cfg, const Options& opt) {
    double clock = opt.clock_mhz > 0 ? opt.clock_mhz : cfg.clock_mhz;
    auto reports = step_latency(cfg, clock);
    for (std::uint16_t q = 0; q < reports.size(); ++q) {
        std::printf("qubit %u:\n", q);
        std::cout << (opt.format == "json" ? reports[q].to_json() : reports[q].to_text());
    }
    return 0;
}

int run(const Options& opt, const std::string& subcommand) {
    RunConfig cfg = load_config(opt);
    if (opt.validate_only) {
        std::printf("config OK: %s\n", opt.config_path.c_str());
        return 0;
    }

    ArtifactLock lock(cfg.artifacts_dir);
    if (subcommand == "generate") {
        step_generate(cfg);
    } else if (subcommand == "train-mf") {
        step_train_mf(cfg);
    } else if (subcommand == "train-teacher") {
        step_train_teacher(cfg);
    } else if (subcommand == "distill") {
        step_distill(cfg);
    } else if (subcommand == "quantize") {
        step_quantize(cfg);
    } else if (subcommand == "infer") {
        return cmd_infer(cfg, opt);
    } else if (subcommand == "evaluate") {
        return cmd_evaluate(cfg, opt);
    } else if (subcommand == "sweep") {
        SweepReport rep = step_sweep(cfg);
        std::cout << (opt.format == "csv" ? rep.to_csv() : rep.to_json());
    } else if (subcommand == "latency") {
        return cmd_latency(cfg, opt);
    } else if (subcommand == "repro") {
        std::cout << run_repro(cfg);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qubit-readout discriminators: distillation training and fixed-point inference"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--config", opt.config_path, "run configuration file (JSON)")->required();
    app.add_option("--qubit", opt.qubit, "qubit index (infer)");
    app.add_option("--duration-ns", opt.duration_ns, "slice traces to this duration (infer)");
    app.add_option("--clock-mhz", opt.clock_mhz, "clock for the latency model");
    app.add_option("--seed", opt.seed, "override every pipeline seed");
    app.add_flag("--validate-only", opt.validate_only, "validate the config and exit");
    app.add_option("--format", opt.format, "output format: json|csv|text")
        ->check(CLI::IsMember({"json", "csv", "text"}));
    app.add_option("--expectations", opt.expectations_path,
                   "threshold file checked against the evaluation report");

    for (const char* name : {"generate", "train-mf", "train-teacher", "distill", "quantize",
                             "infer", "evaluate", "sweep", "latency", "repro"})
        app.add_subcommand(name);

    CLI11_PARSE(app, argc, argv);

    try {
        return run(opt, app.get_subcommands().front()->get_name());
    } catch (const qread::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const qread::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const qread::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 2;
    }
}
