#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "driftbench/matrix.hpp"
#include "driftbench/probe.hpp"
#include "driftbench/report.hpp"
#include "driftbench/trainer.hpp"

namespace fs = std::filesystem;
using namespace driftbench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct StreamFlags {
    std::string dataset = "synth";
    std::string split = "synth_pairs";
    std::string task = "auto";
    int phases = 5;
    double val_fraction = 0.2;
    int window_len = 96;
    int examples_per_phase = 640;
    int feature_dim = 16;
    double separation = 6.0;
    double drift_step = 0.5;
};

struct TrainFlags {
    int epochs = 3;
    int batch = 128;
    double lr = 1e-3;
    std::uint64_t seed = 42;
    std::string method = "seqft";
    std::string hidden = "64";
    std::string activation = "tanh";
    bool reset_optimizer = false;
    std::uint64_t capacity = 0;
    double lambda = 0.5;
    std::string policy = "reservoir";
    std::uint64_t quota = 0;
    bool double_batch = false;
};

void add_stream_options(CLI::App* cmd, StreamFlags& f) {
    cmd->add_option("--dataset", f.dataset, "Dataset: rotmnist|electricity|airlines|synth")
        ->capture_default_str();
    cmd->add_option("--split", f.split,
                    "Split: digits_pairs|time|meters|airline_group|synth_pairs|synth_drift")
        ->capture_default_str();
    cmd->add_option("--task", f.task,
                    "Task override: auto|classification|reconstruction|forecasting")
        ->capture_default_str();
    cmd->add_option("--phases", f.phases, "Number of stream phases")->capture_default_str();
    cmd->add_option("--val-fraction", f.val_fraction, "Held-out validation fraction per phase")
        ->capture_default_str();
    cmd->add_option("--window-len", f.window_len, "Forecasting window length")
        ->capture_default_str();
    cmd->add_option("--examples-per-phase", f.examples_per_phase,
                    "Synthetic stream: examples per phase")
        ->capture_default_str();
    cmd->add_option("--feature-dim", f.feature_dim, "Synthetic stream: feature dimension")
        ->capture_default_str();
    cmd->add_option("--separation", f.separation,
                    "Synthetic stream: class separation in noise sigmas")
        ->capture_default_str();
    cmd->add_option("--drift-step", f.drift_step, "Synthetic drift: per-phase mean translation")
        ->capture_default_str();
}

void add_train_options(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--epochs", f.epochs, "Epochs per phase")->capture_default_str();
    cmd->add_option("--batch", f.batch, "Mini-batch size")->capture_default_str();
    cmd->add_option("--lr", f.lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--seed", f.seed, "Run seed")->capture_default_str();
    cmd->add_option("--method", f.method, "Training method: seqft|replay")->capture_default_str();
    cmd->add_option("--hidden", f.hidden, "Hidden layer widths, comma separated")
        ->capture_default_str();
    cmd->add_option("--activation", f.activation, "Hidden activation: tanh|relu|identity")
        ->capture_default_str();
    cmd->add_flag("--reset-optimizer", f.reset_optimizer,
                  "Reset Adam moments at each phase start");
    cmd->add_option("--buffer-capacity", f.capacity, "Replay buffer capacity");
    cmd->add_option("--lambda", f.lambda, "Replay ratio in [0,1]")->capture_default_str();
    cmd->add_option("--policy", f.policy, "Buffer policy: reservoir|fifo")->capture_default_str();
    cmd->add_option("--quota", f.quota, "Examples inserted per phase (0 = capacity / phases)")
        ->capture_default_str();
    cmd->add_flag("--double-batch", f.double_batch,
                  "Draw batch-size examples from each source instead of splitting");
}

std::vector<int> parse_hidden(const std::string& text) {
    std::vector<int> out;
    if (text.empty() || text == "none") return out;
    std::istringstream is(text);
    std::string part;
    while (std::getline(is, part, ',')) {
        try {
            std::size_t pos = 0;
            const int w = std::stoi(part, &pos);
            if (pos != part.size() || w < 1) throw std::invalid_argument(part);
            out.push_back(w);
        } catch (const std::exception&) {
            throw ConfigError("bad --hidden value: '" + part + "'");
        }
    }
    return out;
}

StreamSpec make_spec(const StreamFlags& f, std::uint64_t seed) {
    StreamSpec spec;
    spec.dataset = dataset_from_string(f.dataset);
    spec.split = split_from_string(f.split);
    spec.task = task_choice_from_string(f.task);
    spec.num_phases = f.phases;
    spec.val_fraction = f.val_fraction;
    spec.window_len = f.window_len;
    spec.seed = seed;
    spec.examples_per_phase = f.examples_per_phase;
    spec.feature_dim = f.feature_dim;
    spec.separation = f.separation;
    spec.drift_step = f.drift_step;
    validate(spec);
    return spec;
}

TrainConfig make_cfg(const TrainFlags& f, bool capacity_given) {
    TrainConfig cfg;
    cfg.epochs_per_phase = f.epochs;
    cfg.batch_size = f.batch;
    cfg.lr = f.lr;
    cfg.seed = f.seed;
    cfg.method = method_from_string(f.method);
    cfg.hidden = parse_hidden(f.hidden);
    cfg.hidden_activation = activation_from_string(f.activation);
    cfg.reset_optimizer_each_phase = f.reset_optimizer;
    if (cfg.method == Method::replay) {
        if (!capacity_given) {
            throw ConfigError("replay requires --buffer-capacity");
        }
        cfg.replay.capacity = f.capacity;
        cfg.replay.lambda = f.lambda;
        cfg.replay.policy = buffer_policy_from_string(f.policy);
        cfg.replay.quota = f.quota;
        cfg.replay.double_batch = f.double_batch;
    }
    validate(cfg);
    return cfg;
}

void write_phase_checkpoints(const fs::path& dir, const RunResult& result, Method method) {
    fs::create_directories(dir);
    for (std::size_t k = 0; k < result.state.phase_checkpoints.size(); ++k) {
        const ReplayBuffer* buffer = nullptr;
        if (method == Method::replay && k < result.state.buffer_snapshots.size()) {
            buffer = &result.state.buffer_snapshots[k];
        }
        const Checkpoint ckpt =
            make_checkpoint(static_cast<int>(k) + 1, result.state.phase_checkpoints[k],
                            result.state.optimizer_snapshots[k], buffer);
        char name[32];
        std::snprintf(name, sizeof(name), "phase_%02zu.ckpt", k + 1);
        write_checkpoint(dir / name, ckpt);
    }
}

int cmd_run(const StreamFlags& sf, const TrainFlags& tf, bool capacity_given,
            const std::string& out, const std::string& checkpoint_dir,
            const std::string& data_root, bool with_probe) {
    const StreamSpec spec = make_spec(sf, tf.seed);
    const TrainConfig cfg = make_cfg(tf, capacity_given);
    const std::vector<PhaseDataset> phases = build_stream(spec, data_root);
    const std::string dataset = to_string(spec.dataset);
    const std::string split = to_string(spec.split);

    RunResult result = run_stream(phases, cfg, dataset, split);

    LogWriter writer(out);
    std::vector<LogRecord> block;
    RunMeta meta;
    meta.dataset = dataset;
    meta.split = split;
    meta.method = cfg.method;
    meta.seed = static_cast<long>(cfg.seed);
    meta.config = config_echo(spec, cfg);
    meta.config.emplace_back("status", "ok");
    meta.config.emplace_back("steps_total", std::to_string(result.steps_total));
    block.push_back(LogRecord::meta(std::move(meta)));
    for (const PhaseRecord& r : result.records) block.push_back(LogRecord::phase(r));
    if (with_probe) {
        std::span<const ReplayBuffer> buffers;
        if (cfg.method == Method::replay) buffers = result.state.buffer_snapshots;
        for (const ProbeReport& rep : probe_run(result.state.phase_checkpoints, phases, buffers)) {
            block.push_back(LogRecord::probe(
                make_probe_summary(rep, dataset, split, cfg.method, static_cast<long>(cfg.seed))));
        }
    }
    writer.append_batch(block);

    if (!checkpoint_dir.empty()) {
        write_phase_checkpoints(checkpoint_dir, result, cfg.method);
    }
    const std::string scenario = scenario_name(spec);
    for (const PhaseRecord& r : result.records) {
        std::printf("%s %s seed=%ld phase=%d init=%.6g final=%.6g F=%.6g\n", scenario.c_str(),
                    to_string(r.method), r.seed, r.phase, r.init, r.final, r.forgetting);
    }
    std::printf("appended %zu records to %s\n", block.size(), out.c_str());
    return kExitOk;
}

int cmd_matrix(const StreamFlags& sf, const TrainFlags& tf, bool capacity_given,
               const std::string& scenarios_csv, const std::string& seeds_csv,
               const std::string& methods_csv, int workers, bool with_probe,
               const std::string& out, const std::string& data_root) {
    MatrixOptions options;
    options.workers = workers;
    options.probe = with_probe;
    options.data_root = data_root;

    std::istringstream sc(scenarios_csv);
    std::string name;
    while (std::getline(sc, name, ',')) {
        if (name.empty()) continue;
        StreamSpec spec = spec_from_scenario(name);
        spec.num_phases = sf.phases;
        spec.val_fraction = sf.val_fraction;
        spec.window_len = sf.window_len;
        spec.examples_per_phase = sf.examples_per_phase;
        spec.feature_dim = sf.feature_dim;
        spec.separation = sf.separation;
        spec.drift_step = sf.drift_step;
        validate(spec);
        for (const fs::path& file : required_data_files(spec, data_root)) {
            if (!fs::exists(file)) {
                throw ConfigError("scenario " + name + ": missing data file: " + file.string());
            }
        }
        options.scenarios.push_back(std::move(spec));
    }
    if (options.scenarios.empty()) throw ConfigError("matrix: no scenarios given");

    options.seeds.clear();
    std::istringstream se(seeds_csv);
    while (std::getline(se, name, ',')) {
        if (name.empty()) continue;
        try {
            options.seeds.push_back(static_cast<std::uint64_t>(std::stoull(name)));
        } catch (const std::exception&) {
            throw ConfigError("bad seed: '" + name + "'");
        }
    }
    options.methods.clear();
    std::istringstream me(methods_csv);
    while (std::getline(me, name, ',')) {
        if (name.empty()) continue;
        options.methods.push_back(method_from_string(name));
    }

    // the matrix always includes the replay half, so capacity defaults to the
    // documented order-10^3 value when not set explicitly
    TrainFlags base = tf;
    if (!capacity_given) base.capacity = 1000;
    base.method = "replay";
    options.base = make_cfg(base, true);
    options.base.method = method_from_string(tf.method);

    LogWriter writer(out);
    const MatrixSummary summary = run_matrix(options, writer);
    std::printf("matrix: %ld runs ok, %ld failed, %ld records -> %s\n", summary.runs_ok,
                summary.runs_failed, summary.records_written, out.c_str());
    return kExitOk; // individual failures are recorded in the log, not fatal
}

int cmd_probe(const StreamFlags& sf, const TrainFlags& tf, bool capacity_given,
              const std::string& out, const std::string& from_checkpoints,
              const std::string& data_root) {
    const StreamSpec spec = make_spec(sf, tf.seed);
    const TrainConfig cfg = make_cfg(tf, capacity_given);
    const std::vector<PhaseDataset> phases = build_stream(spec, data_root);
    const std::string dataset = to_string(spec.dataset);
    const std::string split = to_string(spec.split);

    std::vector<ModelState> checkpoints;
    std::vector<ReplayBuffer> buffers;
    if (!from_checkpoints.empty()) {
        for (std::size_t k = 1; k <= phases.size(); ++k) {
            char name[32];
            std::snprintf(name, sizeof(name), "phase_%02zu.ckpt", k);
            const Checkpoint ckpt = read_checkpoint(fs::path(from_checkpoints) / name);
            checkpoints.push_back(ckpt.model);
            if (ckpt.has_buffer) buffers.push_back(ckpt.restore_buffer());
        }
        if (!buffers.empty() && buffers.size() != checkpoints.size()) {
            throw ConfigError("probe: checkpoint buffers are incomplete");
        }
    } else {
        // deterministic re-run of the training protocol
        RunResult result = run_stream(phases, cfg, dataset, split);
        checkpoints = std::move(result.state.phase_checkpoints);
        buffers = std::move(result.state.buffer_snapshots);
    }

    std::span<const ReplayBuffer> buffer_span;
    if (!buffers.empty()) buffer_span = buffers;
    const std::vector<ProbeReport> reports = probe_run(checkpoints, phases, buffer_span);

    LogWriter writer(out);
    std::vector<LogRecord> block;
    block.reserve(reports.size());
    int conflicted = 0;
    for (const ProbeReport& rep : reports) {
        if (rep.cosine_kt < 0.0) ++conflicted;
        block.push_back(LogRecord::probe(
            make_probe_summary(rep, dataset, split, cfg.method, static_cast<long>(cfg.seed))));
    }
    writer.append_batch(block);
    std::printf("%s %s seed=%llu: %zu probe reports (%d conflicted pairs) -> %s\n",
                scenario_name(spec).c_str(), to_string(cfg.method),
                static_cast<unsigned long long>(cfg.seed), reports.size(), conflicted,
                out.c_str());
    return kExitOk;
}

int cmd_report(const std::string& log_path, const std::string& outdir,
               const std::string& format) {
    if (format != "text" && format != "tsv") {
        throw ConfigError("--format must be text or tsv");
    }
    const std::vector<LogRecord> records = read_log(log_path);
    const auto scenarios = log_scenarios(records);
    if (scenarios.empty()) throw ConfigError("report: log has no phase records");

    const bool to_files = !outdir.empty();
    if (to_files) fs::create_directories(outdir);
    auto emit = [&](const std::string& name, const std::string& content) {
        if (to_files) {
            const fs::path path = fs::path(outdir) / name;
            std::ofstream file(path);
            if (!file) throw ConfigError("cannot write " + path.string());
            file << content;
            std::printf("wrote %s\n", path.string().c_str());
        } else {
            std::printf("%s\n", content.c_str());
        }
    };

    const std::string ext = format == "tsv" ? ".tsv" : ".txt";
    for (const auto& [dataset, split, metric] : scenarios) {
        const PhaseTable table = table_per_phase(records, dataset, split);
        emit("table_phase_" + dataset + "." + split + ext,
             format == "tsv" ? render_tsv(table) : render_text(table));
        const FigureKind fig = metric == Metric::accuracy ? FigureKind::per_phase_accuracy
                                                          : FigureKind::per_phase_mse;
        emit("plot_" + std::string(to_string(fig)) + "_" + dataset + "." + split + ".tsv",
             emit_plot_data(records, fig, dataset, split));
    }
    const auto avg = table_avg_forgetting(records);
    emit("table_avg_forgetting" + ext, format == "tsv" ? render_tsv(avg) : render_text(avg));
    emit("plot_forgetting_summary.tsv",
         emit_plot_data(records, FigureKind::forgetting_summary));
    return kExitOk;
}

int cmd_gen_synth(const StreamFlags& sf, std::uint64_t seed, const std::string& outdir) {
    StreamFlags flags = sf;
    flags.dataset = "synth";
    const StreamSpec spec = make_spec(flags, seed);
    const std::vector<PhaseDataset> phases = synth_stream(spec);
    fs::create_directories(outdir);
    save_stream_spec(fs::path(outdir) / "stream.conf", spec);

    auto write_split = [&](const fs::path& path, std::span<const Example> examples) {
        std::ofstream file(path);
        if (!file) throw ConfigError("cannot write " + path.string());
        for (int d = 0; d < spec.feature_dim; ++d) file << "x" << d << ",";
        file << "label,phase\n";
        char buf[64];
        for (const Example& e : examples) {
            for (double v : e.x) {
                std::snprintf(buf, sizeof(buf), "%.17g", v);
                file << buf << ",";
            }
            file << e.label << "," << e.phase_origin << "\n";
        }
    };
    for (const PhaseDataset& p : phases) {
        char name[48];
        std::snprintf(name, sizeof(name), "phase_%02d_train.csv", p.phase_id);
        write_split(fs::path(outdir) / name, p.train);
        std::snprintf(name, sizeof(name), "phase_%02d_val.csv", p.phase_id);
        write_split(fs::path(outdir) / name, p.val);
    }
    std::printf("gen-synth: wrote %zu phases to %s\n", phases.size(), outdir.c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"streaming continual-learning benchmark harness"};
    app.require_subcommand(1);

    std::string data_root;
    app.add_option("--data-root", data_root, "Root directory for real datasets")
        ->envname("DRIFTBENCH_DATA_ROOT");
    app.set_config("--config", "",
                   "Config file; key=value per line, [run]/[matrix]/[probe] sections");

    StreamFlags run_sf;
    TrainFlags run_tf;
    std::string run_out = "runs.log";
    std::string run_ckpt_dir;
    bool run_probe = false;
    CLI::App* run = app.add_subcommand("run", "Execute one training run and append its records");
    add_stream_options(run, run_sf);
    add_train_options(run, run_tf);
    run->add_option("--out", run_out, "Log file to append to")->capture_default_str();
    run->add_option("--checkpoint-dir", run_ckpt_dir, "Write per-phase checkpoints here");
    run->add_flag("--probe", run_probe, "Also append gradient-alignment probe records");
    run->fallthrough();

    StreamFlags mx_sf;
    TrainFlags mx_tf;
    std::string mx_scenarios = "synth.synth_pairs,synth.synth_drift";
    std::string mx_seeds = "13,21,42";
    std::string mx_methods = "seqft,replay";
    std::string mx_out = "runs.log";
    int mx_workers = 1;
    bool mx_probe = false;
    CLI::App* matrix =
        app.add_subcommand("matrix", "Run the (scenario x method x seed) experiment grid");
    add_stream_options(matrix, mx_sf);
    add_train_options(matrix, mx_tf);
    matrix->add_option("--scenarios", mx_scenarios, "Comma-separated dataset.split names")
        ->capture_default_str();
    matrix->add_option("--seeds", mx_seeds, "Comma-separated seeds")->capture_default_str();
    matrix->add_option("--methods", mx_methods, "Comma-separated methods")->capture_default_str();
    matrix->add_option("--workers", mx_workers, "Concurrent runs (1 = byte-stable log)")
        ->capture_default_str();
    matrix->add_flag("--probe", mx_probe, "Also append probe records per run");
    matrix->add_option("--out", mx_out, "Log file to append to")->capture_default_str();
    matrix->fallthrough();

    StreamFlags pr_sf;
    TrainFlags pr_tf;
    std::string pr_out = "probes.log";
    std::string pr_from;
    CLI::App* probe = app.add_subcommand(
        "probe", "Compute gradient-alignment reports for a (re-)run or stored checkpoints");
    add_stream_options(probe, pr_sf);
    add_train_options(probe, pr_tf);
    probe->add_option("--out", pr_out, "Log file to append to")->capture_default_str();
    probe->add_option("--from-checkpoints", pr_from,
                      "Directory of phase_NN.ckpt files from `run --checkpoint-dir`");
    probe->fallthrough();

    std::string rp_log = "runs.log";
    std::string rp_outdir;
    std::string rp_format = "text";
    CLI::App* report = app.add_subcommand("report", "Aggregate a log into tables and plot data");
    report->add_option("--log", rp_log, "Structured log to aggregate")->capture_default_str();
    report->add_option("--outdir", rp_outdir, "Write outputs here (default: stdout)");
    report->add_option("--format", rp_format, "Table format: text|tsv")->capture_default_str();

    StreamFlags gs_sf;
    std::uint64_t gs_seed = 42;
    std::string gs_outdir = "synth_data";
    CLI::App* gen = app.add_subcommand("gen-synth", "Materialize a synthetic stream to CSV files");
    add_stream_options(gen, gs_sf);
    gen->add_option("--seed", gs_seed, "Generator seed")->capture_default_str();
    gen->add_option("--outdir", gs_outdir, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (app.got_subcommand(run)) {
            return cmd_run(run_sf, run_tf, run->count("--buffer-capacity") > 0, run_out,
                           run_ckpt_dir, data_root, run_probe);
        }
        if (app.got_subcommand(matrix)) {
            return cmd_matrix(mx_sf, mx_tf, matrix->count("--buffer-capacity") > 0, mx_scenarios,
                              mx_seeds, mx_methods, mx_workers, mx_probe, mx_out, data_root);
        }
        if (app.got_subcommand(probe)) {
            return cmd_probe(pr_sf, pr_tf, probe->count("--buffer-capacity") > 0, pr_out, pr_from,
                             data_root);
        }
        if (app.got_subcommand(report)) {
            return cmd_report(rp_log, rp_outdir, rp_format);
        }
        if (app.got_subcommand(gen)) {
            return cmd_gen_synth(gs_sf, gs_seed, gs_outdir);
        }
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kExitNumeric;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const DataFormatError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    }
    return kExitConfig;
}
