#include "driftbench/matrix.hpp"

#include <atomic>
#include <cstdio>
#include <sstream>
#include <thread>

namespace driftbench {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::vector<std::pair<std::string, std::string>> config_echo(const StreamSpec& spec,
                                                             const TrainConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("stream.dataset", to_string(spec.dataset));
    kv.emplace_back("stream.split", to_string(spec.split));
    kv.emplace_back("stream.task", to_string(spec.task));
    kv.emplace_back("stream.num_phases", std::to_string(spec.num_phases));
    kv.emplace_back("stream.val_fraction", fmt_double(spec.val_fraction));
    kv.emplace_back("stream.window_len", std::to_string(spec.window_len));
    kv.emplace_back("stream.seed", std::to_string(spec.seed));
    kv.emplace_back("stream.examples_per_phase", std::to_string(spec.examples_per_phase));
    kv.emplace_back("stream.feature_dim", std::to_string(spec.feature_dim));
    kv.emplace_back("stream.separation", fmt_double(spec.separation));
    kv.emplace_back("stream.drift_step", fmt_double(spec.drift_step));

    kv.emplace_back("train.epochs_per_phase", std::to_string(cfg.epochs_per_phase));
    kv.emplace_back("train.batch_size", std::to_string(cfg.batch_size));
    kv.emplace_back("train.lr", fmt_double(cfg.lr));
    kv.emplace_back("train.seed", std::to_string(cfg.seed));
    kv.emplace_back("train.method", to_string(cfg.method));
    std::ostringstream hidden;
    for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
        if (i) hidden << ",";
        hidden << cfg.hidden[i];
    }
    kv.emplace_back("train.hidden", hidden.str());
    kv.emplace_back("train.hidden_activation", to_string(cfg.hidden_activation));
    kv.emplace_back("train.reset_optimizer_each_phase",
                    cfg.reset_optimizer_each_phase ? "true" : "false");
    if (cfg.method == Method::replay) {
        kv.emplace_back("replay.capacity", std::to_string(cfg.replay.capacity));
        kv.emplace_back("replay.lambda", fmt_double(cfg.replay.lambda));
        kv.emplace_back("replay.policy", to_string(cfg.replay.policy));
        kv.emplace_back("replay.quota", std::to_string(cfg.replay.quota));
        kv.emplace_back("replay.double_batch", cfg.replay.double_batch ? "true" : "false");
    }
    return kv;
}

namespace {

struct MatrixJob {
    StreamSpec spec;
    TrainConfig cfg;
};

// All records of one run, appended as one block.
std::vector<LogRecord> execute_job(const MatrixJob& job, const std::filesystem::path& data_root,
                                   bool probe, bool& ok) {
    const std::string dataset = to_string(job.spec.dataset);
    const std::string split = to_string(job.spec.split);
    std::vector<LogRecord> block;
    RunMeta meta;
    meta.dataset = dataset;
    meta.split = split;
    meta.method = job.cfg.method;
    meta.seed = static_cast<long>(job.cfg.seed);
    meta.config = config_echo(job.spec, job.cfg);
    try {
        const std::vector<PhaseDataset> phases = build_stream(job.spec, data_root);
        RunResult result = run_stream(phases, job.cfg, dataset, split);
        meta.config.emplace_back("status", "ok");
        meta.config.emplace_back("steps_total", std::to_string(result.steps_total));
        block.push_back(LogRecord::meta(std::move(meta)));
        for (PhaseRecord& rec : result.records) block.push_back(LogRecord::phase(std::move(rec)));
        if (probe) {
            std::span<const ReplayBuffer> buffers;
            if (job.cfg.method == Method::replay) buffers = result.state.buffer_snapshots;
            for (const ProbeReport& rep :
                 probe_run(result.state.phase_checkpoints, phases, buffers)) {
                block.push_back(LogRecord::probe(make_probe_summary(
                    rep, dataset, split, job.cfg.method, static_cast<long>(job.cfg.seed))));
            }
        }
        ok = true;
    } catch (const std::exception& e) {
        meta.config.emplace_back("status", "failed");
        meta.config.emplace_back("error", e.what());
        block.clear();
        block.push_back(LogRecord::meta(std::move(meta)));
        ok = false;
    }
    return block;
}

} // namespace

MatrixSummary run_matrix(const MatrixOptions& options, LogWriter& writer) {
    if (options.scenarios.empty()) throw ConfigError("matrix: no scenarios");
    if (options.seeds.empty()) throw ConfigError("matrix: no seeds");
    if (options.methods.empty()) throw ConfigError("matrix: no methods");
    if (options.workers < 1) throw ConfigError("matrix: workers must be >= 1");

    std::vector<MatrixJob> jobs;
    for (const StreamSpec& scenario : options.scenarios) {
        for (Method method : options.methods) {
            for (std::uint64_t seed : options.seeds) {
                MatrixJob job;
                job.spec = scenario;
                job.spec.seed = seed;
                job.cfg = options.base;
                job.cfg.method = method;
                job.cfg.seed = seed;
                validate(job.cfg);
                jobs.push_back(std::move(job));
            }
        }
    }

    MatrixSummary summary;
    if (options.workers == 1) {
        for (const MatrixJob& job : jobs) {
            bool ok = false;
            const std::vector<LogRecord> block =
                execute_job(job, options.data_root, options.probe, ok);
            writer.append_batch(block);
            summary.records_written += static_cast<long>(block.size());
            (ok ? summary.runs_ok : summary.runs_failed) += 1;
        }
        return summary;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<long> ok_count{0};
    std::atomic<long> fail_count{0};
    std::atomic<long> record_count{0};
    const int workers = std::min<int>(options.workers, static_cast<int>(jobs.size()));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs.size()) break;
                bool ok = false;
                const std::vector<LogRecord> block =
                    execute_job(jobs[i], options.data_root, options.probe, ok);
                writer.append_batch(block);
                record_count += static_cast<long>(block.size());
                (ok ? ok_count : fail_count) += 1;
            }
        });
    }
    for (std::thread& t : pool) t.join();
    summary.runs_ok = ok_count;
    summary.runs_failed = fail_count;
    summary.records_written = record_count;
    return summary;
}

} // namespace driftbench
