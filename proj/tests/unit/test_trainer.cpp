#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

#include "driftbench/errors.hpp"
#include "driftbench/matrix.hpp"
#include "driftbench/trainer.hpp"

using namespace driftbench;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() /
                   ("driftbench_trainer_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

StreamSpec tiny_spec(std::uint64_t seed = 42, SplitId split = SplitId::synth_pairs) {
    StreamSpec spec;
    spec.split = split;
    spec.examples_per_phase = 40;
    spec.feature_dim = 8;
    spec.seed = seed;
    return spec;
}

TrainConfig tiny_cfg(Method method, std::uint64_t seed = 42) {
    TrainConfig cfg;
    cfg.epochs_per_phase = 1;
    cfg.batch_size = 16;
    cfg.lr = 1e-2;
    cfg.hidden = {8};
    cfg.seed = seed;
    cfg.method = method;
    if (method == Method::replay) cfg.replay.capacity = 50;
    return cfg;
}

// quadratic surrogate: linear model on an exactly linear target, so the
// shared optimum is loss zero for every subsample
PhaseDataset linear_phase(int id, Rng& rng, int n = 60) {
    PhaseDataset p;
    p.phase_id = id;
    p.task = TaskKind::reconstruction(2);
    for (int i = 0; i < n; ++i) {
        Example e;
        e.x = {rng.normal(), rng.normal(), rng.normal()};
        e.target = {0.7 * e.x[0] - 0.3 * e.x[1], 0.2 * e.x[2]};
        e.phase_origin = id;
        if (i % 5 == 4) p.val.push_back(std::move(e));
        else p.train.push_back(std::move(e));
    }
    return p;
}

} // namespace

TEST_CASE("train_phase: zero epochs leave the parameters untouched") {
    const auto phases = synth_stream(tiny_spec());
    TrainConfig cfg = tiny_cfg(Method::seqft);
    cfg.epochs_per_phase = 0;
    RunState state = init_run(phases[0], cfg);
    const std::vector<double> before = state.model.params;
    train_phase(state, phases[0], cfg, 0);
    CHECK(state.model.params == before);
    CHECK(state.steps_taken == 0);
    REQUIRE(state.phase_checkpoints.size() == 1);
    CHECK(state.phase_checkpoints[0].params == before);
}

TEST_CASE("train_phase: empirical risk decreases on a convex surrogate") {
    Rng data_rng(7);
    const PhaseDataset phase = linear_phase(1, data_rng, 100);
    TrainConfig cfg;
    cfg.epochs_per_phase = 1;
    cfg.batch_size = 20;
    cfg.lr = 1e-2;
    cfg.hidden = {}; // pure linear model: quadratic risk
    cfg.seed = 3;
    RunState state = init_run(phase, cfg);
    double risk = empirical_risk(state.model, phase.train, phase.task);
    for (int epoch = 0; epoch < 5; ++epoch) {
        train_phase(state, phase, cfg, 0);
        const double next = empirical_risk(state.model, phase.train, phase.task);
        CHECK(next < risk);
        risk = next;
    }
}

TEST_CASE("run_stream: seqft and replay are bit-identical on phase 1") {
    const auto phases = synth_stream(tiny_spec(13));
    const RunResult seq = run_stream(phases, tiny_cfg(Method::seqft, 13), "synth", "synth_pairs");
    const RunResult rep = run_stream(phases, tiny_cfg(Method::replay, 13), "synth", "synth_pairs");
    REQUIRE(!seq.state.phase_checkpoints.empty());
    REQUIRE(!rep.state.phase_checkpoints.empty());
    CHECK(seq.state.phase_checkpoints[0].params == rep.state.phase_checkpoints[0].params);
    // matched budgets: identical step counts for the whole stream
    CHECK(seq.steps_total == rep.steps_total);
}

TEST_CASE("run_stream: zero budget means zero forgetting on phase 1") {
    const auto phases = synth_stream(tiny_spec());
    TrainConfig cfg = tiny_cfg(Method::seqft);
    cfg.epochs_per_phase = 0;
    const RunResult res = run_stream(phases, cfg, "synth", "synth_pairs");
    CHECK(res.records[0].init == res.records[0].final);
    CHECK(res.records[0].forgetting == 0.0);
}

TEST_CASE("run_stream: the last phase always has exactly zero forgetting") {
    for (Method m : {Method::seqft, Method::replay}) {
        const auto phases = synth_stream(tiny_spec(21));
        const RunResult res = run_stream(phases, tiny_cfg(m, 21), "synth", "synth_pairs");
        const PhaseRecord& last = res.records.back();
        CHECK(last.phase == 5);
        CHECK(last.init == last.final);
        CHECK(last.forgetting == 0.0);
    }
}

TEST_CASE("run_stream: training twice on the same distribution does not forget") {
    Rng data_rng(11);
    PhaseDataset p1 = linear_phase(1, data_rng, 100);
    PhaseDataset p2 = p1;
    p2.phase_id = 2;
    for (Example& e : p2.train) e.phase_origin = 2;
    for (Example& e : p2.val) e.phase_origin = 2;
    TrainConfig cfg;
    cfg.epochs_per_phase = 3;
    cfg.batch_size = 20;
    cfg.lr = 1e-2;
    cfg.hidden = {};
    cfg.seed = 5;
    const std::vector<PhaseDataset> phases{p1, p2};
    const RunResult res = run_stream(phases, cfg, "lin", "self");
    // continued training on the same data keeps improving, so F_1 <= ~0
    CHECK(res.records[0].forgetting <= 1e-3);
}

TEST_CASE("run_stream: records are reproducible for a fixed seed") {
    const auto phases = synth_stream(tiny_spec(99));
    const RunResult a = run_stream(phases, tiny_cfg(Method::replay, 99), "synth", "synth_pairs");
    const RunResult b = run_stream(phases, tiny_cfg(Method::replay, 99), "synth", "synth_pairs");
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].init == b.records[i].init);
        CHECK(a.records[i].final == b.records[i].final);
        CHECK(a.records[i].forgetting == b.records[i].forgetting);
    }
}

TEST_CASE("run_stream: checkpoint evaluations match the logged init values bit-exactly") {
    const auto phases = synth_stream(tiny_spec(7));
    const TrainConfig cfg = tiny_cfg(Method::seqft, 7);
    const RunResult res = run_stream(phases, cfg, "synth", "synth_pairs");
    const TaskKind& task = phases[0].task;
    REQUIRE(res.state.phase_checkpoints.size() == phases.size());
    for (std::size_t k = 0; k < phases.size(); ++k) {
        const double again =
            evaluate(res.state.phase_checkpoints[k], phases[k].val, task, Metric::accuracy);
        CHECK(again == res.records[k].init);
    }
}

TEST_CASE("checkpoint: file round trip preserves everything") {
    const auto phases = synth_stream(tiny_spec(31));
    TrainConfig cfg = tiny_cfg(Method::replay, 31);
    RunResult res = run_stream(phases, cfg, "synth", "synth_pairs");

    const fs::path path = temp_dir() / "run.ckpt";
    const Checkpoint out = make_checkpoint(5, res.state.model, res.state.optimizer,
                                           &*res.state.buffer);
    write_checkpoint(path, out);
    const Checkpoint in = read_checkpoint(path);

    CHECK(in.phase_index == 5);
    CHECK(in.model.topology == out.model.topology);
    CHECK(in.model.params == out.model.params);
    CHECK(in.optimizer.step_count == out.optimizer.step_count);
    CHECK(in.optimizer.first_moment == out.optimizer.first_moment);
    CHECK(in.optimizer.second_moment == out.optimizer.second_moment);
    REQUIRE(in.has_buffer);
    CHECK(in.buffer_seen == out.buffer_seen);
    REQUIRE(in.buffer_entries.size() == out.buffer_entries.size());
    for (std::size_t i = 0; i < in.buffer_entries.size(); ++i) {
        CHECK(in.buffer_entries[i].example.x == out.buffer_entries[i].example.x);
        CHECK(in.buffer_entries[i].insertion_phase == out.buffer_entries[i].insertion_phase);
    }

    // restored buffer resumes the exact same stream as the live one
    ReplayBuffer live = *res.state.buffer;
    ReplayBuffer restored = in.restore_buffer();
    Example probe;
    probe.x = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
    probe.label = 0;
    probe.phase_origin = 9;
    for (int i = 0; i < 100; ++i) {
        live.offer(probe);
        restored.offer(probe);
    }
    REQUIRE(live.size() == restored.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
        CHECK(live.entries()[i].insertion_phase == restored.entries()[i].insertion_phase);
    }
}

TEST_CASE("checkpoint: bad magic and unknown versions are rejected") {
    const fs::path dir = temp_dir();
    {
        std::ofstream out(dir / "bad_magic", std::ios::binary);
        out << "NOTACKPT" << std::string(16, '\0');
    }
    CHECK_THROWS_WITH_AS((void)read_checkpoint(dir / "bad_magic"), doctest::Contains("magic"),
                         DataFormatError);
    {
        std::ofstream out(dir / "bad_version", std::ios::binary);
        out << "DRIFTBCH";
        const std::uint32_t version = 999;
        out.write(reinterpret_cast<const char*>(&version), 4);
        out << std::string(16, '\0');
    }
    CHECK_THROWS_WITH_AS((void)read_checkpoint(dir / "bad_version"),
                         doctest::Contains("version"), DataFormatError);
}

TEST_CASE("run_matrix: one scenario, two methods, three seeds, five phases") {
    const fs::path log_path = temp_dir() / "runs.log";
    MatrixOptions opts;
    opts.scenarios = {tiny_spec()};
    opts.base = tiny_cfg(Method::seqft);
    opts.base.replay.capacity = 50; // used by the replay half of the matrix
    {
        LogWriter writer(log_path);
        const MatrixSummary summary = run_matrix(opts, writer);
        CHECK(summary.runs_ok == 6);
        CHECK(summary.runs_failed == 0);
    }
    const auto records = read_log(log_path);
    long phases = 0, metas = 0;
    for (const LogRecord& r : records) {
        if (std::holds_alternative<PhaseRecord>(r.payload)) ++phases;
        if (std::holds_alternative<RunMeta>(r.payload)) ++metas;
    }
    CHECK(phases == 30); // 2 methods x 3 seeds x 5 phases
    CHECK(metas == 6);
}

TEST_CASE("run_matrix: identical invocations produce byte-identical logs") {
    const fs::path dir = temp_dir();
    MatrixOptions opts;
    opts.scenarios = {tiny_spec()};
    opts.base = tiny_cfg(Method::seqft);
    opts.base.replay.capacity = 50;
    opts.seeds = {13, 21};
    {
        LogWriter w1(dir / "a.log");
        run_matrix(opts, w1);
        LogWriter w2(dir / "b.log");
        run_matrix(opts, w2);
    }
    std::ifstream a(dir / "a.log", std::ios::binary);
    std::ifstream b(dir / "b.log", std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    const std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    CHECK(!sa.empty());
}

TEST_CASE("run_matrix: execution order does not change the record set") {
    const fs::path dir = temp_dir();
    MatrixOptions opts;
    opts.scenarios = {tiny_spec(), tiny_spec(1, SplitId::synth_drift)};
    opts.base = tiny_cfg(Method::seqft);
    opts.base.replay.capacity = 50;
    opts.seeds = {13, 21};
    {
        LogWriter w1(dir / "serial.log");
        run_matrix(opts, w1);
    }
    opts.workers = 2;
    {
        LogWriter w2(dir / "parallel.log");
        run_matrix(opts, w2);
    }
    auto lines = [](const fs::path& p) {
        std::multiset<std::string> out;
        std::ifstream in(p);
        std::string line;
        while (std::getline(in, line)) out.insert(line);
        return out;
    };
    CHECK(lines(dir / "serial.log") == lines(dir / "parallel.log"));
}

TEST_CASE("run_matrix: failing runs are recorded and skipped") {
    const fs::path log_path = temp_dir() / "runs.log";
    StreamSpec broken;
    broken.dataset = DatasetId::rotmnist;
    broken.split = SplitId::digits_pairs;
    MatrixOptions opts;
    opts.scenarios = {broken, tiny_spec()};
    opts.base = tiny_cfg(Method::seqft);
    opts.base.replay.capacity = 50;
    opts.seeds = {42};
    opts.data_root = temp_dir(); // empty: rotmnist files missing
    {
        LogWriter writer(log_path);
        const MatrixSummary summary = run_matrix(opts, writer);
        CHECK(summary.runs_ok == 2);     // synth seqft + synth replay
        CHECK(summary.runs_failed == 2); // rotmnist seqft + replay
    }
    const auto records = read_log(log_path);
    int failed = 0;
    for (const LogRecord& r : records) {
        if (const RunMeta* m = std::get_if<RunMeta>(&r.payload)) {
            for (const auto& [k, v] : m->config) {
                if (k == "status" && v == "failed") ++failed;
            }
        }
    }
    CHECK(failed == 2);
}

TEST_CASE("train config: invalid settings are rejected") {
    TrainConfig cfg = tiny_cfg(Method::replay);
    cfg.replay.capacity = 0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = tiny_cfg(Method::seqft);
    cfg.lr = 0.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = tiny_cfg(Method::seqft);
    cfg.batch_size = 0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("effective_quota: defaults to capacity over phases") {
    ReplayOptions opts;
    opts.capacity = 1000;
    CHECK(effective_quota(opts, 5) == 200);
    opts.quota = 17;
    CHECK(effective_quota(opts, 5) == 17);
    opts.quota = 0;
    opts.capacity = 3;
    CHECK(effective_quota(opts, 5) == 1); // never zero
}
