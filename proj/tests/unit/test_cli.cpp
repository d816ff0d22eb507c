#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "driftbench/report.hpp"

using namespace driftbench;
namespace fs = std::filesystem;

// Driven end-to-end against the installed binary; DRIFTBENCH_CLI_PATH is
// injected by the build.
namespace {

fs::path temp_dir() {
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() /
                   ("driftbench_cli_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args, const fs::path& cwd) {
    const std::string cmd = "cd " + cwd.string() + " && " + DRIFTBENCH_CLI_PATH + " " + args +
                            " >cli_stdout.txt 2>cli_stderr.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

const std::string kSmallRun =
    "--examples-per-phase 80 --feature-dim 8 --epochs 1 --batch 16 --hidden 8";

} // namespace

TEST_CASE("cli: run appends one meta record plus one record per phase") {
    const fs::path dir = temp_dir();
    const int code = run_cli("run --dataset synth --split synth_pairs --method replay --seed 42 "
                             "--buffer-capacity 100 --lambda 0.5 " +
                                 kSmallRun + " --out runs.log",
                             dir);
    CHECK(code == 0);
    const auto records = read_log(dir / "runs.log");
    long phases = 0, metas = 0;
    for (const LogRecord& r : records) {
        if (std::holds_alternative<PhaseRecord>(r.payload)) ++phases;
        if (std::holds_alternative<RunMeta>(r.payload)) ++metas;
    }
    CHECK(phases == 5);
    CHECK(metas == 1);
}

TEST_CASE("cli: replay without a buffer capacity exits with code 2") {
    const fs::path dir = temp_dir();
    const int code =
        run_cli("run --dataset synth --split synth_pairs --method replay " + kSmallRun, dir);
    CHECK(code == 2);
    CHECK(slurp(dir / "cli_stderr.txt").find("buffer-capacity") != std::string::npos);
}

TEST_CASE("cli: unknown flags exit with code 2") {
    const fs::path dir = temp_dir();
    CHECK(run_cli("run --no-such-flag", dir) == 2);
    CHECK(run_cli("frobnicate", dir) == 2);
}

TEST_CASE("cli: identical invocations append identical records") {
    const fs::path dir = temp_dir();
    const std::string invocation =
        "run --dataset synth --split synth_drift --method seqft --seed 13 " + kSmallRun +
        " --out once.log";
    CHECK(run_cli(invocation, dir) == 0);
    fs::rename(dir / "once.log", dir / "first.log");
    CHECK(run_cli(invocation, dir) == 0);
    fs::rename(dir / "once.log", dir / "second.log");
    CHECK(slurp(dir / "first.log") == slurp(dir / "second.log"));
    CHECK(!slurp(dir / "first.log").empty());
}

TEST_CASE("cli: default synthetic matrix runs 12 runs") {
    const fs::path dir = temp_dir();
    const int code = run_cli("matrix " + kSmallRun + " --out matrix.log", dir);
    CHECK(code == 0);
    const std::string out = slurp(dir / "cli_stdout.txt");
    CHECK(out.find("12 runs ok") != std::string::npos);
    const auto records = read_log(dir / "matrix.log");
    long phases = 0;
    for (const LogRecord& r : records) {
        if (std::holds_alternative<PhaseRecord>(r.payload)) ++phases;
    }
    CHECK(phases == 60); // 2 scenarios x 2 methods x 3 seeds x 5 phases
}

TEST_CASE("cli: matrix without data names the missing file and exits 2") {
    const fs::path dir = temp_dir();
    const int code =
        run_cli("--data-root " + dir.string() + " matrix --scenarios rotmnist.digits_pairs", dir);
    CHECK(code == 2);
    const std::string err = slurp(dir / "cli_stderr.txt");
    CHECK(err.find("train-images-idx3-ubyte") != std::string::npos);
}

TEST_CASE("cli: matrix log feeds report without errors") {
    const fs::path dir = temp_dir();
    REQUIRE(run_cli("matrix " + kSmallRun + " --out matrix.log", dir) == 0);
    const int code = run_cli("report --log matrix.log --outdir reports --format tsv", dir);
    CHECK(code == 0);
    CHECK(fs::exists(dir / "reports" / "table_avg_forgetting.tsv"));
    CHECK(fs::exists(dir / "reports" / "plot_forgetting_summary.tsv"));
    CHECK(fs::exists(dir / "reports" / "table_phase_synth.synth_pairs.tsv"));
    CHECK(fs::exists(dir / "reports" / "plot_per_phase_accuracy_synth.synth_pairs.tsv"));
}

TEST_CASE("cli: report on a missing log exits 2") {
    const fs::path dir = temp_dir();
    CHECK(run_cli("report --log nowhere.log", dir) == 2);
}

TEST_CASE("cli: probe appends C(T,2) reports per seed") {
    const fs::path dir = temp_dir();
    const int code = run_cli("probe --dataset synth --split synth_pairs --method seqft --seed 13 " +
                                 kSmallRun + " --out probes.log",
                             dir);
    CHECK(code == 0);
    const auto records = read_log(dir / "probes.log");
    long probes = 0;
    for (const LogRecord& r : records) {
        if (std::holds_alternative<ProbeSummary>(r.payload)) ++probes;
    }
    CHECK(probes == 10);
}

TEST_CASE("cli: probe from checkpoints matches the in-memory rerun") {
    const fs::path dir = temp_dir();
    const std::string common = "--dataset synth --split synth_pairs --method replay --seed 21 "
                               "--buffer-capacity 100 " +
                               kSmallRun;
    REQUIRE(run_cli("run " + common + " --out runs.log --checkpoint-dir ckpts", dir) == 0);
    CHECK(fs::exists(dir / "ckpts" / "phase_01.ckpt"));
    CHECK(fs::exists(dir / "ckpts" / "phase_05.ckpt"));
    REQUIRE(run_cli("probe " + common + " --out from_files.log --from-checkpoints ckpts", dir) ==
            0);
    REQUIRE(run_cli("probe " + common + " --out from_rerun.log", dir) == 0);
    CHECK(slurp(dir / "from_files.log") == slurp(dir / "from_rerun.log"));
    CHECK(!slurp(dir / "from_files.log").empty());
}

TEST_CASE("cli: gen-synth materializes the stream with its spec") {
    const fs::path dir = temp_dir();
    const int code = run_cli("gen-synth --split synth_drift --seed 7 --examples-per-phase 80 "
                             "--feature-dim 8 --outdir synth",
                             dir);
    CHECK(code == 0);
    CHECK(fs::exists(dir / "synth" / "stream.conf"));
    CHECK(fs::exists(dir / "synth" / "phase_01_train.csv"));
    CHECK(fs::exists(dir / "synth" / "phase_05_val.csv"));
    // spec round-trips through the written config
    const std::string conf = slurp(dir / "synth" / "stream.conf");
    CHECK(conf.find("split = synth_drift") != std::string::npos);
    CHECK(conf.find("seed = 7") != std::string::npos);
}

TEST_CASE("cli: config file values are overridden by explicit flags") {
    const fs::path dir = temp_dir();
    {
        std::ofstream conf(dir / "run.conf");
        conf << "[run]\n";
        conf << "dataset=synth\nsplit=synth_drift\nmethod=seqft\nseed=5\n";
        conf << "examples-per-phase=80\nfeature-dim=8\nepochs=1\nbatch=16\nhidden=8\n";
    }
    const int code = run_cli("run --config run.conf --seed 9 --out runs.log", dir);
    CHECK(code == 0);
    const auto records = read_log(dir / "runs.log");
    bool saw_meta = false;
    for (const LogRecord& r : records) {
        if (const RunMeta* m = std::get_if<RunMeta>(&r.payload)) {
            saw_meta = true;
            CHECK(m->split == "synth_drift"); // from config file
            CHECK(m->seed == 9);              // flag wins over config
        }
    }
    CHECK(saw_meta);
}
