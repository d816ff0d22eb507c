#pragma once

#include <filesystem>
#include <vector>

#include "driftbench/report.hpp"
#include "driftbench/trainer.hpp"

namespace driftbench {

// Cartesian product of (scenario, method, seed). Each run owns its state;
// its records are appended to the log as one block through the single
// writer. workers = 1 keeps the log byte-reproducible.
struct MatrixOptions {
    std::vector<StreamSpec> scenarios;
    TrainConfig base; // method and seed are overridden per run
    std::vector<std::uint64_t> seeds = {13, 21, 42};
    std::vector<Method> methods = {Method::seqft, Method::replay};
    int workers = 1;
    bool probe = false;
    std::filesystem::path data_root;
};

struct MatrixSummary {
    long runs_ok = 0;
    long runs_failed = 0;
    long records_written = 0;
};

// Failures of individual runs are recorded (run_meta with status=failed) and
// skipped; the matrix continues.
MatrixSummary run_matrix(const MatrixOptions& options, LogWriter& writer);

// Configuration echo for run_meta records: every effective setting.
std::vector<std::pair<std::string, std::string>> config_echo(const StreamSpec& spec,
                                                             const TrainConfig& cfg);

} // namespace driftbench
