#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "driftbench/objectives.hpp"
#include "driftbench/replay.hpp"
#include "driftbench/streams.hpp"

namespace driftbench {

struct ReplayOptions {
    std::size_t capacity = 0;
    double lambda = 0.5;
    BufferPolicy policy = BufferPolicy::reservoir;
    std::size_t quota = 0;     // 0 -> capacity / num_phases, at least 1
    bool double_batch = false; // paper-style B current + B buffer per step
};

struct TrainConfig {
    int epochs_per_phase = 3;
    int batch_size = 128;
    double lr = 1e-3;
    std::uint64_t seed = 42;
    Method method = Method::seqft;
    ReplayOptions replay; // used when method == replay
    std::vector<int> hidden = {64};
    Activation hidden_activation = Activation::tanh;
    bool reset_optimizer_each_phase = false;
};

void validate(const TrainConfig& cfg);

// All mutable state of one training run. One master generator drives
// initialization and batch draws; the buffer owns a derived generator so
// insertion randomness never perturbs the training stream.
struct RunState {
    ModelState model;
    OptimizerState optimizer;
    std::optional<ReplayBuffer> buffer;
    std::vector<ModelState> phase_checkpoints;        // theta_1..theta_t
    std::vector<OptimizerState> optimizer_snapshots;  // optimizer after each phase
    std::vector<ReplayBuffer> buffer_snapshots;       // buffer after each phase (replay)
    long steps_taken = 0;
    Rng rng;

    explicit RunState(std::uint64_t seed) : rng(seed) {}
};

// Builds the model (input width from the phase, hidden widths from cfg,
// output width from the task, identity final activation), the optimizer and,
// for replay, the buffer.
RunState init_run(const PhaseDataset& first_phase, const TrainConfig& cfg);

// Runs epochs_per_phase passes of ceil(|train|/B) steps. Each step draws a
// batch (seqft: uniform with replacement from phase.train; replay: mixed),
// takes one Adam step, and finally snapshots the parameters. Replay then
// ingests `quota` phase examples into the buffer.
void train_phase(RunState& state, const PhaseDataset& phase, const TrainConfig& cfg,
                 std::size_t quota);

struct RunResult {
    std::vector<PhaseRecord> records;
    RunState state;
    long steps_total = 0;
};

// Full protocol: after phase k records init_k on the phase's validation
// split; after the last phase records final_k for every k and emits one
// PhaseRecord per phase with the forgetting value. Deterministic in cfg.seed.
RunResult run_stream(std::span<const PhaseDataset> phases, const TrainConfig& cfg,
                     const std::string& dataset, const std::string& split);

// ---------------------------------------------------------------------------
// Checkpoint container (8-byte magic + format version, native-endian payload)
// ---------------------------------------------------------------------------

struct Checkpoint {
    int phase_index = 0;
    ModelState model;
    OptimizerState optimizer;
    bool has_buffer = false;
    std::size_t buffer_capacity = 0;
    BufferPolicy buffer_policy = BufferPolicy::reservoir;
    std::uint64_t buffer_seen = 0;
    std::vector<BufferEntry> buffer_entries;
    std::string buffer_rng_state;

    ReplayBuffer restore_buffer() const;
};

Checkpoint make_checkpoint(int phase_index, const ModelState& model, const OptimizerState& opt,
                           const ReplayBuffer* buffer);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

std::size_t effective_quota(const ReplayOptions& opts, std::size_t num_phases);

} // namespace driftbench
