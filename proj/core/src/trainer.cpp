#include "driftbench/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "driftbench/errors.hpp"

namespace driftbench {

void validate(const TrainConfig& cfg) {
    if (cfg.epochs_per_phase < 0) throw ConfigError("train: epochs_per_phase must be >= 0");
    if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be positive");
    if (!(cfg.lr > 0.0)) throw ConfigError("train: lr must be positive");
    for (int w : cfg.hidden) {
        if (w < 1) throw ConfigError("train: hidden widths must be positive");
    }
    if (cfg.method == Method::replay) {
        if (cfg.replay.capacity == 0) throw ConfigError("train: replay needs a buffer capacity");
        if (!(cfg.replay.lambda >= 0.0 && cfg.replay.lambda <= 1.0)) {
            throw ConfigError("train: lambda must lie in [0,1]");
        }
    }
}

std::size_t effective_quota(const ReplayOptions& opts, std::size_t num_phases) {
    if (opts.quota > 0) return opts.quota;
    if (num_phases == 0) return opts.capacity;
    return std::max<std::size_t>(1, opts.capacity / num_phases);
}

RunState init_run(const PhaseDataset& first_phase, const TrainConfig& cfg) {
    validate(cfg);
    validate(first_phase);
    RunState state(cfg.seed);

    std::vector<int> topology;
    topology.push_back(static_cast<int>(feature_dim(first_phase)));
    for (int w : cfg.hidden) topology.push_back(w);
    topology.push_back(first_phase.task.output_dim);
    std::vector<Activation> acts(cfg.hidden.size(), cfg.hidden_activation);
    acts.push_back(Activation::identity);

    state.model = init_model(std::move(topology), std::move(acts), state.rng);
    state.optimizer = make_optimizer(state.model.params.size(), cfg.lr);
    if (cfg.method == Method::replay) {
        state.buffer.emplace(cfg.replay.capacity, cfg.replay.policy,
                             derive_seed(cfg.seed, 0xB0FFEull));
    }
    return state;
}

void train_phase(RunState& state, const PhaseDataset& phase, const TrainConfig& cfg,
                 std::size_t quota) {
    validate(phase);
    const std::size_t n = phase.train.size();
    const std::size_t steps_per_epoch =
        (n + static_cast<std::size_t>(cfg.batch_size) - 1) / static_cast<std::size_t>(cfg.batch_size);

    MixConfig mix;
    mix.lambda = cfg.replay.lambda;
    mix.batch_size = cfg.batch_size;
    if (cfg.replay.double_batch) {
        mix.lambda = 0.5;
        mix.batch_size = 2 * cfg.batch_size;
    }

    if (cfg.reset_optimizer_each_phase) {
        state.optimizer = make_optimizer(state.model.params.size(), cfg.lr);
    }

    for (int epoch = 0; epoch < cfg.epochs_per_phase; ++epoch) {
        for (std::size_t s = 0; s < steps_per_epoch; ++s) {
            std::vector<Example> batch;
            if (cfg.method == Method::replay) {
                batch = sample_mixed_batch(*state.buffer, phase, mix, state.rng);
            } else {
                batch.reserve(static_cast<std::size_t>(cfg.batch_size));
                for (int i = 0; i < cfg.batch_size; ++i) {
                    batch.push_back(phase.train[state.rng.below(n)]);
                }
            }
            const LossGrad lg = loss_and_grad(state.model, batch, phase.task);
            adam_step(state.optimizer, state.model, lg.grad);
            state.steps_taken += 1;
        }
    }

    state.phase_checkpoints.push_back(state.model);
    state.optimizer_snapshots.push_back(state.optimizer);
    if (cfg.method == Method::replay) {
        state.buffer->ingest_phase(phase, quota);
        state.buffer_snapshots.push_back(*state.buffer);
    }
}

RunResult run_stream(std::span<const PhaseDataset> phases, const TrainConfig& cfg,
                     const std::string& dataset, const std::string& split) {
    if (phases.size() < 2) throw ConfigError("run_stream: need at least 2 phases");
    for (const PhaseDataset& p : phases) validate(p);

    const TaskKind& task = phases.front().task;
    const Metric metric = default_metric(task);
    const std::size_t quota = effective_quota(cfg.replay, phases.size());

    RunResult result{std::vector<PhaseRecord>{}, init_run(phases.front(), cfg), 0};
    RunState& state = result.state;

    std::vector<double> init_values;
    init_values.reserve(phases.size());
    for (const PhaseDataset& phase : phases) {
        train_phase(state, phase, cfg, quota);
        init_values.push_back(evaluate(state.model, phase.val, task, metric));
    }

    for (std::size_t k = 0; k < phases.size(); ++k) {
        PhaseRecord rec;
        rec.dataset = dataset;
        rec.split = split;
        rec.task = task.type;
        rec.metric = metric;
        rec.method = cfg.method;
        rec.seed = static_cast<long>(cfg.seed);
        rec.phase = phases[k].phase_id;
        rec.init = init_values[k];
        rec.final = evaluate(state.model, phases[k].val, task, metric);
        rec.forgetting = forgetting(rec.init, rec.final, metric);
        result.records.push_back(std::move(rec));
    }
    result.steps_total = state.steps_taken;
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'D', 'R', 'I', 'F', 'T', 'B', 'C', 'H'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
        throw DataFormatError(path + ": truncated checkpoint");
    }
    return v;
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
    put<std::uint64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& in, const std::string& path) {
    const std::uint64_t n = get<std::uint64_t>(in, path);
    std::vector<double> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(n * sizeof(double))) {
        throw DataFormatError(path + ": truncated checkpoint");
    }
    return v;
}

void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, const std::string& path) {
    const std::uint32_t n = get<std::uint32_t>(in, path);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n)) {
        throw DataFormatError(path + ": truncated checkpoint");
    }
    return s;
}

} // namespace

ReplayBuffer Checkpoint::restore_buffer() const {
    if (!has_buffer) throw ConfigError("checkpoint has no buffer snapshot");
    return ReplayBuffer::restore(buffer_capacity, buffer_policy, buffer_seen, buffer_entries,
                                 buffer_rng_state);
}

Checkpoint make_checkpoint(int phase_index, const ModelState& model, const OptimizerState& opt,
                           const ReplayBuffer* buffer) {
    Checkpoint c;
    c.phase_index = phase_index;
    c.model = model;
    c.optimizer = opt;
    if (buffer) {
        c.has_buffer = true;
        c.buffer_capacity = buffer->capacity();
        c.buffer_policy = buffer->policy();
        c.buffer_seen = buffer->seen_count();
        c.buffer_entries = buffer->entries();
        c.buffer_rng_state = buffer->rng_state();
    }
    return c;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write checkpoint: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kVersion);
    put<std::int32_t>(out, ckpt.phase_index);

    put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.model.topology.size()));
    for (int w : ckpt.model.topology) put<std::int32_t>(out, w);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.model.activations.size()));
    for (Activation a : ckpt.model.activations) put<std::uint8_t>(out, static_cast<std::uint8_t>(a));
    put_doubles(out, ckpt.model.params);

    put<std::int64_t>(out, ckpt.optimizer.step_count);
    put<double>(out, ckpt.optimizer.lr);
    put<double>(out, ckpt.optimizer.beta1);
    put<double>(out, ckpt.optimizer.beta2);
    put<double>(out, ckpt.optimizer.epsilon);
    put_doubles(out, ckpt.optimizer.first_moment);
    put_doubles(out, ckpt.optimizer.second_moment);

    put<std::uint8_t>(out, ckpt.has_buffer ? 1 : 0);
    if (ckpt.has_buffer) {
        put<std::uint64_t>(out, ckpt.buffer_capacity);
        put<std::uint8_t>(out, static_cast<std::uint8_t>(ckpt.buffer_policy));
        put<std::uint64_t>(out, ckpt.buffer_seen);
        put<std::uint64_t>(out, ckpt.buffer_entries.size());
        for (const BufferEntry& e : ckpt.buffer_entries) {
            put_doubles(out, e.example.x);
            put<std::int32_t>(out, e.example.label);
            put_doubles(out, e.example.target);
            put<std::int32_t>(out, e.example.phase_origin);
            put<std::int32_t>(out, e.insertion_phase);
        }
        put_string(out, ckpt.buffer_rng_state);
    }
    if (!out) throw ConfigError("checkpoint write failed: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint: " + path.string());
    const std::string name = path.string();

    char magic[8];
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw DataFormatError(name + ": bad checkpoint magic");
    }
    const std::uint32_t version = get<std::uint32_t>(in, name);
    if (version != kVersion) {
        throw DataFormatError(name + ": unsupported checkpoint version " + std::to_string(version));
    }

    Checkpoint c;
    c.phase_index = get<std::int32_t>(in, name);

    const std::uint32_t n_topo = get<std::uint32_t>(in, name);
    c.model.topology.resize(n_topo);
    for (std::uint32_t i = 0; i < n_topo; ++i) c.model.topology[i] = get<std::int32_t>(in, name);
    const std::uint32_t n_act = get<std::uint32_t>(in, name);
    c.model.activations.resize(n_act);
    for (std::uint32_t i = 0; i < n_act; ++i) {
        c.model.activations[i] = static_cast<Activation>(get<std::uint8_t>(in, name));
    }
    c.model.params = get_doubles(in, name);

    c.optimizer.step_count = get<std::int64_t>(in, name);
    c.optimizer.lr = get<double>(in, name);
    c.optimizer.beta1 = get<double>(in, name);
    c.optimizer.beta2 = get<double>(in, name);
    c.optimizer.epsilon = get<double>(in, name);
    c.optimizer.first_moment = get_doubles(in, name);
    c.optimizer.second_moment = get_doubles(in, name);

    c.has_buffer = get<std::uint8_t>(in, name) != 0;
    if (c.has_buffer) {
        c.buffer_capacity = get<std::uint64_t>(in, name);
        c.buffer_policy = static_cast<BufferPolicy>(get<std::uint8_t>(in, name));
        c.buffer_seen = get<std::uint64_t>(in, name);
        const std::uint64_t n_entries = get<std::uint64_t>(in, name);
        c.buffer_entries.reserve(n_entries);
        for (std::uint64_t i = 0; i < n_entries; ++i) {
            BufferEntry e;
            e.example.x = get_doubles(in, name);
            e.example.label = get<std::int32_t>(in, name);
            e.example.target = get_doubles(in, name);
            e.example.phase_origin = get<std::int32_t>(in, name);
            e.insertion_phase = get<std::int32_t>(in, name);
            c.buffer_entries.push_back(std::move(e));
        }
        c.buffer_rng_state = get_string(in, name);
    }
    return c;
}

} // namespace driftbench
