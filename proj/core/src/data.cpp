#include "driftbench/data.hpp"

#include <cmath>
#include <string>

namespace driftbench {

namespace {

void check_example(const Example& e, std::size_t dim, const TaskKind& task, const char* where) {
    if (e.x.size() != dim) {
        throw ConfigError(std::string("phase ") + where + ": inconsistent feature dimension");
    }
    for (double v : e.x) {
        if (!std::isfinite(v)) {
            throw ConfigError(std::string("phase ") + where + ": non-finite feature");
        }
    }
    if (task.type == TaskType::classification) {
        if (e.label < 0 || e.label >= task.num_classes) {
            throw ConfigError(std::string("phase ") + where + ": label out of range");
        }
    } else {
        if (e.target.size() != static_cast<std::size_t>(task.output_dim)) {
            throw ConfigError(std::string("phase ") + where + ": target dimension mismatch");
        }
    }
}

} // namespace

void validate(const PhaseDataset& phase) {
    validate(phase.task);
    if (phase.train.empty() || phase.val.empty()) {
        throw ConfigError("phase " + std::to_string(phase.phase_id) +
                          ": train and val must both be non-empty");
    }
    const std::size_t dim = phase.train.front().x.size();
    for (const Example& e : phase.train) check_example(e, dim, phase.task, "train");
    for (const Example& e : phase.val) check_example(e, dim, phase.task, "val");
}

std::size_t feature_dim(const PhaseDataset& phase) {
    return phase.train.empty() ? 0 : phase.train.front().x.size();
}

PhaseDataset finalize_phase(int phase_id, std::vector<Example> examples, const TaskKind& task,
                            double val_fraction) {
    const std::size_t n = examples.size();
    if (n < 2) {
        throw ConfigError("phase " + std::to_string(phase_id) +
                          ": need at least 2 examples to split train/val");
    }
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw ConfigError("val_fraction must lie in (0,1)");
    }
    std::size_t n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
    if (n_val < 1) n_val = 1;
    if (n_val > n - 1) n_val = n - 1;

    PhaseDataset phase;
    phase.phase_id = phase_id;
    phase.task = task;
    phase.val.assign(examples.end() - static_cast<std::ptrdiff_t>(n_val), examples.end());
    examples.resize(n - n_val);
    phase.train = std::move(examples);
    return phase;
}

} // namespace driftbench
