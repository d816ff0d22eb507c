#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "driftbench/task.hpp"

namespace driftbench {

// One labelled observation. Classification targets live in `label`,
// reconstruction/forecasting targets in `target`. `phase_origin` records the
// stream phase the example was drawn from (used by buffer bookkeeping).
struct Example {
    std::vector<double> x;
    int label = -1;
    std::vector<double> target;
    int phase_origin = 0;
};

// A finite labelled sample for one phase of the stream, already divided into
// a training part and a held-out validation part.
struct PhaseDataset {
    int phase_id = 0; // 1-based position in the stream
    std::vector<Example> train;
    std::vector<Example> val;
    TaskKind task;
};

// Checks: both splits non-empty, all examples share one feature dimension,
// targets consistent with the task (label in range / target dim matches).
// Throws ConfigError on violation.
void validate(const PhaseDataset& phase);

std::size_t feature_dim(const PhaseDataset& phase);

// Splits `examples` into train/val by stable order: the last
// round(val_fraction * n) examples become validation, clamped so both parts
// stay non-empty. Throws ConfigError when n < 2.
PhaseDataset finalize_phase(int phase_id, std::vector<Example> examples, const TaskKind& task,
                            double val_fraction);

} // namespace driftbench
