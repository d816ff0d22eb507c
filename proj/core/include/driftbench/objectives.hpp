#pragma once

#include <span>
#include <string>
#include <vector>

#include "driftbench/nn.hpp"

namespace driftbench {

enum class Method { seqft, replay };

const char* to_string(Method m);
Method method_from_string(const std::string& s);

// One row of the experiment log: per-(dataset, split, method, seed, phase)
// initial metric, final metric and forgetting.
struct PhaseRecord {
    std::string dataset;
    std::string split;
    TaskType task = TaskType::classification;
    Metric metric = Metric::accuracy;
    Method method = Method::seqft;
    long seed = 0;
    int phase = 0; // 1-based
    double init = 0.0;
    double final = 0.0;
    double forgetting = 0.0;
};

// Mean per-example negative log-likelihood over `examples`, evaluated in the
// given (deterministic) order. Throws ConfigError when empty.
double empirical_risk(const ModelState& model, std::span<const Example> examples,
                      const TaskKind& task);

// accuracy: fraction of examples whose argmax output equals the label, ties
// broken to the lowest class index, in [0,1]. mse: squared error averaged
// over examples and output coordinates. Throws ConfigError on metric/task
// mismatch or empty input.
double evaluate(const ModelState& model, std::span<const Example> examples, const TaskKind& task,
                Metric metric);

// Positive = forgetting, negative = backward transfer.
// lower-is-better metrics: final - init; higher-is-better: init - final.
double forgetting(double init, double final, Metric metric);

struct ForgettingStats {
    double mean = 0.0;
    double stddev = 0.0; // sample (n-1) convention; 0 when n < 2
    std::size_t n = 0;
};

struct ForgettingGroup {
    std::string dataset;
    std::string split;
    Method method = Method::seqft;
    Metric metric = Metric::accuracy;
    ForgettingStats stats;
};

// Mean and sample standard deviation of forgetting pooled over the
// (phase, seed) records of each (dataset, split, method) group. Groups are
// returned sorted by (dataset, split, method). Throws ConfigError when
// `records` is empty or a group mixes metric orientations.
std::vector<ForgettingGroup> aggregate_forgetting(std::span<const PhaseRecord> records);

ForgettingStats mean_stddev(std::span<const double> values);

} // namespace driftbench
