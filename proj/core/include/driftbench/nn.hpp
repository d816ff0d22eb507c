#pragma once

#include <span>
#include <vector>

#include "driftbench/data.hpp"
#include "driftbench/rng.hpp"

namespace driftbench {

enum class Activation { identity, tanh, relu };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Dense feed-forward network. `topology` holds the layer widths starting with
// the input width; `activations` has one tag per layer transition. All
// parameters live in one flat vector: per layer the out-by-in weight block
// (row-major), then the bias vector.
struct ModelState {
    std::vector<int> topology;
    std::vector<Activation> activations;
    std::vector<double> params;
};

std::size_t param_count(std::span<const int> topology);

// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero, drawn in
// layer order from `rng`.
ModelState init_model(std::vector<int> topology, std::vector<Activation> activations, Rng& rng);

// Throws ConfigError on width/activation/params size mismatches,
// NumericError on non-finite parameters.
void validate(const ModelState& model);

std::vector<double> forward_one(const ModelState& model, std::span<const double> input);
std::vector<std::vector<double>> forward(const ModelState& model,
                                         std::span<const std::vector<double>> inputs);

// Flat gradient with its Euclidean norm cached at construction.
struct GradientVector {
    std::vector<double> values;
    double norm = 0.0;

    static GradientVector from(std::vector<double> values);
    std::size_t size() const { return values.size(); }
};

double dot(const GradientVector& a, const GradientVector& b);

struct LossGrad {
    double loss = 0.0;
    GradientVector grad;
};

// Batch-mean negative log-likelihood and its exact analytic gradient.
// Classification: softmax cross-entropy on the network outputs.
// Reconstruction/forecasting: half squared error (unit-variance Gaussian with
// the constant dropped). Throws ConfigError on an empty batch or target
// mismatch, NumericError when any intermediate is non-finite.
LossGrad loss_and_grad(const ModelState& model, std::span<const Example> batch,
                       const TaskKind& task);

// Loss only; same definition and errors as loss_and_grad.
double batch_loss(const ModelState& model, std::span<const Example> batch, const TaskKind& task);

struct OptimizerState {
    long step_count = 0;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

OptimizerState make_optimizer(std::size_t dim, double lr);

// Bias-corrected Adam update applied in place; increments step_count.
// Throws NumericError on non-finite gradient entries.
void adam_step(OptimizerState& opt, ModelState& model, const GradientVector& grad);

// Max over coordinates of |analytic - central difference| / (|analytic| + step).
// Throws ConfigError when step <= 0.
double grad_check(const ModelState& model, std::span<const Example> batch, const TaskKind& task,
                  double step);

} // namespace driftbench
