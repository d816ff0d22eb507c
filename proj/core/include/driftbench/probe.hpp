#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "driftbench/nn.hpp"
#include "driftbench/replay.hpp"
#include "driftbench/streams.hpp"

namespace driftbench {

// Full-batch gradient of the empirical risk over phase.train, in a fixed
// deterministic order.
GradientVector phase_gradient(const ModelState& model, const PhaseDataset& phase);

// <a,b> / (|a||b|), clamped to [-1,1]. Throws ConfigError when either norm
// is zero.
double cosine(const GradientVector& a, const GradientVector& b);

// h(lambda) = <grad_k, (1-lambda) grad_t + lambda grad_hist>, evaluated at
// each requested lambda. Affine in lambda by construction.
std::vector<std::pair<double, double>> mixture_h(const GradientVector& grad_k,
                                                 const GradientVector& grad_t,
                                                 const GradientVector& grad_hist,
                                                 std::span<const double> lambdas);

// Smallest replay ratio at which the mixed direction stops increasing the
// past phase's risk. Defined when h(0) < 0 <= h(1); otherwise reports why
// the premises fail.
struct LambdaStar {
    enum class Reason { ok, no_conflict, hostile_history };
    Reason reason = Reason::ok;
    double value = 0.0; // valid when reason == ok

    bool defined() const { return reason == Reason::ok; }
};

const char* to_string(LambdaStar::Reason r);

LambdaStar lambda_star(const GradientVector& grad_k, const GradientVector& grad_t,
                       const GradientVector& grad_hist);

// First-order risk change of phase k under the step theta -> theta - eta*d:
// -eta * <grad_k, d>. Throws ConfigError when eta <= 0.
double predict_one_step(const GradientVector& grad_k, const GradientVector& direction, double eta);

// ||grad over buffer contents - mean of full-batch past-phase gradients||,
// paired with the buffer capacity for scaling fits.
std::pair<double, std::size_t> buffer_gradient_deviation(const ModelState& model,
                                                         const ReplayBuffer& buffer,
                                                         std::span<const PhaseDataset> past_phases);

// Alignment diagnostics for one (k, t) phase pair, evaluated at the
// parameters held at the start of phase t.
struct ProbeReport {
    int phase_k = 0;
    int phase_t = 0;
    GradientVector grad_k;    // gradient of phase k's risk
    GradientVector grad_t;    // gradient of phase t's risk
    GradientVector grad_hist; // unweighted mean over phases < t
    std::optional<GradientVector> buffer_grad;
    double cosine_kt = 0.0;
    LambdaStar lambda_star;
    std::vector<std::pair<double, double>> h_at;
    double grad_bound = 0.0; // max single-example gradient norm over past phases
    std::optional<double> deviation;
    std::optional<std::size_t> buffer_capacity;
};

// One report per (k, t) with k < t, evaluated at checkpoints[t-2] (the
// parameters after phase t-1). checkpoints must hold one model per phase;
// buffer_snapshots may be empty (seqft) or hold one buffer per phase.
std::vector<ProbeReport> probe_run(std::span<const ModelState> checkpoints,
                                   std::span<const PhaseDataset> phases,
                                   std::span<const ReplayBuffer> buffer_snapshots);

// Default probe grid {0, 0.1, ..., 1.0}; lambda_star is appended when defined.
std::vector<double> default_lambda_grid();

} // namespace driftbench
