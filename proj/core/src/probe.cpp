#include "driftbench/probe.hpp"

#include <algorithm>
#include <cmath>

#include "driftbench/errors.hpp"
#include "driftbench/objectives.hpp"

namespace driftbench {

GradientVector phase_gradient(const ModelState& model, const PhaseDataset& phase) {
    if (phase.train.empty()) throw ConfigError("phase_gradient: empty phase");
    return loss_and_grad(model, phase.train, phase.task).grad;
}

double cosine(const GradientVector& a, const GradientVector& b) {
    if (!(a.norm > 0.0) || !(b.norm > 0.0)) {
        throw ConfigError("cosine: undefined for zero-norm gradient");
    }
    const double c = dot(a, b) / (a.norm * b.norm);
    return std::clamp(c, -1.0, 1.0);
}

std::vector<std::pair<double, double>> mixture_h(const GradientVector& grad_k,
                                                 const GradientVector& grad_t,
                                                 const GradientVector& grad_hist,
                                                 std::span<const double> lambdas) {
    const double h0 = dot(grad_k, grad_t);
    const double h1 = dot(grad_k, grad_hist);
    std::vector<std::pair<double, double>> out;
    out.reserve(lambdas.size());
    for (double l : lambdas) {
        // endpoints reproduce the raw inner products bit-exactly
        double h;
        if (l == 0.0) h = h0;
        else if (l == 1.0) h = h1;
        else h = (1.0 - l) * h0 + l * h1;
        out.emplace_back(l, h);
    }
    return out;
}

const char* to_string(LambdaStar::Reason r) {
    switch (r) {
        case LambdaStar::Reason::ok: return "ok";
        case LambdaStar::Reason::no_conflict: return "no_conflict";
        case LambdaStar::Reason::hostile_history: return "hostile_history";
    }
    return "?";
}

LambdaStar lambda_star(const GradientVector& grad_k, const GradientVector& grad_t,
                       const GradientVector& grad_hist) {
    const double h0 = dot(grad_k, grad_t);
    const double h1 = dot(grad_k, grad_hist);
    LambdaStar out;
    if (h0 >= 0.0) {
        out.reason = LambdaStar::Reason::no_conflict;
        return out;
    }
    if (h1 < 0.0) {
        out.reason = LambdaStar::Reason::hostile_history;
        return out;
    }
    // h affine with h(0) < 0 <= h(1): root at h0 / (h0 - h1)
    out.reason = LambdaStar::Reason::ok;
    out.value = h0 / (h0 - h1);
    return out;
}

double predict_one_step(const GradientVector& grad_k, const GradientVector& direction, double eta) {
    if (!(eta > 0.0)) throw ConfigError("predict_one_step: eta must be positive");
    return -eta * dot(grad_k, direction);
}

std::pair<double, std::size_t> buffer_gradient_deviation(
    const ModelState& model, const ReplayBuffer& buffer,
    std::span<const PhaseDataset> past_phases) {
    if (buffer.empty()) throw ConfigError("buffer_gradient_deviation: empty buffer");
    if (past_phases.empty()) throw ConfigError("buffer_gradient_deviation: no past phases");

    const TaskKind& task = past_phases.front().task;
    std::vector<Example> contents;
    contents.reserve(buffer.size());
    for (const BufferEntry& e : buffer.entries()) contents.push_back(e.example);
    const GradientVector buf_grad = loss_and_grad(model, contents, task).grad;

    std::vector<double> mean(buf_grad.size(), 0.0);
    for (const PhaseDataset& phase : past_phases) {
        const GradientVector g = phase_gradient(model, phase);
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += g.values[i];
    }
    const double inv = 1.0 / static_cast<double>(past_phases.size());
    double sq = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        const double d = buf_grad.values[i] - mean[i] * inv;
        sq += d * d;
    }
    return {std::sqrt(sq), buffer.capacity()};
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    grid.reserve(11);
    for (int i = 0; i <= 10; ++i) grid.push_back(static_cast<double>(i) / 10.0);
    return grid;
}

std::vector<ProbeReport> probe_run(std::span<const ModelState> checkpoints,
                                   std::span<const PhaseDataset> phases,
                                   std::span<const ReplayBuffer> buffer_snapshots) {
    if (checkpoints.size() != phases.size()) {
        throw ConfigError("probe_run: need one checkpoint per phase (got " +
                          std::to_string(checkpoints.size()) + " for " +
                          std::to_string(phases.size()) + " phases)");
    }
    if (!buffer_snapshots.empty() && buffer_snapshots.size() != phases.size()) {
        throw ConfigError("probe_run: need one buffer snapshot per phase when probing replay");
    }
    const std::size_t T = phases.size();
    std::vector<ProbeReport> reports;
    reports.reserve(T * (T - 1) / 2);

    for (std::size_t t = 2; t <= T; ++t) {
        const ModelState& theta = checkpoints[t - 2]; // parameters after phase t-1
        // full-batch gradients of every phase 1..t at theta
        std::vector<GradientVector> grads;
        grads.reserve(t);
        for (std::size_t j = 0; j < t; ++j) grads.push_back(phase_gradient(theta, phases[j]));

        std::vector<double> hist(grads.front().size(), 0.0);
        for (std::size_t j = 0; j + 1 < t; ++j) {
            for (std::size_t i = 0; i < hist.size(); ++i) hist[i] += grads[j].values[i];
        }
        const double inv = 1.0 / static_cast<double>(t - 1);
        for (double& v : hist) v *= inv;
        const GradientVector grad_hist = GradientVector::from(std::move(hist));

        // bound estimate: max single-example gradient norm over past phases
        double grad_bound = 0.0;
        for (std::size_t j = 0; j + 1 < t; ++j) {
            for (const Example& e : phases[j].train) {
                const GradientVector g =
                    loss_and_grad(theta, std::span<const Example>(&e, 1), phases[j].task).grad;
                grad_bound = std::max(grad_bound, g.norm);
            }
        }

        std::optional<GradientVector> buffer_grad;
        std::optional<double> deviation;
        std::optional<std::size_t> capacity;
        if (!buffer_snapshots.empty() && !buffer_snapshots[t - 2].empty()) {
            const ReplayBuffer& buf = buffer_snapshots[t - 2];
            std::vector<Example> contents;
            contents.reserve(buf.size());
            for (const BufferEntry& e : buf.entries()) contents.push_back(e.example);
            buffer_grad = loss_and_grad(theta, contents, phases.front().task).grad;
            const auto [dev, cap] =
                buffer_gradient_deviation(theta, buf, phases.subspan(0, t - 1));
            deviation = dev;
            capacity = cap;
        }

        for (std::size_t k = 1; k < t; ++k) {
            ProbeReport rep;
            rep.phase_k = phases[k - 1].phase_id;
            rep.phase_t = phases[t - 1].phase_id;
            rep.grad_k = grads[k - 1];
            rep.grad_t = grads[t - 1];
            rep.grad_hist = grad_hist;
            rep.buffer_grad = buffer_grad;
            rep.cosine_kt = cosine(rep.grad_k, rep.grad_t);
            rep.lambda_star = lambda_star(rep.grad_k, rep.grad_t, rep.grad_hist);
            std::vector<double> grid = default_lambda_grid();
            if (rep.lambda_star.defined()) grid.push_back(rep.lambda_star.value);
            rep.h_at = mixture_h(rep.grad_k, rep.grad_t, rep.grad_hist, grid);
            rep.grad_bound = grad_bound;
            rep.deviation = deviation;
            rep.buffer_capacity = capacity;
            reports.push_back(std::move(rep));
        }
    }
    return reports;
}

} // namespace driftbench
