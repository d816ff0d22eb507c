#include "driftbench/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "driftbench/errors.hpp"

namespace driftbench {

namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::identity: return z;
        case Activation::tanh: return std::tanh(z);
        case Activation::relu: return z > 0.0 ? z : 0.0;
    }
    return z;
}

// Derivative expressed through pre-activation z and post-activation value a.
double activate_deriv(Activation act, double z, double a) {
    switch (act) {
        case Activation::identity: return 1.0;
        case Activation::tanh: return 1.0 - a * a;
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    }
    (void)z;
    return 1.0;
}

struct LayerView {
    int in = 0;
    int out = 0;
    std::size_t weight_off = 0; // weight(o,i) at weight_off + o*in + i
    std::size_t bias_off = 0;   // bias(o) at bias_off + o
};

std::vector<LayerView> layer_views(const ModelState& m) {
    std::vector<LayerView> views;
    views.reserve(m.activations.size());
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < m.topology.size(); ++l) {
        LayerView v;
        v.in = m.topology[l];
        v.out = m.topology[l + 1];
        v.weight_off = off;
        v.bias_off = off + static_cast<std::size_t>(v.in) * static_cast<std::size_t>(v.out);
        off = v.bias_off + static_cast<std::size_t>(v.out);
        views.push_back(v);
    }
    return views;
}

// Per-example forward pass keeping everything backprop needs.
struct ForwardTrace {
    std::vector<std::vector<double>> acts; // acts[0] = input, acts[L] = output
    std::vector<std::vector<double>> pre;  // pre[l] = z of layer l (size L)
};

ForwardTrace forward_trace(const ModelState& m, const std::vector<LayerView>& views,
                           std::span<const double> input) {
    ForwardTrace t;
    t.acts.resize(views.size() + 1);
    t.pre.resize(views.size());
    t.acts[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < views.size(); ++l) {
        const LayerView& v = views[l];
        const std::vector<double>& a_in = t.acts[l];
        std::vector<double> z(static_cast<std::size_t>(v.out));
        for (int o = 0; o < v.out; ++o) {
            double s = m.params[v.bias_off + static_cast<std::size_t>(o)];
            const double* w = m.params.data() + v.weight_off +
                              static_cast<std::size_t>(o) * static_cast<std::size_t>(v.in);
            for (int i = 0; i < v.in; ++i) s += w[i] * a_in[static_cast<std::size_t>(i)];
            z[static_cast<std::size_t>(o)] = s;
        }
        std::vector<double> a(z.size());
        for (std::size_t o = 0; o < z.size(); ++o) a[o] = activate(m.activations[l], z[o]);
        t.pre[l] = std::move(z);
        t.acts[l + 1] = std::move(a);
    }
    return t;
}

void check_batch(const ModelState& m, std::span<const Example> batch, const TaskKind& task) {
    if (batch.empty()) throw ConfigError("loss: empty batch");
    validate(task);
    if (m.topology.empty()) throw ConfigError("model: empty topology");
    if (m.topology.back() != task.output_dim) {
        throw ConfigError("model output width " + std::to_string(m.topology.back()) +
                          " != task output_dim " + std::to_string(task.output_dim));
    }
    const std::size_t in_dim = static_cast<std::size_t>(m.topology.front());
    for (const Example& e : batch) {
        if (e.x.size() != in_dim) {
            throw ConfigError("input shape: expected " + std::to_string(in_dim) + " features, got " +
                              std::to_string(e.x.size()));
        }
        if (task.type == TaskType::classification) {
            if (e.label < 0 || e.label >= task.num_classes) {
                throw ConfigError("label out of range: " + std::to_string(e.label));
            }
        } else if (e.target.size() != static_cast<std::size_t>(task.output_dim)) {
            throw ConfigError("target dimension mismatch");
        }
    }
}

// Loss of one example given its network output; fills d(loss)/d(output) when
// out_grad is non-null. Softmax cross-entropy uses the max-shift trick.
double example_loss(const TaskKind& task, const Example& e, const std::vector<double>& out,
                    std::vector<double>* out_grad) {
    if (task.type == TaskType::classification) {
        const double zmax = *std::max_element(out.begin(), out.end());
        double sum = 0.0;
        for (double z : out) sum += std::exp(z - zmax);
        const double logsum = zmax + std::log(sum);
        const double loss = logsum - out[static_cast<std::size_t>(e.label)];
        if (out_grad) {
            out_grad->resize(out.size());
            for (std::size_t j = 0; j < out.size(); ++j) {
                (*out_grad)[j] = std::exp(out[j] - logsum);
            }
            (*out_grad)[static_cast<std::size_t>(e.label)] -= 1.0;
        }
        return loss;
    }
    // Unit-variance Gaussian likelihood with the constant dropped:
    // half squared error summed over output coordinates.
    double loss = 0.0;
    if (out_grad) out_grad->resize(out.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double r = out[j] - e.target[j];
        loss += 0.5 * r * r;
        if (out_grad) (*out_grad)[j] = r;
    }
    return loss;
}

} // namespace

const char* to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
    }
    return "?";
}

Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    throw ConfigError("unknown activation: " + s);
}

std::size_t param_count(std::span<const int> topology) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < topology.size(); ++l) {
        n += static_cast<std::size_t>(topology[l] + 1) * static_cast<std::size_t>(topology[l + 1]);
    }
    return n;
}

ModelState init_model(std::vector<int> topology, std::vector<Activation> activations, Rng& rng) {
    ModelState m;
    m.topology = std::move(topology);
    m.activations = std::move(activations);
    if (m.topology.size() < 2) throw ConfigError("model: topology needs at least two widths");
    if (m.activations.size() != m.topology.size() - 1) {
        throw ConfigError("model: one activation per layer transition required");
    }
    for (int w : m.topology) {
        if (w < 1) throw ConfigError("model: layer widths must be positive");
    }
    m.params.assign(param_count(m.topology), 0.0);
    const auto views = layer_views(m);
    for (const LayerView& v : views) {
        const double limit = std::sqrt(6.0 / static_cast<double>(v.in + v.out));
        for (int o = 0; o < v.out; ++o) {
            for (int i = 0; i < v.in; ++i) {
                m.params[v.weight_off + static_cast<std::size_t>(o) * static_cast<std::size_t>(v.in) +
                         static_cast<std::size_t>(i)] = rng.uniform(-limit, limit);
            }
        }
        // biases stay zero
    }
    return m;
}

void validate(const ModelState& m) {
    if (m.topology.size() < 2) throw ConfigError("model: topology needs at least two widths");
    if (m.activations.size() != m.topology.size() - 1) {
        throw ConfigError("model: one activation per layer transition required");
    }
    if (m.params.size() != param_count(m.topology)) {
        throw ConfigError("model: params length does not match topology");
    }
    for (double p : m.params) {
        if (!std::isfinite(p)) throw NumericError("model: non-finite parameter");
    }
}

std::vector<double> forward_one(const ModelState& m, std::span<const double> input) {
    if (m.topology.empty() || input.size() != static_cast<std::size_t>(m.topology.front())) {
        throw ConfigError("input shape: expected " +
                          std::to_string(m.topology.empty() ? 0 : m.topology.front()) +
                          " features, got " + std::to_string(input.size()));
    }
    const auto views = layer_views(m);
    std::vector<double> a(input.begin(), input.end());
    for (std::size_t l = 0; l < views.size(); ++l) {
        const LayerView& v = views[l];
        std::vector<double> next(static_cast<std::size_t>(v.out));
        for (int o = 0; o < v.out; ++o) {
            double s = m.params[v.bias_off + static_cast<std::size_t>(o)];
            const double* w = m.params.data() + v.weight_off +
                              static_cast<std::size_t>(o) * static_cast<std::size_t>(v.in);
            for (int i = 0; i < v.in; ++i) s += w[i] * a[static_cast<std::size_t>(i)];
            next[static_cast<std::size_t>(o)] = activate(m.activations[l], s);
        }
        a = std::move(next);
    }
    return a;
}

std::vector<std::vector<double>> forward(const ModelState& m,
                                         std::span<const std::vector<double>> inputs) {
    std::vector<std::vector<double>> out;
    out.reserve(inputs.size());
    for (const auto& x : inputs) out.push_back(forward_one(m, x));
    return out;
}

GradientVector GradientVector::from(std::vector<double> values) {
    GradientVector g;
    g.values = std::move(values);
    double s = 0.0;
    for (double v : g.values) s += v * v;
    g.norm = std::sqrt(s);
    return g;
}

double dot(const GradientVector& a, const GradientVector& b) {
    if (a.values.size() != b.values.size()) {
        throw ConfigError("gradient dimension mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
    return s;
}

LossGrad loss_and_grad(const ModelState& m, std::span<const Example> batch, const TaskKind& task) {
    check_batch(m, batch, task);
    const auto views = layer_views(m);
    std::vector<double> grad(m.params.size(), 0.0);
    double total_loss = 0.0;
    std::vector<double> out_grad;

    for (const Example& e : batch) {
        ForwardTrace t = forward_trace(m, views, e.x);
        const double loss = example_loss(task, e, t.acts.back(), &out_grad);
        if (!std::isfinite(loss)) throw NumericError("loss: non-finite intermediate");
        total_loss += loss;

        // delta = d(loss)/d(pre-activation) of the current layer
        std::vector<double> delta(out_grad.size());
        for (std::size_t o = 0; o < delta.size(); ++o) {
            delta[o] = out_grad[o] *
                       activate_deriv(m.activations.back(), t.pre.back()[o], t.acts.back()[o]);
        }
        for (std::size_t li = views.size(); li-- > 0;) {
            const LayerView& v = views[li];
            const std::vector<double>& a_in = t.acts[li];
            for (int o = 0; o < v.out; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                double* gw = grad.data() + v.weight_off +
                             static_cast<std::size_t>(o) * static_cast<std::size_t>(v.in);
                for (int i = 0; i < v.in; ++i) gw[i] += d * a_in[static_cast<std::size_t>(i)];
                grad[v.bias_off + static_cast<std::size_t>(o)] += d;
            }
            if (li == 0) break;
            std::vector<double> prev(static_cast<std::size_t>(v.in), 0.0);
            for (int i = 0; i < v.in; ++i) {
                double s = 0.0;
                for (int o = 0; o < v.out; ++o) {
                    s += m.params[v.weight_off +
                                  static_cast<std::size_t>(o) * static_cast<std::size_t>(v.in) +
                                  static_cast<std::size_t>(i)] *
                         delta[static_cast<std::size_t>(o)];
                }
                prev[static_cast<std::size_t>(i)] =
                    s * activate_deriv(m.activations[li - 1], t.pre[li - 1][static_cast<std::size_t>(i)],
                                       t.acts[li][static_cast<std::size_t>(i)]);
            }
            delta = std::move(prev);
        }
    }

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) {
        g *= inv_n;
        if (!std::isfinite(g)) throw NumericError("gradient: non-finite intermediate");
    }
    LossGrad res;
    res.loss = total_loss * inv_n;
    if (!std::isfinite(res.loss)) throw NumericError("loss: non-finite intermediate");
    res.grad = GradientVector::from(std::move(grad));
    return res;
}

double batch_loss(const ModelState& m, std::span<const Example> batch, const TaskKind& task) {
    check_batch(m, batch, task);
    const auto views = layer_views(m);
    double total = 0.0;
    for (const Example& e : batch) {
        ForwardTrace t = forward_trace(m, views, e.x);
        const double loss = example_loss(task, e, t.acts.back(), nullptr);
        if (!std::isfinite(loss)) throw NumericError("loss: non-finite intermediate");
        total += loss;
    }
    return total / static_cast<double>(batch.size());
}

OptimizerState make_optimizer(std::size_t dim, double lr) {
    if (!(lr > 0.0)) throw ConfigError("optimizer: lr must be positive");
    OptimizerState opt;
    opt.lr = lr;
    opt.first_moment.assign(dim, 0.0);
    opt.second_moment.assign(dim, 0.0);
    return opt;
}

void adam_step(OptimizerState& opt, ModelState& model, const GradientVector& grad) {
    const std::size_t d = model.params.size();
    if (grad.values.size() != d || opt.first_moment.size() != d || opt.second_moment.size() != d) {
        throw ConfigError("adam: dimension mismatch");
    }
    for (double g : grad.values) {
        if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient entry");
    }
    opt.step_count += 1;
    const double t = static_cast<double>(opt.step_count);
    const double bc1 = 1.0 - std::pow(opt.beta1, t);
    const double bc2 = 1.0 - std::pow(opt.beta2, t);
    for (std::size_t i = 0; i < d; ++i) {
        const double g = grad.values[i];
        opt.first_moment[i] = opt.beta1 * opt.first_moment[i] + (1.0 - opt.beta1) * g;
        opt.second_moment[i] = opt.beta2 * opt.second_moment[i] + (1.0 - opt.beta2) * g * g;
        const double mhat = opt.first_moment[i] / bc1;
        const double vhat = opt.second_moment[i] / bc2;
        model.params[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.epsilon);
    }
}

double grad_check(const ModelState& model, std::span<const Example> batch, const TaskKind& task,
                  double step) {
    if (!(step > 0.0)) throw ConfigError("grad_check: step must be positive");
    const GradientVector analytic = loss_and_grad(model, batch, task).grad;
    ModelState probe = model;
    double worst = 0.0;
    for (std::size_t i = 0; i < probe.params.size(); ++i) {
        const double orig = probe.params[i];
        probe.params[i] = orig + step;
        const double up = batch_loss(probe, batch, task);
        probe.params[i] = orig - step;
        const double down = batch_loss(probe, batch, task);
        probe.params[i] = orig;
        const double numeric = (up - down) / (2.0 * step);
        const double err = std::abs(analytic.values[i] - numeric) /
                           (std::abs(analytic.values[i]) + step);
        worst = std::max(worst, err);
    }
    return worst;
}

} // namespace driftbench
