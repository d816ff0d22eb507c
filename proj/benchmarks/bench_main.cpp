#include <benchmark/benchmark.h>

#include "driftbench/nn.hpp"
#include "driftbench/replay.hpp"
#include "driftbench/streams.hpp"

using namespace driftbench;

namespace {

std::vector<Example> make_batch(Rng& rng, int n, int dim, int classes) {
    std::vector<Example> batch;
    batch.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Example e;
        for (int d = 0; d < dim; ++d) e.x.push_back(rng.normal());
        e.label = static_cast<int>(rng.below(static_cast<std::size_t>(classes)));
        batch.push_back(std::move(e));
    }
    return batch;
}

void BM_forward(benchmark::State& state) {
    Rng rng(1);
    const ModelState m = init_model({16, 64, 10}, {Activation::tanh, Activation::identity}, rng);
    const std::vector<Example> batch = make_batch(rng, 128, 16, 10);
    std::vector<std::vector<double>> inputs;
    for (const Example& e : batch) inputs.push_back(e.x);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(m, inputs));
    }
}
BENCHMARK(BM_forward);

void BM_loss_and_grad(benchmark::State& state) {
    Rng rng(1);
    const ModelState m = init_model({16, 64, 10}, {Activation::tanh, Activation::identity}, rng);
    const std::vector<Example> batch = make_batch(rng, 128, 16, 10);
    const TaskKind task = TaskKind::classification(10);
    for (auto _ : state) {
        benchmark::DoNotOptimize(loss_and_grad(m, batch, task));
    }
}
BENCHMARK(BM_loss_and_grad);

void BM_adam_step(benchmark::State& state) {
    Rng rng(1);
    ModelState m = init_model({16, 64, 10}, {Activation::tanh, Activation::identity}, rng);
    OptimizerState opt = make_optimizer(m.params.size(), 1e-3);
    std::vector<double> g(m.params.size());
    for (double& v : g) v = rng.normal();
    const GradientVector grad = GradientVector::from(std::move(g));
    for (auto _ : state) {
        adam_step(opt, m, grad);
        benchmark::DoNotOptimize(m.params.data());
    }
}
BENCHMARK(BM_adam_step);

void BM_reservoir_offer(benchmark::State& state) {
    Rng rng(1);
    const std::vector<Example> batch = make_batch(rng, 1024, 16, 10);
    ReplayBuffer buffer(256, BufferPolicy::reservoir, 7);
    std::size_t i = 0;
    for (auto _ : state) {
        buffer.offer(batch[i % batch.size()]);
        ++i;
        benchmark::DoNotOptimize(buffer.size());
    }
}
BENCHMARK(BM_reservoir_offer);

void BM_sample_mixed_batch(benchmark::State& state) {
    StreamSpec spec;
    spec.examples_per_phase = 512;
    const std::vector<PhaseDataset> phases = synth_stream(spec);
    ReplayBuffer buffer(256, BufferPolicy::reservoir, 7);
    buffer.ingest_phase(phases[0], 256);
    Rng rng(3);
    const MixConfig mix{0.5, 128};
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_mixed_batch(buffer, phases[1], mix, rng));
    }
}
BENCHMARK(BM_sample_mixed_batch);

void BM_synth_stream(benchmark::State& state) {
    StreamSpec spec;
    spec.examples_per_phase = 640;
    for (auto _ : state) {
        benchmark::DoNotOptimize(synth_stream(spec));
    }
}
BENCHMARK(BM_synth_stream);

} // namespace

BENCHMARK_MAIN();
