#include "maskfdia/fdia.hpp"
#include "maskfdia/model.hpp"
#include "maskfdia/numerics.hpp"
#include "maskfdia/training.hpp"

#include <benchmark/benchmark.h>

using namespace maskfdia;

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng) {
    Tensor t = Tensor::matrix(rows, cols);
    for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
    return t;
}

Window random_window(std::size_t T, std::size_t n, Rng& rng) { return {random_tensor(T + 1, n, rng), 0}; }

void BM_dense_forward(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    const Tensor x = random_tensor(batch, 480, rng);
    const Tensor w = random_tensor(480, 64, rng);
    const Tensor b({64}, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(dense_forward(x, w, b));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_dense_forward)->Arg(1)->Arg(12)->Arg(64)->Arg(256);

// One full fdia step: n_maskable first-pass predictions plus the verdict.
void BM_fdia_step(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto T = static_cast<std::size_t>(state.range(1));
    Rng rng(2);
    SequenceModel model = build_masked_model(n, n, T, {64});
    model.initialize(rng);
    const FdiaEngine engine(std::move(model), std::vector<ChannelStats>(n, {0.0, 1.0, 0.5, 0.25}));
    Thresholds th;
    th.values.assign(n, 0.25);
    const Window w = random_window(T, n, rng);
    for (auto _ : state) benchmark::DoNotOptimize(engine.step(w, th));
}
BENCHMARK(BM_fdia_step)->Args({8, 19})->Args({12, 10})->Unit(benchmark::kMicrosecond);

void BM_masked_training_step(benchmark::State& state) {
    const std::size_t n = 8, T = 19, batch = 64;
    Rng rng(3);
    SequenceModel model = build_masked_model(n, n, T, {64});
    model.initialize(rng);
    TimeSeriesDataset data;
    data.channel_names.assign(n, "c");
    data.samples = random_tensor(2000, n, rng);
    const auto stats = compute_channel_stats(data, {0, data.length()});
    std::vector<std::size_t> starts(batch);
    for (std::size_t i = 0; i < batch; ++i) starts[i] = i * 17;
    std::vector<AdamState> adam;
    for (const auto& p : model.parameters()) adam.push_back(AdamState::for_parameter(p));
    for (auto _ : state) {
        const MaskedBatch mb =
            assemble_masked_batch(model, data, starts, 1, FillPolicy::uniform_random, stats, rng);
        double loss = 0.0;
        auto grads = masked_batch_gradients(model, mb, loss);
        for (std::size_t k = 0; k < grads.size(); ++k) adam_step(model.parameters()[k], grads[k], adam[k]);
        benchmark::DoNotOptimize(loss);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_masked_training_step)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
