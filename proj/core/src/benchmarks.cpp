#include "maskfdia/eval.hpp"

#include "maskfdia/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace maskfdia {
namespace {

constexpr std::size_t kChunk = 256;

std::vector<double> scaled_std(std::span<const ChannelStats> stats) {
    std::vector<double> out;
    for (const auto& s : stats) out.push_back(s.std);
    return out;
}

}  // namespace

std::vector<ScoredSample> window_scores(const SequenceModel& model, const TimeSeriesDataset& series,
                                        const FaultLabels& labels, std::size_t channel,
                                        std::span<const ChannelStats> train_stats, const FdiaOptions& options,
                                        std::size_t stride) {
    const std::size_t T = model.window_T();
    const std::size_t n = series.n_channels();
    if (n != model.n_channels()) throw UsageError("window_scores: series/model channel mismatch");
    if (channel >= n) throw UsageError("window_scores: channel out of range");
    if (labels.length != series.length() || labels.n_channels != n) throw DimensionError("window_scores: label shape");
    const std::size_t count = window_count(series.length(), T, stride);
    if (count == 0) throw UsageError("window_scores: series shorter than one window");

    std::vector<ScoredSample> out(count);
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t s = w * stride;
        out[w].label = labels.any_in(channel, s, s + T + 1) ? 1 : 0;
    }

    switch (model.formulation()) {
        case Formulation::masked: {
            const FdiaEngine engine(model, {train_stats.begin(), train_stats.end()}, options);
            for (std::size_t w = 0; w < count; ++w) out[w].score = engine.score_window(window_at(series, w * stride, T), channel);
            break;
        }
        case Formulation::auto_regressive: {
            for (std::size_t b = 0; b < count; b += kChunk) {
                const std::size_t e = std::min(count, b + kChunk);
                Tensor input = Tensor::matrix(e - b, T * n);
                for (std::size_t w = b; w < e; ++w) {
                    const double* first = series.samples.data() + w * stride * n;
                    std::copy(first, first + T * n, input.row(w - b).begin());
                }
                const Tensor pred = model.forward(input);
                for (std::size_t w = b; w < e; ++w) {
                    out[w].score = std::abs(pred(w - b, channel) - series.at(w * stride + T, channel));
                }
            }
            break;
        }
        case Formulation::auto_associative: {
            for (std::size_t b = 0; b < count; b += kChunk) {
                const std::size_t e = std::min(count, b + kChunk);
                Tensor rows = Tensor::matrix(e - b, n);
                for (std::size_t w = b; w < e; ++w) {
                    const auto last = series.samples.row(w * stride + T);
                    std::copy(last.begin(), last.end(), rows.row(w - b).begin());
                }
                const Tensor rec = model.autoencode(rows);
                for (std::size_t w = b; w < e; ++w) {
                    out[w].score = std::abs(rec(w - b, channel) - series.at(w * stride + T, channel));
                }
            }
            break;
        }
    }
    return out;
}

std::vector<DetectionResult> detection_benchmark(std::span<const MethodUnderTest> methods,
                                                 const TimeSeriesDataset& clean_scaled, const FaultScenario& scenario,
                                                 std::span<const ChannelStats> train_stats, const FdiaOptions& options,
                                                 std::size_t stride) {
    if (train_stats.size() != clean_scaled.n_channels()) {
        throw UsageError("detection_benchmark: stats do not match the dataset's channels");
    }
    for (const auto& f : scenario.faults) {
        for (std::size_t c : f.targets) {
            if (c >= clean_scaled.n_channels()) throw UsageError("detection_benchmark: scenario channel not in dataset");
        }
    }
    const auto stds = scaled_std(train_stats);
    const FaultedSeries faulted = inject_scenario(clean_scaled, scenario, stds);
    std::vector<DetectionResult> results;
    for (const auto& m : methods) {
        if (m.model == nullptr) throw UsageError("detection_benchmark: null model for " + m.method);
        for (std::size_t channel : scenario.target_channels()) {
            if (m.model->formulation() == Formulation::masked && !m.model->maskable().contains(channel)) {
                throw UsageError("detection_benchmark: channel " + std::to_string(channel) +
                                 " is not maskable in the " + m.method + " model");
            }
            DetectionResult r;
            r.method = m.method;
            r.channel = channel;
            r.samples = window_scores(*m.model, faulted.series, faulted.labels, channel, train_stats, options, stride);
            r.roc_auc = roc_auc(r.samples);
            r.auprc = auprc(r.samples);
            results.push_back(std::move(r));
        }
    }
    return results;
}

namespace {

bool full_row_rank(Tensor a) {
    const std::size_t rows = a.rows();
    const std::size_t cols = a.cols();
    std::size_t rank = 0;
    for (std::size_t c = 0; c < cols && rank < rows; ++c) {
        std::size_t pivot = rank;
        for (std::size_t r = rank + 1; r < rows; ++r) {
            if (std::abs(a(r, c)) > std::abs(a(pivot, c))) pivot = r;
        }
        if (std::abs(a(pivot, c)) < 1e-9) continue;
        for (std::size_t k = 0; k < cols; ++k) std::swap(a(pivot, k), a(rank, k));
        for (std::size_t r = rank + 1; r < rows; ++r) {
            const double f = a(r, c) / a(rank, c);
            for (std::size_t k = c; k < cols; ++k) a(r, k) -= f * a(rank, k);
        }
        ++rank;
    }
    return rank == rows;
}

}  // namespace

DownstreamPipeline DownstreamPipeline::random(std::size_t n_inputs, std::size_t n_outputs, std::uint64_t seed) {
    if (n_inputs == 0 || n_outputs == 0) throw UsageError("pipeline: sizes must be positive");
    if (n_outputs > n_inputs) throw UsageError("pipeline: more outputs than inputs cannot have full row rank");
    Rng rng(seed);
    DownstreamPipeline p;
    p.weights = Tensor::matrix(n_outputs, n_inputs);
    do {
        for (double& w : p.weights.values()) w = rng.uniform() < 0.5 ? -1.0 : 1.0;
    } while (!full_row_rank(p.weights));
    p.offset.resize(n_outputs);
    for (double& o : p.offset) o = rng.uniform(-1.0, 1.0);
    return p;
}

Tensor DownstreamPipeline::apply(const Tensor& samples) const {
    if (samples.cols() != n_inputs()) throw DimensionError("pipeline: input width mismatch");
    Tensor out = Tensor::matrix(samples.rows(), n_outputs());
    for (std::size_t t = 0; t < samples.rows(); ++t) {
        for (std::size_t o = 0; o < n_outputs(); ++o) {
            double acc = offset[o];
            for (std::size_t i = 0; i < n_inputs(); ++i) acc += weights(o, i) * samples(t, i);
            out(t, o) = acc;
        }
    }
    return out;
}

AccommodationResult accommodation_benchmark(const FdiaEngine& engine, const Thresholds& thresholds,
                                            const DownstreamPipeline& pipeline, const TimeSeriesDataset& clean_raw,
                                            const Scaler& scaler, const FaultScenario& scenario,
                                            double truth_noise_std, std::uint64_t seed) {
    if (pipeline.n_inputs() != clean_raw.n_channels()) throw UsageError("accommodation: pipeline/data channel mismatch");
    const std::size_t N = clean_raw.length();
    const std::size_t m = pipeline.n_outputs();

    Tensor truth = pipeline.apply(clean_raw.samples);
    Rng noise(seed);
    for (double& v : truth.values()) v += truth_noise_std * noise.normal();

    const TimeSeriesDataset clean_scaled = scaler.transform(clean_raw);
    const FaultedSeries faulted =
        inject_scenario(clean_scaled, to_scaled_units(scenario, scaler), scaled_std(engine.train_stats()));
    const TimeSeriesDataset faulted_raw = scaler.inverse(faulted.series);
    const StreamVerdict verdict = engine.stream(faulted.series, thresholds);
    TimeSeriesDataset accommodated = faulted.series;
    accommodated.samples = verdict.accommodated;
    const TimeSeriesDataset accommodated_raw = scaler.inverse(accommodated);

    const Tensor arm_clean = pipeline.apply(clean_raw.samples);
    const Tensor arm_faulted = pipeline.apply(faulted_raw.samples);
    const Tensor arm_fdia = pipeline.apply(accommodated_raw.samples);

    AccommodationResult result;
    for (std::size_t o = 0; o < m; ++o) {
        AccommodationRow row;
        row.output = o;
        for (std::size_t t = 0; t < N; ++t) {
            const double y = truth(t, o);
            row.mse_no_fault += (arm_clean(t, o) - y) * (arm_clean(t, o) - y);
            row.mse_fault_no_fdia += (arm_faulted(t, o) - y) * (arm_faulted(t, o) - y);
            row.mse_fault_with_fdia += (arm_fdia(t, o) - y) * (arm_fdia(t, o) - y);
        }
        row.mse_no_fault /= static_cast<double>(N);
        row.mse_fault_no_fdia /= static_cast<double>(N);
        row.mse_fault_with_fdia /= static_cast<double>(N);
        result.rows.push_back(row);
    }
    for (std::size_t s = 0; s < verdict.steps(); ++s) {
        bool any = false;
        for (std::size_t p = 0; p < verdict.channels.size(); ++p) any = any || verdict.flagged(s, p);
        result.flagged_steps += any ? 1 : 0;
    }
    result.alarm_steps = verdict.alarm_count();
    return result;
}

LatencyResult latency_benchmark(const FdiaEngine& engine, const Thresholds& thresholds,
                                std::span<const Window> windows, std::size_t repetitions, double budget_ms) {
    if (windows.empty()) throw UsageError("latency_benchmark: no windows");
    if (repetitions == 0) throw UsageError("latency_benchmark: repetitions must be positive");
    std::vector<double> times_ms;
    times_ms.reserve(repetitions);
    const std::uint64_t passes_before = engine.first_pass_forwards();
    std::size_t flags = 0;
    for (std::size_t r = 0; r < repetitions; ++r) {
        const Window& w = windows[r % windows.size()];
        const auto t0 = std::chrono::steady_clock::now();
        const FdiaResult result = engine.step(w, thresholds);
        const auto t1 = std::chrono::steady_clock::now();
        flags += result.flags.size();
        times_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    LatencyResult out;
    out.repetitions = repetitions;
    out.passes_count = (engine.first_pass_forwards() - passes_before) / repetitions;
    double sum = 0.0;
    for (double t : times_ms) sum += t;
    out.mean_ms = sum / static_cast<double>(repetitions);
    std::sort(times_ms.begin(), times_ms.end());
    out.p95_ms = times_ms[std::min(times_ms.size() - 1, static_cast<std::size_t>(std::ceil(0.95 * repetitions)) - 1)];
    out.max_ms = times_ms.back();
    out.budget_ms = budget_ms;
    out.within_budget = out.mean_ms < budget_ms;
    (void)flags;
    return out;
}

LatencyResult latency_benchmark(const FdiaEngine& engine, std::size_t repetitions, double budget_ms,
                                std::uint64_t seed) {
    const SequenceModel& model = engine.model();
    Rng rng(seed);
    std::vector<Window> windows;
    for (std::size_t k = 0; k < 16; ++k) {
        Window w{Tensor::matrix(model.window_T() + 1, model.n_channels()), k};
        for (double& v : w.values.values()) v = rng.uniform();
        windows.push_back(std::move(w));
    }
    Thresholds th;
    th.values.assign(model.n_maskable(), 0.25);
    return latency_benchmark(engine, th, windows, repetitions, budget_ms);
}

}  // namespace maskfdia
