#pragma once

#include "maskfdia/data.hpp"
#include "maskfdia/faults.hpp"
#include "maskfdia/fdia.hpp"
#include "maskfdia/metrics.hpp"
#include "maskfdia/model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace maskfdia {

/// Per-window detection scores for `channel` over a scaled series.
///
///   masked            r^i from the masked engine (channel masked, window mean |error|)
///   auto_regressive   |prediction error| of the last row from the T rows before it
///   auto_associative  |reconstruction error| of the last row
///
/// The baselines score one timestep, the one the window's verdict belongs to.
///
/// A window is labelled positive iff it overlaps a faulted cell of `channel`.
std::vector<ScoredSample> window_scores(const SequenceModel& model, const TimeSeriesDataset& series,
                                        const FaultLabels& labels, std::size_t channel,
                                        std::span<const ChannelStats> train_stats, const FdiaOptions& options = {},
                                        std::size_t stride = 1);

struct MethodUnderTest {
    std::string method;
    const SequenceModel* model = nullptr;
};

struct DetectionResult {
    std::string method;
    std::size_t channel = 0;
    double roc_auc = 0.0;
    double auprc = 0.0;
    std::vector<ScoredSample> samples;
};

/// Injects `scenario` into the clean scaled series (std from `train_stats`;
/// absolute-unit faults must already be in scaled units, see to_scaled_units)
/// and scores every method on every target channel. All methods must share
/// the series' channel layout and window length.
std::vector<DetectionResult> detection_benchmark(std::span<const MethodUnderTest> methods,
                                                 const TimeSeriesDataset& clean_scaled, const FaultScenario& scenario,
                                                 std::span<const ChannelStats> train_stats,
                                                 const FdiaOptions& options = {}, std::size_t stride = 1);

/// Fixed linear map from n sensor channels (raw units) to m derived outputs.
struct DownstreamPipeline {
    Tensor weights;  // m x n
    std::vector<double> offset;

    std::size_t n_outputs() const { return weights.rows(); }
    std::size_t n_inputs() const { return weights.cols(); }

    /// Unit-magnitude entries with random signs, so every output depends on
    /// every sensor equally; redrawn until the map has full row rank.
    static DownstreamPipeline random(std::size_t n_inputs, std::size_t n_outputs, std::uint64_t seed);

    /// samples (N x n) -> outputs (N x m).
    Tensor apply(const Tensor& samples) const;
};

struct AccommodationRow {
    std::size_t output = 0;
    double mse_no_fault = 0.0;
    double mse_fault_no_fdia = 0.0;
    double mse_fault_with_fdia = 0.0;
};

struct AccommodationResult {
    std::vector<AccommodationRow> rows;
    std::size_t flagged_steps = 0;
    std::size_t alarm_steps = 0;
};

/// Three arms through the same pipeline, scored against ground-truth outputs
/// (pipeline of the clean data plus Gaussian noise of `truth_noise_std`):
/// clean data, faulted data as is, and faulted data after FDIA streaming.
/// Absolute-unit faults are in raw units and converted through `scaler`.
AccommodationResult accommodation_benchmark(const FdiaEngine& engine, const Thresholds& thresholds,
                                            const DownstreamPipeline& pipeline, const TimeSeriesDataset& clean_raw,
                                            const Scaler& scaler, const FaultScenario& scenario,
                                            double truth_noise_std, std::uint64_t seed);

struct LatencyResult {
    double mean_ms = 0.0;
    double p95_ms = 0.0;
    double max_ms = 0.0;
    std::size_t repetitions = 0;
    /// Forward passes per fdia step (first pass only).
    std::uint64_t passes_count = 0;
    double budget_ms = 40.0;
    bool within_budget = false;
};

inline constexpr double kLatencyBudgetMs = 40.0;

/// Wall-clock of full fdia steps cycling over `windows`.
LatencyResult latency_benchmark(const FdiaEngine& engine, const Thresholds& thresholds,
                                std::span<const Window> windows, std::size_t repetitions = 600,
                                double budget_ms = kLatencyBudgetMs);
/// Same on random in-range windows for the engine's model.
LatencyResult latency_benchmark(const FdiaEngine& engine, std::size_t repetitions = 600,
                                double budget_ms = kLatencyBudgetMs, std::uint64_t seed = 0);

}  // namespace maskfdia
