#pragma once

#include "maskfdia/data.hpp"
#include "maskfdia/masking.hpp"
#include "maskfdia/model.hpp"

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace maskfdia {

enum class ThresholdMethod { mean_std, quantile };

std::string to_string(ThresholdMethod method);
ThresholdMethod threshold_method_from_string(const std::string& name);

/// Per-maskable-channel residual cutoffs th^i in scaled units.
struct Thresholds {
    std::vector<double> values;  // indexed by maskable position
    ThresholdMethod method = ThresholdMethod::mean_std;
    double k = 4.0;
    double quantile = 0.999;
    std::vector<double> residual_mean;
    std::vector<double> residual_std;
    std::size_t window_count = 0;
};

/// Smallest threshold ever emitted; keeps th^i > 0 when validation residuals are all zero.
inline constexpr double kMinThreshold = 1e-12;

/// Builds thresholds from a windows x n_maskable residual table.
/// mean_std: th = mean + k * std (population std). quantile: empirical
/// q-quantile with linear interpolation.
Thresholds thresholds_from_residuals(const std::vector<std::vector<double>>& residuals, ThresholdMethod method,
                                     double k = 4.0, double quantile = 0.999);

/// Mean absolute difference between a predicted and a measured channel trace.
double window_residual(std::span<const double> predicted, std::span<const double> measured);

struct FdiaOptions {
    FillPolicy fill_policy = FillPolicy::channel_mean;
    std::size_t max_iterations = 2;
    std::uint64_t fill_seed = 0;  // only used by uniform_random
};

struct FdiaResult {
    std::vector<double> residuals;        // r^i per maskable position
    std::vector<std::size_t> flags;       // dataset channel indices with r^i > th^i, ascending
    Tensor accommodated;                  // (T+1) x n, flagged channels replaced by predictions
    bool alarm = false;                   // too many flags: accommodation is reported but untrusted
    std::size_t iterations_used = 1;
};

/// Per-step verdicts of a streamed series. Step s covers the window ending at times[s].
struct StreamVerdict {
    std::vector<std::size_t> channels;    // maskable channel indices
    std::vector<std::size_t> times;
    Tensor residuals;                     // steps x n_maskable
    std::vector<std::uint8_t> flags;      // steps x n_maskable
    std::vector<std::uint8_t> alarms;     // per step
    Tensor accommodated;                  // N x n, scaled units
    std::vector<std::optional<std::size_t>> onsets;  // per maskable position

    std::size_t steps() const { return times.size(); }
    bool flagged(std::size_t step, std::size_t position) const { return flags[step * channels.size() + position] != 0; }
    bool any_alarm() const;
    std::size_t alarm_count() const;
};

/// Online masked-model FDIA over windows of scaled data.
///
/// One first-pass prediction per maskable channel: that channel is masked
/// and reconstructed from the others, and its window-mean absolute residual
/// is compared to th^i. The per-channel passes are evaluated as one batched
/// forward call and merged by channel index. All methods are const and safe to
/// call concurrently.
class FdiaEngine {
public:
    /// `train_stats` are the scaled-space statistics of the training portion
    /// (used for the mask fill values).
    FdiaEngine(SequenceModel model, std::vector<ChannelStats> train_stats, FdiaOptions options = {});

    const SequenceModel& model() const { return model_; }
    const FdiaOptions& options() const { return options_; }
    const std::vector<ChannelStats>& train_stats() const { return stats_; }

    /// Masks `channels` jointly and returns the model reconstruction,
    /// (T+1) x n_maskable.
    Tensor predict_masked(const Window& window, std::span<const std::size_t> channels) const;

    /// r^i for one maskable channel (one forward pass).
    double score_window(const Window& window, std::size_t channel) const;
    /// r^i for every maskable channel (n_maskable forward passes, batched).
    std::vector<double> score_all(const Window& window) const;

    FdiaResult step(const Window& window, const Thresholds& thresholds) const;

    /// Slides windows over `series` (scaled) and attributes each window's
    /// verdict to its last timestep. The accommodated series takes each
    /// sample from the first window that ends at or after it.
    StreamVerdict stream(const TimeSeriesDataset& series, const Thresholds& thresholds, std::size_t stride = 1) const;

    /// Forward passes spent on single-channel first-pass predictions.
    std::uint64_t first_pass_forwards() const { return counters_->first_pass.load(); }
    /// Forward passes spent on joint re-masking of multiple flagged channels.
    std::uint64_t joint_pass_forwards() const { return counters_->joint_pass.load(); }
    void reset_counters() const;

private:
    struct Counters {
        std::atomic<std::uint64_t> first_pass{0};
        std::atomic<std::uint64_t> joint_pass{0};
    };

    void check_window(const Window& window) const;
    /// Batched first pass: returns n_maskable x ((T+1) * n_maskable) predictions.
    Tensor first_pass(const Window& window) const;
    void fill(Tensor& values, std::span<const std::size_t> channels, std::uint64_t salt) const;

    SequenceModel model_;
    std::vector<ChannelStats> stats_;
    FdiaOptions options_;
    std::unique_ptr<Counters> counters_;
};

/// Thresholds from fault-free validation windows. Needs at least 100 windows.
Thresholds calibrate_thresholds(const FdiaEngine& engine, std::span<const Window> validation,
                                ThresholdMethod method = ThresholdMethod::mean_std, double k = 4.0,
                                double quantile = 0.999);

inline constexpr std::size_t kMinCalibrationWindows = 100;

}  // namespace maskfdia
