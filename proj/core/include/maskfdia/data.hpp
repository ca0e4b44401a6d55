#pragma once

#include "maskfdia/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace maskfdia {

struct ChannelStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std = 0.0;
};

/// Half-open index range [begin, end).
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end > begin ? end - begin : 0; }
    bool empty() const { return size() == 0; }
};

/// n-channel, length-N sequence of sensor samples in time order.
struct TimeSeriesDataset {
    std::vector<std::string> channel_names;
    Tensor samples;  // N x n
    double sample_rate_hz = 1.0;
    /// Statistics of the training portion; empty until computed.
    std::vector<ChannelStats> channel_stats;

    std::size_t length() const { return samples.rows(); }
    std::size_t n_channels() const { return samples.cols(); }
    double at(std::size_t t, std::size_t channel) const { return samples(t, channel); }

    /// Index of a channel by name; throws UsageError when absent.
    std::size_t channel_index(const std::string& name) const;
    TimeSeriesDataset slice(IndexRange range) const;
};

/// Per-channel min/max/mean/population-std over `range`.
std::vector<ChannelStats> compute_channel_stats(const TimeSeriesDataset& dataset, IndexRange range);

/// Column selection for CSV ingestion. With no explicit channel list every
/// non-timestamp column is taken (minus excluded prefixes).
struct CsvSchema {
    std::optional<std::vector<std::string>> channels;
    std::vector<std::string> exclude_prefixes;
};

/// Reads a header-first CSV (',' or ';' separated). A leading "time" or
/// "timestamp" column is dropped from the channels and used to infer the
/// sample rate. Missing or non-numeric cells, ragged rows and fewer than two
/// channels raise IngestionError naming the row/column.
TimeSeriesDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Writes the ingestion format: "time" column (sample index / rate) followed
/// by channels, reals in shortest round-trip form.
void write_csv(const TimeSeriesDataset& dataset, const std::filesystem::path& path);
std::string to_csv_string(const TimeSeriesDataset& dataset);

/// Per-channel affine map of [min, max] onto [0, 1]. Values outside the fitted
/// range are not clipped. A constant channel maps to 0.5.
class Scaler {
public:
    Scaler() = default;
    Scaler(std::vector<double> mins, std::vector<double> maxs);

    static Scaler fit(const TimeSeriesDataset& dataset, IndexRange fit_range);

    double transform(double value, std::size_t channel) const;
    double inverse(double scaled, std::size_t channel) const;
    TimeSeriesDataset transform(const TimeSeriesDataset& dataset) const;
    TimeSeriesDataset inverse(const TimeSeriesDataset& dataset) const;
    void transform_row(std::span<double> row) const;
    void inverse_row(std::span<double> row) const;

    std::size_t n_channels() const { return mins_.size(); }
    const std::vector<double>& mins() const { return mins_; }
    const std::vector<double>& maxs() const { return maxs_; }
    /// Width of the fitted range (0 for a degenerate channel).
    double span_of(std::size_t channel) const { return maxs_[channel] - mins_[channel]; }

private:
    std::vector<double> mins_;
    std::vector<double> maxs_;
};

/// First floor(train_fraction * N) samples go to the first part, the rest to
/// the second. Both parts must hold at least `min_part_length` samples.
std::pair<TimeSeriesDataset, TimeSeriesDataset> chronological_split(const TimeSeriesDataset& dataset,
                                                                    double train_fraction,
                                                                    std::size_t min_part_length = 1);

/// (T+1) x n slice of consecutive samples.
struct Window {
    Tensor values;
    std::size_t start_index = 0;

    std::size_t length() const { return values.rows(); }
    std::size_t n_channels() const { return values.cols(); }
    std::size_t last_index() const { return start_index + length() - 1; }
};

std::size_t window_count(std::size_t length, std::size_t T, std::size_t stride);
Window window_at(const TimeSeriesDataset& dataset, std::size_t start, std::size_t T);
/// Windows of T+1 rows starting at 0, stride, 2*stride, ...
std::vector<Window> windows(const TimeSeriesDataset& dataset, std::size_t T, std::size_t stride = 1);

/// Keeps every factor-th sample; the sample rate is divided by factor.
TimeSeriesDataset downsample(const TimeSeriesDataset& dataset, std::size_t factor);

struct PlantConfig {
    std::size_t n_channels = 8;
    std::size_t length = 20000;
    std::uint64_t seed = 0;
    /// Variance share of the shared plant modes in every channel.
    /// 1 = channels are exact linear mixes of the modes (rank shared_modes),
    /// 0 = every channel follows its own independent signal.
    double coupling_strength = 0.85;
    double noise_std = 0.02;
    std::size_t shared_modes = 1;
    double sample_rate_hz = 1.0;
};

/// Deterministic correlated plant. Each channel mixes slow shared modes
/// (sums of sinusoids, periods 25 to 500 samples) through a random Gaussian
/// coupling matrix with a private part (slow sinusoids plus a fast broadband
/// disturbance), then gets a random offset and Gaussian noise. Each channel's
/// noiseless part has unit standard deviation.
TimeSeriesDataset synthesize_plant(const PlantConfig& config);

}  // namespace maskfdia
