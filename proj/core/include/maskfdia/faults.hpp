#pragma once

#include "maskfdia/data.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace maskfdia {

enum class FaultKind { bias, drift, noise, multi_bias };
enum class FaultUnit { std_dev, absolute };

std::string to_string(FaultKind kind);
FaultKind fault_kind_from_string(const std::string& name);

struct FaultSpec {
    FaultKind kind = FaultKind::bias;
    std::vector<std::size_t> targets;  // channel indices
    /// In multiples of each target's training std, or raw units for FaultUnit::absolute.
    double magnitude = 1.0;
    FaultUnit unit = FaultUnit::std_dev;
    std::size_t start_index = 0;
    std::size_t end_index = 0;  // exclusive
    std::uint64_t seed = 0;     // noise only
};

/// Cell-level ground truth: 1 where a fault was injected.
struct FaultLabels {
    std::size_t length = 0;
    std::size_t n_channels = 0;
    std::vector<std::uint8_t> cells;  // length x n_channels

    FaultLabels() = default;
    FaultLabels(std::size_t len, std::size_t n) : length(len), n_channels(n), cells(len * n, 0) {}
    bool at(std::size_t t, std::size_t c) const { return cells[t * n_channels + c] != 0; }
    void mark(std::size_t t, std::size_t c) { cells[t * n_channels + c] = 1; }
    bool any_in(std::size_t channel, std::size_t begin, std::size_t end) const;
    bool any_channel() const;
};

struct FaultedSeries {
    TimeSeriesDataset series;
    FaultLabels labels;
};

/// x[t][i] += magnitude * std_i over [start, end).
FaultedSeries inject_bias(const TimeSeriesDataset& series, const FaultSpec& spec, std::span<const double> channel_std);
/// Linear ramp from 0 at start to magnitude * std_i at end - 1.
FaultedSeries inject_drift(const TimeSeriesDataset& series, const FaultSpec& spec, std::span<const double> channel_std);
/// Additive i.i.d. Gaussian noise with std magnitude * std_i, seeded.
FaultedSeries inject_noise(const TimeSeriesDataset& series, const FaultSpec& spec, std::span<const double> channel_std);
/// Independent bias on two or more targets over the same interval.
FaultedSeries inject_multi_bias(const TimeSeriesDataset& series, const FaultSpec& spec,
                                std::span<const double> channel_std);
/// Dispatches on spec.kind.
FaultedSeries inject(const TimeSeriesDataset& series, const FaultSpec& spec, std::span<const double> channel_std);

/// Named list of faults applied together.
struct FaultScenario {
    std::string label;
    std::vector<FaultSpec> faults;

    /// Union of all target channels, ascending.
    std::vector<std::size_t> target_channels() const;
};

/// Applies every fault in order. A channel may be targeted by one fault only.
FaultedSeries inject_scenario(const TimeSeriesDataset& series, const FaultScenario& scenario,
                              std::span<const double> channel_std);

/// Rewrites absolute-unit magnitudes into the scaled space of `scaler`
/// (magnitude / span). Absolute multi-target faults become one bias per target.
FaultScenario to_scaled_units(const FaultScenario& scenario, const Scaler& scaler);

/// Parses {"label": ..., "faults": [{"kind", "targets", "magnitude", "unit",
/// "start", "end", "seed"}]}. Targets may be channel names or indices;
/// start and end are mandatory. Throws ConfigError with the field path.
FaultScenario scenario_from_json(const nlohmann::json& j, const std::vector<std::string>& channel_names);
FaultScenario load_scenario(const std::filesystem::path& path, const std::vector<std::string>& channel_names);
nlohmann::json to_json(const FaultScenario& scenario, const std::vector<std::string>& channel_names);

}  // namespace maskfdia
