#pragma once

#include "maskfdia/data.hpp"
#include "maskfdia/fdia.hpp"
#include "maskfdia/training.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace maskfdia::cli {

struct DataSection {
    std::string path;
    std::optional<std::vector<std::string>> channels;  // nullopt = infer from header
    std::vector<std::string> exclude_prefixes;
    double train_fraction = 0.8;
    double validation_fraction = 0.1;
    std::size_t T = 19;
    std::size_t downsample = 1;
};

struct ModelSection {
    Formulation formulation = Formulation::masked;
    std::vector<std::size_t> hidden = {64};
    std::optional<std::vector<std::string>> maskable;  // nullopt = every channel
};

struct FdiaSection {
    ThresholdMethod threshold_method = ThresholdMethod::mean_std;
    double k = 4.0;
    double quantile = 0.999;
    FillPolicy fill_policy = FillPolicy::channel_mean;
    std::size_t max_iterations = 2;
    std::uint64_t fill_seed = 0;
};

struct BenchSection {
    std::size_t pipeline_outputs = 4;
    double truth_noise_std = 0.85;
    std::size_t repetitions = 600;
    std::size_t latency_channels = 12;
    std::size_t latency_T = 10;
    double budget_ms = 40.0;
};

struct RunConfig {
    std::uint64_t seed = 0;
    DataSection data;
    ModelSection model;
    TrainConfig train;
    FdiaSection fdia;
    nlohmann::json scenario;  // null, a path string or an inline scenario object
    PlantConfig synth;
    BenchSection bench;
    std::string output_dir = "runs/default";

    /// Fully resolved config with every default spelled out.
    nlohmann::json echo;
};

/// Reads a JSON config file. A missing file is a ConfigError naming the path.
nlohmann::json read_config_file(const std::filesystem::path& path);

/// Sets `dotted.path` to `value`, parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& config, const std::string& dotted_path, const std::string& value);

/// Validates every field and resolves defaults. Unknown keys, wrong types and
/// out-of-range values raise ConfigError naming the field path. `seed`
/// replaces the config's seed when present.
RunConfig resolve_config(const nlohmann::json& config, std::optional<std::uint64_t> seed = std::nullopt);

/// Seed override from MASKFDIA_SEED, if set. Throws ConfigError when malformed.
std::optional<std::uint64_t> seed_from_environment();

/// Maskable channel indices for `channel_names`.
std::vector<std::size_t> maskable_indices(const ModelSection& model, const std::vector<std::string>& channel_names);

/// Train config with the model/data sections folded in.
TrainConfig train_config(const RunConfig& config, const std::vector<std::string>& channel_names);

}  // namespace maskfdia::cli
