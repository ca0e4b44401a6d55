#pragma once

#include "maskfdia/data.hpp"
#include "maskfdia/fdia.hpp"
#include "maskfdia/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace maskfdia {

inline constexpr int kCheckpointFormatVersion = 1;

/// Everything needed to run a trained model on new raw data.
struct Checkpoint {
    SequenceModel model;
    std::vector<std::string> channel_names;
    Scaler scaler;
    std::vector<ChannelStats> train_stats;  // scaled space, training portion
    std::optional<Thresholds> thresholds;
    nlohmann::json config = nlohmann::json::object();  // config echo
    std::uint64_t seed = 0;
};

enum class CheckpointEncoding { binary, text };

/// Binary layout:
///   "MASKFDIA-CHECKPOINT <version> binary\n"
///   "<header byte count>\n"
///   <header JSON>"\n"
///   parameters as little-endian IEEE-754 float64, in declaration order
/// The text variant replaces the last three parts by one JSON document whose
/// "parameters" member holds the arrays as decimal lists.
std::string serialize_checkpoint(const Checkpoint& checkpoint, CheckpointEncoding encoding = CheckpointEncoding::binary);
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path,
                     CheckpointEncoding encoding = CheckpointEncoding::binary);
/// Throws CheckpointError on a missing, truncated or corrupt file or a version mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws CheckpointError unless `dataset` has the checkpoint's channels, in order.
void check_compatible(const Checkpoint& checkpoint, const TimeSeriesDataset& dataset);

nlohmann::json to_json(const Thresholds& thresholds);
Thresholds thresholds_from_json(const nlohmann::json& j);

}  // namespace maskfdia
