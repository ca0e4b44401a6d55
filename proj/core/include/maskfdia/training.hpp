#pragma once

#include "maskfdia/data.hpp"
#include "maskfdia/masking.hpp"
#include "maskfdia/model.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace maskfdia {

struct TrainConfig {
    std::size_t epochs = 200;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    std::size_t T = 19;
    std::uint64_t seed = 0;
    Formulation formulation = Formulation::masked;
    FillPolicy fill_policy = FillPolicy::uniform_random;
    /// Maskable channel indices; empty means every channel.
    std::vector<std::size_t> maskable;
    bool shuffle = true;
    /// Hidden widths; for auto_associative the encoder widths (mirrored).
    std::vector<std::size_t> hidden = {64};
    std::size_t stride = 1;
    /// Cap on validation windows (evenly spaced); 0 keeps all of them.
    std::size_t max_validation_windows = 0;
};

/// Throws ConfigError naming the first invalid field.
void validate(const TrainConfig& config);

struct TrainReport {
    std::vector<double> train_loss;       // per epoch, mean over mini-batches
    std::vector<double> validation_loss;  // per epoch
    double wall_clock_seconds = 0.0;
    std::string checkpoint_path;
    std::size_t optimizer_steps = 0;
    /// FNV-1a digest of the order in which training windows were consumed.
    std::uint64_t window_stream_digest = 0;
};

/// Report as JSON. Wall-clock time is omitted unless requested so the
/// document is a pure function of (data, config, seed).
nlohmann::json to_json(const TrainReport& report, bool include_timing = false);

struct TrainResult {
    SequenceModel model;
    TrainReport report;
};

/// Builds an untrained model of the configured formulation, initialized from the run seed.
SequenceModel make_model(std::size_t n_channels, const TrainConfig& config);

/// Masked training loop. Per mini-batch a mask size c_m is drawn once; every
/// sequence then gets its own c_m masked channels, filled per the configured
/// policy, and the loss covers the masked channels only. Validation uses one
/// fixed seeded mask per window so epochs are comparable.
///
/// Both datasets are scaled; `train.channel_stats` (scaled, training portion)
/// supply the fill ranges and are computed when absent. Non-finite losses
/// abort with NumericError naming epoch, batch and mask.
TrainResult train_masked(const TimeSeriesDataset& train, const TimeSeriesDataset& validation, const TrainConfig& config);

/// auto_regressive: first T rows -> row T, loss on all channels.
/// auto_associative: row T -> row T through the bottleneck, loss on all channels.
/// Window order matches train_masked for the same seed.
TrainResult train_baseline(const TimeSeriesDataset& train, const TimeSeriesDataset& validation, const TrainConfig& config);

/// Dispatches on config.formulation.
TrainResult train_model(const TimeSeriesDataset& train, const TimeSeriesDataset& validation, const TrainConfig& config);

/// One assembled masked mini-batch.
struct MaskedBatch {
    Tensor input;      // batch x input_width
    Tensor target;     // batch x (T+1)*n_maskable
    Tensor selection;  // 1 where the cell belongs to a masked channel
    std::vector<std::vector<std::size_t>> masks;
};

MaskedBatch assemble_masked_batch(const SequenceModel& model, const TimeSeriesDataset& data,
                                  std::span<const std::size_t> window_starts, std::size_t mask_count,
                                  FillPolicy policy, std::span<const ChannelStats> stats, Rng& rng);

/// Masked loss and its gradient for every model parameter.
std::vector<Tensor> masked_batch_gradients(const SequenceModel& model, const MaskedBatch& batch, double& loss);

}  // namespace maskfdia
