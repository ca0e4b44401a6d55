#include "maskfdia/training.hpp"

#include "maskfdia/error.hpp"
#include "maskfdia/numerics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace maskfdia {
namespace {

// Independent RNG streams per concern, so that e.g. a different parameter
// count never shifts the window order.
enum Stream : std::uint64_t { kInit = 1, kShuffle = 2, kMask = 3, kValidation = 4 };

constexpr std::size_t kEvalChunk = 256;

struct Digest {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    void add(std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xFF;
            h *= 0x100000001b3ULL;
        }
    }
};

MaskableChannelSet maskable_for(std::size_t n_channels, const TrainConfig& config) {
    if (config.maskable.empty()) return MaskableChannelSet::all(n_channels);
    return {n_channels, config.maskable};
}

void check_inputs(const TimeSeriesDataset& train, const TimeSeriesDataset& validation, const TrainConfig& config) {
    validate(config);
    if (train.length() < config.T + 1) throw UsageError("training data is shorter than one window");
    if (validation.length() < config.T + 1) throw UsageError("validation data is shorter than one window");
    if (validation.n_channels() != train.n_channels()) throw DimensionError("train/validation channel counts differ");
}

std::vector<std::size_t> validation_starts(const TimeSeriesDataset& validation, const TrainConfig& config) {
    const std::size_t count = window_count(validation.length(), config.T, 1);
    std::vector<std::size_t> starts;
    if (config.max_validation_windows == 0 || count <= config.max_validation_windows) {
        starts.resize(count);
        std::iota(starts.begin(), starts.end(), std::size_t{0});
    } else {
        for (std::size_t k = 0; k < config.max_validation_windows; ++k) {
            starts.push_back(k * count / config.max_validation_windows);
        }
    }
    return starts;
}

class Optimizer {
public:
    Optimizer(const SequenceModel& model, double learning_rate) {
        AdamConfig cfg;
        cfg.learning_rate = learning_rate;
        for (const auto& p : model.parameters()) states_.push_back(AdamState::for_parameter(p, cfg));
    }
    void step(SequenceModel& model, const std::vector<Tensor>& grads) {
        auto& params = model.parameters();
        for (std::size_t k = 0; k < params.size(); ++k) adam_step(params[k], grads[k], states_[k]);
    }

private:
    std::vector<AdamState> states_;
};

std::string mask_string(const std::vector<std::vector<std::size_t>>& masks) {
    std::ostringstream os;
    for (std::size_t b = 0; b < masks.size() && b < 4; ++b) {
        os << (b ? " " : "") << "{";
        for (std::size_t i = 0; i < masks[b].size(); ++i) os << (i ? "," : "") << masks[b][i];
        os << "}";
    }
    if (masks.size() > 4) os << " ...";
    return os.str();
}

// Shuffled window order for one epoch; identical across formulations.
void next_order(std::vector<std::size_t>& order, const TrainConfig& config, Rng& shuffle_rng, Digest& digest) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (config.shuffle) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
    }
    for (std::size_t w : order) digest.add(w);
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void validate(const TrainConfig& config) {
    if (config.batch_size < 1) throw ConfigError("train.batch_size: must be positive");
    if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
        throw ConfigError("train.learning_rate: must be positive");
    }
    if (config.T < 1) throw ConfigError("data.T: must be >= 1");
    if (config.stride < 1) throw ConfigError("train.stride: must be positive");
    if (config.hidden.empty() && config.formulation == Formulation::auto_associative) {
        throw ConfigError("model.hidden: autoencoder needs a bottleneck");
    }
    for (std::size_t h : config.hidden) {
        if (h == 0) throw ConfigError("model.hidden: widths must be positive");
    }
}

nlohmann::json to_json(const TrainReport& report, bool include_timing) {
    nlohmann::json j = {{"train_loss", report.train_loss},
                        {"validation_loss", report.validation_loss},
                        {"optimizer_steps", report.optimizer_steps},
                        {"window_stream_digest", report.window_stream_digest},
                        {"checkpoint_path", report.checkpoint_path}};
    if (include_timing) j["wall_clock_seconds"] = report.wall_clock_seconds;
    return j;
}

SequenceModel make_model(std::size_t n_channels, const TrainConfig& config) {
    validate(config);
    SequenceModel model;
    switch (config.formulation) {
        case Formulation::masked:
            model = build_masked_model(maskable_for(n_channels, config), config.T, config.hidden);
            break;
        case Formulation::auto_regressive:
            model = build_auto_regressive_model(n_channels, config.T, config.hidden);
            break;
        case Formulation::auto_associative:
            model = build_autoencoder(n_channels, config.T, config.hidden);
            break;
    }
    Rng init(derive_seed(config.seed, kInit));
    model.initialize(init);
    return model;
}

MaskedBatch assemble_masked_batch(const SequenceModel& model, const TimeSeriesDataset& data,
                                  std::span<const std::size_t> window_starts, std::size_t mask_count,
                                  FillPolicy policy, std::span<const ChannelStats> stats, Rng& rng) {
    const std::size_t T = model.window_T();
    const std::size_t n = model.n_channels();
    const std::size_t m = model.n_maskable();
    const std::size_t rows = window_starts.size();
    MaskedBatch batch;
    batch.input = Tensor::matrix(rows, model.input_width());
    batch.target = Tensor::matrix(rows, (T + 1) * m);
    batch.selection = Tensor::matrix(rows, (T + 1) * m);
    batch.masks.reserve(rows);
    Tensor filled = Tensor::matrix(T + 1, n);
    for (std::size_t b = 0; b < rows; ++b) {
        const std::size_t start = window_starts[b];
        const double* src = data.samples.data() + start * n;
        std::copy(src, src + (T + 1) * n, filled.data());
        auto masked = sample_channels(model.maskable(), mask_count, rng);
        for (std::size_t t = 0; t <= T; ++t) {
            for (std::size_t pos = 0; pos < m; ++pos) batch.target(b, t * m + pos) = filled(t, model.maskable()[pos]);
            for (std::size_t c : masked) batch.selection(b, t * m + *model.maskable().position_of(c)) = 1.0;
        }
        fill_masked(filled.values(), n, masked, policy, stats, rng);
        model.encode_masked(filled, masked, batch.input.row(b));
        batch.masks.push_back(std::move(masked));
    }
    return batch;
}

std::vector<Tensor> masked_batch_gradients(const SequenceModel& model, const MaskedBatch& batch, double& loss) {
    GradientTape tape;
    const NodeId x = tape.input(batch.input);
    const NodeId y = model.forward(tape, x);
    const NodeId l = tape.masked_mse(y, batch.target, batch.selection);
    loss = tape.value(l)[0];
    return tape.backward(l);
}

TrainResult train_masked(const TimeSeriesDataset& train, const TimeSeriesDataset& validation, const TrainConfig& config) {
    if (config.formulation != Formulation::masked) throw UsageError("train_masked: formulation must be masked");
    check_inputs(train, validation, config);
    const auto started = std::chrono::steady_clock::now();

    const std::vector<ChannelStats> stats =
        train.channel_stats.empty() ? compute_channel_stats(train, {0, train.length()}) : train.channel_stats;

    TrainResult result{make_model(train.n_channels(), config), {}};
    SequenceModel& model = result.model;
    const std::size_t T = config.T;
    const std::size_t m = model.n_maskable();

    // Fixed validation masks and fills.
    const std::vector<std::size_t> val_starts = validation_starts(validation, config);
    Rng val_rng(derive_seed(config.seed, kValidation));
    std::vector<MaskedBatch> val_chunks;
    for (std::size_t b = 0; b < val_starts.size(); b += kEvalChunk) {
        const std::size_t e = std::min(val_starts.size(), b + kEvalChunk);
        MaskedBatch chunk;
        chunk.input = Tensor::matrix(e - b, model.input_width());
        chunk.target = Tensor::matrix(e - b, (T + 1) * m);
        chunk.selection = Tensor::matrix(e - b, (T + 1) * m);
        for (std::size_t k = b; k < e; ++k) {
            const std::size_t c_m = sample_mask_count(m, val_rng);
            MaskedBatch one = assemble_masked_batch(model, validation, std::span(&val_starts[k], 1), c_m,
                                                    config.fill_policy, stats, val_rng);
            std::copy(one.input.values().begin(), one.input.values().end(), chunk.input.row(k - b).begin());
            std::copy(one.target.values().begin(), one.target.values().end(), chunk.target.row(k - b).begin());
            std::copy(one.selection.values().begin(), one.selection.values().end(), chunk.selection.row(k - b).begin());
        }
        val_chunks.push_back(std::move(chunk));
    }
    auto validation_loss = [&] {
        double sum = 0.0;
        double count = 0.0;
        for (const auto& chunk : val_chunks) {
            const Tensor pred = model.forward(chunk.input);
            for (std::size_t i = 0; i < pred.size(); ++i) {
                if (chunk.selection[i] == 0.0) continue;
                const double d = pred[i] - chunk.target[i];
                sum += d * d;
                count += 1.0;
            }
        }
        return sum / count;
    };

    const std::size_t n_windows = window_count(train.length(), T, config.stride);
    std::vector<std::size_t> order(n_windows);
    std::vector<std::size_t> starts;
    Rng shuffle_rng(derive_seed(config.seed, kShuffle));
    Rng mask_rng(derive_seed(config.seed, kMask));
    Optimizer optimizer(model, config.learning_rate);
    Digest digest;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        next_order(order, config, shuffle_rng, digest);
        std::vector<double> batch_losses;
        for (std::size_t b = 0, batch_index = 0; b < n_windows; b += config.batch_size, ++batch_index) {
            const std::size_t e = std::min(n_windows, b + config.batch_size);
            starts.clear();
            for (std::size_t k = b; k < e; ++k) starts.push_back(order[k] * config.stride);
            const std::size_t c_m = sample_mask_count(m, mask_rng);
            const MaskedBatch batch =
                assemble_masked_batch(model, train, starts, c_m, config.fill_policy, stats, mask_rng);
            double loss = 0.0;
            const auto grads = masked_batch_gradients(model, batch, loss);
            if (!std::isfinite(loss)) {
                throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                   ", batch " + std::to_string(batch_index) + ", masks " + mask_string(batch.masks));
            }
            optimizer.step(model, grads);
            batch_losses.push_back(loss);
            ++result.report.optimizer_steps;
        }
        result.report.train_loss.push_back(mean_of(batch_losses));
        result.report.validation_loss.push_back(validation_loss());
    }
    result.report.window_stream_digest = digest.h;
    result.report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

TrainResult train_baseline(const TimeSeriesDataset& train, const TimeSeriesDataset& validation, const TrainConfig& config) {
    if (config.formulation == Formulation::masked) throw UsageError("train_baseline: formulation must be a baseline");
    check_inputs(train, validation, config);
    const auto started = std::chrono::steady_clock::now();

    TrainResult result{make_model(train.n_channels(), config), {}};
    SequenceModel& model = result.model;
    const std::size_t T = config.T;
    const std::size_t n = train.n_channels();
    const bool regressive = config.formulation == Formulation::auto_regressive;

    // Pairs (input row, target row) for the windows starting at `starts`.
    auto assemble = [&](const TimeSeriesDataset& data, std::span<const std::size_t> starts, Tensor& input,
                        Tensor& target) {
        input = Tensor::matrix(starts.size(), model.input_width());
        target = Tensor::matrix(starts.size(), n);
        for (std::size_t b = 0; b < starts.size(); ++b) {
            const double* window = data.samples.data() + starts[b] * n;
            const double* last = window + T * n;
            if (regressive) {
                std::copy(window, last, input.row(b).begin());
            } else {
                std::copy(last, last + n, input.row(b).begin());
            }
            std::copy(last, last + n, target.row(b).begin());
        }
    };

    const std::vector<std::size_t> val_starts = validation_starts(validation, config);
    Tensor val_input, val_target;
    assemble(validation, val_starts, val_input, val_target);
    auto validation_loss = [&] {
        double sum = 0.0;
        for (std::size_t b = 0; b < val_starts.size(); b += kEvalChunk) {
            const std::size_t e = std::min(val_starts.size(), b + kEvalChunk);
            Tensor chunk({e - b, val_input.cols()},
                         std::vector<double>(val_input.row(b).data(), val_input.row(b).data() + (e - b) * val_input.cols()));
            const Tensor pred = model.forward(chunk);
            for (std::size_t i = 0; i < pred.size(); ++i) {
                const double d = pred[i] - val_target[b * n + i];
                sum += d * d;
            }
        }
        return sum / static_cast<double>(val_target.size());
    };

    const std::size_t n_windows = window_count(train.length(), T, config.stride);
    std::vector<std::size_t> order(n_windows);
    std::vector<std::size_t> starts;
    Rng shuffle_rng(derive_seed(config.seed, kShuffle));
    Optimizer optimizer(model, config.learning_rate);
    Digest digest;
    Tensor input, target;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        next_order(order, config, shuffle_rng, digest);
        std::vector<double> batch_losses;
        for (std::size_t b = 0, batch_index = 0; b < n_windows; b += config.batch_size, ++batch_index) {
            const std::size_t e = std::min(n_windows, b + config.batch_size);
            starts.clear();
            for (std::size_t k = b; k < e; ++k) starts.push_back(order[k] * config.stride);
            assemble(train, starts, input, target);
            GradientTape tape;
            const NodeId x = tape.input(input);
            const NodeId y = model.forward(tape, x);
            const NodeId l = tape.mse(y, target);
            const double loss = tape.value(l)[0];
            if (!std::isfinite(loss)) {
                throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                   ", batch " + std::to_string(batch_index) + " (" + to_string(config.formulation) + ")");
            }
            optimizer.step(model, tape.backward(l));
            batch_losses.push_back(loss);
            ++result.report.optimizer_steps;
        }
        result.report.train_loss.push_back(mean_of(batch_losses));
        result.report.validation_loss.push_back(validation_loss());
    }
    result.report.window_stream_digest = digest.h;
    result.report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

TrainResult train_model(const TimeSeriesDataset& train, const TimeSeriesDataset& validation, const TrainConfig& config) {
    return config.formulation == Formulation::masked ? train_masked(train, validation, config)
                                                     : train_baseline(train, validation, config);
}

}  // namespace maskfdia
