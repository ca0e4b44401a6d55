#include "maskfdia/fdia.hpp"

#include "maskfdia/error.hpp"

#include <algorithm>
#include <cmath>

namespace maskfdia {

std::string to_string(ThresholdMethod method) {
    return method == ThresholdMethod::mean_std ? "mean_std" : "quantile";
}

ThresholdMethod threshold_method_from_string(const std::string& name) {
    if (name == "mean_std") return ThresholdMethod::mean_std;
    if (name == "quantile") return ThresholdMethod::quantile;
    throw UsageError("unknown threshold method '" + name + "' (expected mean_std or quantile)");
}

double window_residual(std::span<const double> predicted, std::span<const double> measured) {
    if (predicted.size() != measured.size() || predicted.empty()) {
        throw DimensionError("window_residual: traces must be non-empty and equally long");
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < predicted.size(); ++t) sum += std::abs(predicted[t] - measured[t]);
    return sum / static_cast<double>(predicted.size());
}

Thresholds thresholds_from_residuals(const std::vector<std::vector<double>>& residuals, ThresholdMethod method,
                                     double k, double quantile) {
    if (residuals.empty()) throw CalibrationError("calibration: no residuals");
    if (!(k >= 0.0) || !std::isfinite(k)) throw CalibrationError("calibration: k must be finite and >= 0");
    if (!(quantile > 0.0 && quantile < 1.0)) throw CalibrationError("calibration: quantile must lie in (0, 1)");
    const std::size_t m = residuals.front().size();
    const double count = static_cast<double>(residuals.size());

    Thresholds th;
    th.method = method;
    th.k = k;
    th.quantile = quantile;
    th.window_count = residuals.size();
    th.values.resize(m);
    th.residual_mean.assign(m, 0.0);
    th.residual_std.assign(m, 0.0);
    for (const auto& row : residuals) {
        if (row.size() != m) throw DimensionError("calibration: ragged residual table");
        for (std::size_t i = 0; i < m; ++i) th.residual_mean[i] += row[i];
    }
    for (double& mean : th.residual_mean) mean /= count;
    for (const auto& row : residuals) {
        for (std::size_t i = 0; i < m; ++i) {
            const double d = row[i] - th.residual_mean[i];
            th.residual_std[i] += d * d;
        }
    }
    for (double& sd : th.residual_std) sd = std::sqrt(sd / count);

    std::vector<double> column(residuals.size());
    for (std::size_t i = 0; i < m; ++i) {
        double value = 0.0;
        if (method == ThresholdMethod::mean_std) {
            value = th.residual_mean[i] + k * th.residual_std[i];
        } else {
            for (std::size_t w = 0; w < residuals.size(); ++w) column[w] = residuals[w][i];
            std::sort(column.begin(), column.end());
            const double pos = quantile * (count - 1.0);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const std::size_t hi = std::min(lo + 1, column.size() - 1);
            value = column[lo] + (pos - static_cast<double>(lo)) * (column[hi] - column[lo]);
        }
        th.values[i] = std::max(value, kMinThreshold);
    }
    return th;
}

bool StreamVerdict::any_alarm() const {
    return std::any_of(alarms.begin(), alarms.end(), [](std::uint8_t a) { return a != 0; });
}

std::size_t StreamVerdict::alarm_count() const {
    return static_cast<std::size_t>(std::count_if(alarms.begin(), alarms.end(), [](std::uint8_t a) { return a != 0; }));
}

FdiaEngine::FdiaEngine(SequenceModel model, std::vector<ChannelStats> train_stats, FdiaOptions options)
    : model_(std::move(model)), stats_(std::move(train_stats)), options_(options),
      counters_(std::make_unique<Counters>()) {
    if (model_.formulation() != Formulation::masked) {
        throw UsageError("FDIA needs a masked model, got " + to_string(model_.formulation()));
    }
    if (stats_.size() != model_.n_channels()) {
        throw DimensionError("FDIA: " + std::to_string(stats_.size()) + " channel stats for a " +
                             std::to_string(model_.n_channels()) + "-channel model");
    }
    if (options_.max_iterations < 1) throw UsageError("FDIA: max_iterations must be >= 1");
}

void FdiaEngine::reset_counters() const {
    counters_->first_pass = 0;
    counters_->joint_pass = 0;
}

void FdiaEngine::check_window(const Window& window) const {
    if (window.length() != model_.window_T() + 1 || window.n_channels() != model_.n_channels()) {
        throw DimensionError("FDIA: window is " + std::to_string(window.length()) + " x " +
                             std::to_string(window.n_channels()) + ", model expects " +
                             std::to_string(model_.window_T() + 1) + " x " + std::to_string(model_.n_channels()));
    }
}

void FdiaEngine::fill(Tensor& values, std::span<const std::size_t> channels, std::uint64_t salt) const {
    Rng rng(derive_seed(options_.fill_seed, salt));
    fill_masked(values.values(), values.cols(), channels, options_.fill_policy, stats_, rng);
}

Tensor FdiaEngine::first_pass(const Window& window) const {
    const std::size_t m = model_.n_maskable();
    Tensor batch = Tensor::matrix(m, model_.input_width());
    for (std::size_t pos = 0; pos < m; ++pos) {
        const std::size_t channel = model_.maskable()[pos];
        Tensor filled = window.values;
        fill(filled, std::span(&channel, 1), window.start_index * (m + 1) + pos);
        model_.encode_masked(filled, std::span(&channel, 1), batch.row(pos));
    }
    counters_->first_pass += m;
    return model_.forward(batch);
}

Tensor FdiaEngine::predict_masked(const Window& window, std::span<const std::size_t> channels) const {
    check_window(window);
    Tensor filled = window.values;
    const std::size_t m = model_.n_maskable();
    fill(filled, channels, window.start_index * (m + 1) + m);
    Tensor input = Tensor::matrix(1, model_.input_width());
    model_.encode_masked(filled, channels, input.values());
    Tensor out = model_.forward(input);
    return Tensor({model_.window_T() + 1, m}, std::vector<double>(out.storage()));
}

double FdiaEngine::score_window(const Window& window, std::size_t channel) const {
    check_window(window);
    const auto pos = model_.maskable().position_of(channel);
    if (!pos) throw UsageError("score_window: channel " + std::to_string(channel) + " is not maskable");
    const std::size_t m = model_.n_maskable();
    const std::size_t rows = model_.window_T() + 1;
    Tensor filled = window.values;
    fill(filled, std::span(&channel, 1), window.start_index * (m + 1) + *pos);
    Tensor input = Tensor::matrix(1, model_.input_width());
    model_.encode_masked(filled, std::span(&channel, 1), input.values());
    const Tensor out = model_.forward(input);
    counters_->first_pass += 1;
    std::vector<double> predicted(rows), measured(rows);
    for (std::size_t t = 0; t < rows; ++t) {
        predicted[t] = out[t * m + *pos];
        measured[t] = window.values(t, channel);
    }
    return window_residual(predicted, measured);
}

std::vector<double> FdiaEngine::score_all(const Window& window) const {
    check_window(window);
    const std::size_t m = model_.n_maskable();
    const std::size_t rows = model_.window_T() + 1;
    const Tensor out = first_pass(window);
    std::vector<double> residuals(m);
    for (std::size_t pos = 0; pos < m; ++pos) {
        const std::size_t channel = model_.maskable()[pos];
        double sum = 0.0;
        for (std::size_t t = 0; t < rows; ++t) sum += std::abs(out(pos, t * m + pos) - window.values(t, channel));
        residuals[pos] = sum / static_cast<double>(rows);
    }
    return residuals;
}

FdiaResult FdiaEngine::step(const Window& window, const Thresholds& thresholds) const {
    check_window(window);
    const std::size_t m = model_.n_maskable();
    const std::size_t rows = model_.window_T() + 1;
    if (thresholds.values.size() != m) {
        throw DimensionError("FDIA: " + std::to_string(thresholds.values.size()) + " thresholds for " +
                             std::to_string(m) + " maskable channels");
    }

    const Tensor predictions = first_pass(window);
    FdiaResult result;
    result.accommodated = window.values;
    result.residuals.resize(m);
    std::vector<std::size_t> flagged_positions;
    for (std::size_t pos = 0; pos < m; ++pos) {
        const std::size_t channel = model_.maskable()[pos];
        double sum = 0.0;
        for (std::size_t t = 0; t < rows; ++t) {
            sum += std::abs(predictions(pos, t * m + pos) - window.values(t, channel));
        }
        result.residuals[pos] = sum / static_cast<double>(rows);
        if (result.residuals[pos] > thresholds.values[pos]) {
            flagged_positions.push_back(pos);
            for (std::size_t t = 0; t < rows; ++t) result.accommodated(t, channel) = predictions(pos, t * m + pos);
        }
    }
    for (std::size_t pos : flagged_positions) result.flags.push_back(model_.maskable()[pos]);
    std::sort(result.flags.begin(), result.flags.end());

    if (result.flags.size() >= 2 && options_.max_iterations >= 2) {
        // Each first-pass prediction still saw the other faulty channels; redo
        // them jointly from the unflagged channels only.
        const Tensor joint = predict_masked(window, result.flags);
        counters_->joint_pass += 1;
        for (std::size_t pos : flagged_positions) {
            const std::size_t channel = model_.maskable()[pos];
            for (std::size_t t = 0; t < rows; ++t) result.accommodated(t, channel) = joint(t, pos);
        }
        result.iterations_used = 2;
    }
    result.alarm = result.flags.size() > max_masked_channels(m);
    return result;
}

StreamVerdict FdiaEngine::stream(const TimeSeriesDataset& series, const Thresholds& thresholds,
                                 std::size_t stride) const {
    const std::size_t T = model_.window_T();
    if (stride < 1) throw UsageError("stream: stride must be positive");
    if (series.length() < T + 1) {
        throw UsageError("stream: series of length " + std::to_string(series.length()) +
                         " is shorter than one window of " + std::to_string(T + 1));
    }
    if (series.n_channels() != model_.n_channels()) {
        throw DimensionError("stream: series has " + std::to_string(series.n_channels()) + " channels, model " +
                             std::to_string(model_.n_channels()));
    }
    const std::size_t m = model_.n_maskable();
    const std::size_t steps = window_count(series.length(), T, stride);

    StreamVerdict verdict;
    verdict.channels = model_.maskable().indices();
    verdict.times.reserve(steps);
    verdict.residuals = Tensor::matrix(steps, m);
    verdict.flags.assign(steps * m, 0);
    verdict.alarms.assign(steps, 0);
    verdict.accommodated = series.samples;
    verdict.onsets.assign(m, std::nullopt);

    std::size_t written = 0;  // samples [0, written) already carry their final accommodated value
    for (std::size_t s = 0; s < steps; ++s) {
        const Window window = window_at(series, s * stride, T);
        const FdiaResult r = step(window, thresholds);
        const std::size_t t_end = window.last_index();
        verdict.times.push_back(t_end);
        verdict.alarms[s] = r.alarm ? 1 : 0;
        for (std::size_t pos = 0; pos < m; ++pos) {
            verdict.residuals(s, pos) = r.residuals[pos];
            const bool flagged = r.residuals[pos] > thresholds.values[pos];
            verdict.flags[s * m + pos] = flagged ? 1 : 0;
            if (flagged && !verdict.onsets[pos]) verdict.onsets[pos] = t_end;
        }
        for (std::size_t t = std::max(written, window.start_index); t <= t_end; ++t) {
            auto src = r.accommodated.row(t - window.start_index);
            std::copy(src.begin(), src.end(), verdict.accommodated.row(t).begin());
        }
        written = t_end + 1;
    }
    return verdict;
}

Thresholds calibrate_thresholds(const FdiaEngine& engine, std::span<const Window> validation, ThresholdMethod method,
                                double k, double quantile) {
    if (validation.size() < kMinCalibrationWindows) {
        throw CalibrationError("calibration needs at least " + std::to_string(kMinCalibrationWindows) +
                               " validation windows, got " + std::to_string(validation.size()));
    }
    std::vector<std::vector<double>> residuals;
    residuals.reserve(validation.size());
    for (const Window& w : validation) residuals.push_back(engine.score_all(w));
    return thresholds_from_residuals(residuals, method, k, quantile);
}

}  // namespace maskfdia
