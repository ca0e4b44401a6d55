#include "maskfdia/model.hpp"

#include "maskfdia/error.hpp"

#include <algorithm>
#include <cmath>

namespace maskfdia {

std::string to_string(Formulation f) {
    switch (f) {
        case Formulation::masked: return "masked";
        case Formulation::auto_regressive: return "auto_regressive";
        case Formulation::auto_associative: return "auto_associative";
    }
    return "unknown";
}

Formulation formulation_from_string(const std::string& name) {
    if (name == "masked") return Formulation::masked;
    if (name == "auto_regressive" || name == "regression") return Formulation::auto_regressive;
    if (name == "auto_associative" || name == "autoencoder") return Formulation::auto_associative;
    throw UsageError("unknown formulation '" + name + "'");
}

SequenceModel::SequenceModel(Formulation formulation, MaskableChannelSet maskable, std::size_t window_T,
                             std::vector<std::size_t> layer_widths)
    : formulation_(formulation), maskable_(std::move(maskable)), window_T_(window_T), widths_(std::move(layer_widths)) {
    if (widths_.size() < 2) throw UsageError("model needs at least an input and an output width");
    if (std::find(widths_.begin(), widths_.end(), std::size_t{0}) != widths_.end()) {
        throw UsageError("model layer widths must be positive");
    }
    if (window_T_ < 1) throw UsageError("model window T must be >= 1");
    const std::size_t n = maskable_.n_channels();
    const std::size_t m = maskable_.size();
    std::size_t in = 0;
    std::size_t out = 0;
    switch (formulation_) {
        case Formulation::masked:
            in = (window_T_ + 1) * (n + m);
            out = (window_T_ + 1) * m;
            break;
        case Formulation::auto_regressive:
            in = window_T_ * n;
            out = n;
            break;
        case Formulation::auto_associative:
            in = n;
            out = n;
            break;
    }
    if (widths_.front() != in || widths_.back() != out) {
        throw DimensionError(to_string(formulation_) + " model expects input " + std::to_string(in) +
                             " and output " + std::to_string(out) + " widths");
    }
    for (std::size_t k = 0; k + 1 < widths_.size(); ++k) {
        params_.emplace_back(std::vector<std::size_t>{widths_[k], widths_[k + 1]});
        params_.emplace_back(std::vector<std::size_t>{widths_[k + 1]});
    }
}

std::vector<std::size_t> SequenceModel::hidden_sizes() const {
    if (widths_.size() <= 2) return {};
    return {widths_.begin() + 1, widths_.end() - 1};
}

std::size_t SequenceModel::parameter_count() const {
    std::size_t total = 0;
    for (const auto& p : params_) total += p.size();
    return total;
}

void SequenceModel::initialize(Rng& rng) {
    for (std::size_t k = 0; k < params_.size(); k += 2) {
        glorot_uniform(params_[k], rng);
        params_[k + 1].fill(0.0);
    }
}

Tensor SequenceModel::forward(const Tensor& batch) const {
    if (batch.cols() != input_width()) {
        throw DimensionError("model input has " + std::to_string(batch.cols()) + " columns, expected " +
                             std::to_string(input_width()));
    }
    Tensor h = dense_forward(batch, params_[0], params_[1]);
    for (std::size_t k = 2; k < params_.size(); k += 2) {
        for (double& v : h.values()) v = std::tanh(v);
        h = dense_forward(h, params_[k], params_[k + 1]);
    }
    return h;
}

NodeId SequenceModel::forward(GradientTape& tape, NodeId input) const {
    NodeId h = input;
    for (std::size_t k = 0; k < params_.size(); k += 2) {
        if (k > 0) h = tape.tanh(h);
        const NodeId w = tape.parameter(k, params_[k]);
        const NodeId b = tape.parameter(k + 1, params_[k + 1]);
        h = tape.dense(h, w, b);
    }
    return h;
}

void SequenceModel::require(Formulation f, const char* op) const {
    if (formulation_ != f) {
        throw UsageError(std::string(op) + " needs a " + to_string(f) + " model, got " + to_string(formulation_));
    }
}

void SequenceModel::encode_masked(const Tensor& filled_window, std::span<const std::size_t> masked_channels,
                                  std::span<double> out) const {
    const std::size_t n = n_channels();
    const std::size_t m = n_maskable();
    const std::size_t rows = window_T_ + 1;
    if (filled_window.rows() != rows || filled_window.cols() != n) {
        throw DimensionError("masked input window must be " + std::to_string(rows) + " x " + std::to_string(n));
    }
    if (out.size() != input_width()) throw DimensionError("masked input row has the wrong width");
    std::vector<double> indicator(m, 0.0);
    for (std::size_t c : masked_channels) {
        auto pos = maskable_.position_of(c);
        if (!pos) throw UsageError("channel " + std::to_string(c) + " is not maskable");
        indicator[*pos] = 1.0;
    }
    double* dst = out.data();
    for (std::size_t t = 0; t < rows; ++t) {
        auto row = filled_window.row(t);
        dst = std::copy(row.begin(), row.end(), dst);
        dst = std::copy(indicator.begin(), indicator.end(), dst);
    }
}

Tensor SequenceModel::predict_masked(const Window& masked_window, const MaskSpec& mask) const {
    require(Formulation::masked, "predict_masked");
    Tensor input = Tensor::matrix(1, input_width());
    encode_masked(masked_window.values, mask.masked_channels, input.values());
    Tensor out = forward(input);
    return Tensor({window_T_ + 1, n_maskable()}, std::vector<double>(out.storage()));
}

Tensor SequenceModel::predict_next(const Tensor& history) const {
    require(Formulation::auto_regressive, "predict_next");
    if (history.rows() != window_T_ || history.cols() != n_channels()) {
        throw DimensionError("history must be " + std::to_string(window_T_) + " x " + std::to_string(n_channels()));
    }
    Tensor input({1, input_width()}, std::vector<double>(history.storage()));
    return forward(input);
}

Tensor SequenceModel::autoencode(const Tensor& samples) const {
    require(Formulation::auto_associative, "autoencode");
    if (samples.cols() != n_channels()) throw DimensionError("autoencode: sample width mismatch");
    Tensor input({samples.rows(), samples.cols()}, std::vector<double>(samples.storage()));
    return forward(input);
}

SequenceModel build_masked_model(const MaskableChannelSet& maskable, std::size_t T,
                                 const std::vector<std::size_t>& hidden_sizes) {
    std::vector<std::size_t> widths{(T + 1) * (maskable.n_channels() + maskable.size())};
    widths.insert(widths.end(), hidden_sizes.begin(), hidden_sizes.end());
    widths.push_back((T + 1) * maskable.size());
    return {Formulation::masked, maskable, T, std::move(widths)};
}

SequenceModel build_masked_model(std::size_t n_channels, std::size_t n_maskable, std::size_t T,
                                 const std::vector<std::size_t>& hidden_sizes) {
    std::vector<std::size_t> idx(n_maskable);
    for (std::size_t i = 0; i < n_maskable; ++i) idx[i] = i;
    return build_masked_model(MaskableChannelSet(n_channels, std::move(idx)), T, hidden_sizes);
}

SequenceModel build_auto_regressive_model(std::size_t n_channels, std::size_t T,
                                          const std::vector<std::size_t>& hidden_sizes) {
    std::vector<std::size_t> widths{T * n_channels};
    widths.insert(widths.end(), hidden_sizes.begin(), hidden_sizes.end());
    widths.push_back(n_channels);
    return {Formulation::auto_regressive, MaskableChannelSet::all(n_channels), T, std::move(widths)};
}

SequenceModel build_autoencoder(std::size_t n_channels, std::size_t T, const std::vector<std::size_t>& encoder_widths) {
    if (encoder_widths.empty()) throw ConfigError("model.hidden: autoencoder needs at least a bottleneck width");
    const std::size_t bottleneck = encoder_widths.back();
    if (bottleneck >= n_channels) {
        throw ConfigError("model.hidden: bottleneck width " + std::to_string(bottleneck) +
                          " must be narrower than the " + std::to_string(n_channels) +
                          " channels, otherwise the autoencoder can learn the identity");
    }
    std::vector<std::size_t> widths{n_channels};
    widths.insert(widths.end(), encoder_widths.begin(), encoder_widths.end());
    widths.insert(widths.end(), encoder_widths.rbegin() + 1, encoder_widths.rend());
    widths.push_back(n_channels);
    return {Formulation::auto_associative, MaskableChannelSet::all(n_channels), T, std::move(widths)};
}

}  // namespace maskfdia
