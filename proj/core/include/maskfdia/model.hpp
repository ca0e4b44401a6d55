#pragma once

#include "maskfdia/data.hpp"
#include "maskfdia/masking.hpp"
#include "maskfdia/numerics.hpp"
#include "maskfdia/rng.hpp"
#include "maskfdia/tensor.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace maskfdia {

/// How a model maps sensor data onto itself.
enum class Formulation {
    masked,            ///< hidden channels reconstructed from the rest, whole window
    auto_regressive,   ///< x_t from x_{t-T..t-1}
    auto_associative,  ///< x_t from x_t through a bottleneck
};

std::string to_string(Formulation f);
Formulation formulation_from_string(const std::string& name);

/// Windowed dense network f_theta with a formulation tag.
///
/// Hidden layers use tanh and the output layer is linear. Inputs are flattened
/// row-major; for the masked formulation each timestep row is the n channel
/// values followed by one 0/1 indicator per maskable channel.
///
/// Shapes by formulation:
///   masked            in (T+1) x (n + n_maskable)  out (T+1) x n_maskable
///   auto_regressive   in T x n                     out 1 x n
///   auto_associative  in 1 x n                     out 1 x n
///
/// Forward passes are const and safe to run concurrently.
class SequenceModel {
public:
    SequenceModel() = default;
    SequenceModel(Formulation formulation, MaskableChannelSet maskable, std::size_t window_T,
                  std::vector<std::size_t> layer_widths);

    Formulation formulation() const { return formulation_; }
    std::size_t n_channels() const { return maskable_.n_channels(); }
    std::size_t n_maskable() const { return maskable_.size(); }
    const MaskableChannelSet& maskable() const { return maskable_; }
    std::size_t window_T() const { return window_T_; }
    /// Widths of every layer including input and output.
    const std::vector<std::size_t>& layer_widths() const { return widths_; }
    std::vector<std::size_t> hidden_sizes() const;
    std::size_t input_width() const { return widths_.front(); }
    std::size_t output_width() const { return widths_.back(); }
    std::size_t layer_count() const { return widths_.size() - 1; }

    /// W0, b0, W1, b1, ... with W_k of shape [d_in x d_out].
    std::vector<Tensor>& parameters() { return params_; }
    const std::vector<Tensor>& parameters() const { return params_; }
    std::size_t parameter_count() const;

    /// Glorot-uniform weights from `rng`, zero biases.
    void initialize(Rng& rng);

    /// batch x input_width -> batch x output_width.
    Tensor forward(const Tensor& batch) const;
    /// Same computation recorded on a tape; parameter k is registered at slot k.
    NodeId forward(GradientTape& tape, NodeId input) const;

    /// Writes the masked-formulation input row for an already filled window.
    void encode_masked(const Tensor& filled_window, std::span<const std::size_t> masked_channels,
                       std::span<double> out) const;

    /// Reconstruction of every maskable channel at every step, (T+1) x n_maskable.
    /// `masked_window` must already carry the fill values.
    Tensor predict_masked(const Window& masked_window, const MaskSpec& mask) const;
    /// Estimate of x_t from a T x n history, 1 x n.
    Tensor predict_next(const Tensor& history) const;
    /// Reconstruction of each row of `samples` (rows x n) through the bottleneck.
    Tensor autoencode(const Tensor& samples) const;

private:
    void require(Formulation f, const char* op) const;

    Formulation formulation_ = Formulation::masked;
    MaskableChannelSet maskable_;
    std::size_t window_T_ = 0;
    std::vector<std::size_t> widths_;
    std::vector<Tensor> params_;
};

SequenceModel build_masked_model(const MaskableChannelSet& maskable, std::size_t T,
                                 const std::vector<std::size_t>& hidden_sizes);
/// Convenience: the first n_maskable channels are maskable.
SequenceModel build_masked_model(std::size_t n_channels, std::size_t n_maskable, std::size_t T,
                                 const std::vector<std::size_t>& hidden_sizes);
SequenceModel build_auto_regressive_model(std::size_t n_channels, std::size_t T,
                                          const std::vector<std::size_t>& hidden_sizes);
/// Encoder widths (e.g. {64, 32, 2}) are mirrored into the decoder. The last
/// encoder width is the bottleneck and must be narrower than n_channels;
/// otherwise ConfigError. T is recorded for windowed scoring only.
SequenceModel build_autoencoder(std::size_t n_channels, std::size_t T, const std::vector<std::size_t>& encoder_widths);

}  // namespace maskfdia
