#pragma once

#include "maskfdia/rng.hpp"
#include "maskfdia/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace maskfdia {

/// output[b][j] = sum_i input[b][i] * weights[i][j] + bias[j]
///
/// Throws DimensionError when the shapes do not conform.
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

/// Elementwise tanh.
Tensor tanh_forward(const Tensor& input);

/// Mean of squared differences over the columns listed in masked_columns.
///
/// pred and target are (T+1) x n windows. Columns not listed contribute
/// nothing. Throws UsageError for an empty mask.
double masked_mse(const Tensor& pred, const Tensor& target, std::span<const std::size_t> masked_columns);

using NodeId = std::size_t;

/// Records the primitive operations of one forward pass so the backward pass
/// can be replayed in reverse.
///
/// Parameter nodes reference caller-owned tensors; those must outlive the
/// tape. Nodes are appended in evaluation order, which is therefore a valid
/// topological order for the backward sweep.
class GradientTape {
public:
    /// Non-differentiable input.
    NodeId input(Tensor value);
    /// Trainable leaf; its gradient is returned at index `slot` by backward().
    NodeId parameter(std::size_t slot, const Tensor& value);

    NodeId dense(NodeId x, NodeId weights, NodeId bias);
    NodeId tanh(NodeId x);
    /// Scalar mean of selection * (pred - target)^2 over the selected cells.
    /// `selection` holds 0/1 weights shaped like pred.
    NodeId masked_mse(NodeId pred, Tensor target, Tensor selection);
    /// Scalar mean squared error over every cell.
    NodeId mse(NodeId pred, Tensor target);

    const Tensor& value(NodeId id) const;
    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

    /// Gradients of the scalar node `loss` (scaled by loss_seed) with respect
    /// to each parameter slot. Entry k is shaped like the tensor registered at
    /// slot k; slots never registered come back empty.
    std::vector<Tensor> backward(NodeId loss, double loss_seed = 1.0) const;

private:
    enum class Op { input, parameter, dense, tanh, masked_mse, mse };

    struct Node {
        Op op;
        NodeId a = 0;
        NodeId b = 0;
        NodeId c = 0;
        std::size_t slot = 0;
        bool requires_grad = false;
        const Tensor* external = nullptr;  // parameter value
        Tensor owned{};                    // computed value
        Tensor target{};
        Tensor selection{};
        double selected = 0.0;
    };

    NodeId push(Node node);

    std::vector<Node> nodes_;
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Optimizer state for one parameter tensor.
struct AdamState {
    std::uint64_t step_count = 0;
    Tensor first_moment;
    Tensor second_moment;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double learning_rate = 1e-3;

    static AdamState for_parameter(const Tensor& param, const AdamConfig& config = {});
};

/// One bias-corrected Adam update. A non-finite gradient leaves params and
/// state untouched and throws NumericError.
void adam_step(Tensor& params, const Tensor& grads, AdamState& state);

/// Glorot-uniform weights, zero bias.
void glorot_uniform(Tensor& weights, Rng& rng);

}  // namespace maskfdia
