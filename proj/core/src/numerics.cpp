#include "maskfdia/numerics.hpp"

#include "maskfdia/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

namespace maskfdia {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

ConstMatrixMap as_matrix(const Tensor& t) {
    return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

MatrixMap as_matrix(Tensor& t) {
    return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

std::string shape_string(const Tensor& t) {
    std::string s = "[";
    for (std::size_t i = 0; i < t.shape().size(); ++i) {
        if (i) s += "x";
        s += std::to_string(t.shape()[i]);
    }
    return s + "]";
}

void check_dense_shapes(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    if (input.rank() != 2 || weights.rank() != 2 || bias.rank() != 1 ||
        input.cols() != weights.rows() || bias.size() != weights.cols()) {
        throw DimensionError("dense: input " + shape_string(input) + ", weights " +
                             shape_string(weights) + ", bias " + shape_string(bias) +
                             " do not conform");
    }
}

}  // namespace

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    check_dense_shapes(input, weights, bias);
    // Each output row is accumulated in the same order whatever the batch
    // size, so a window scored alone or inside a batch gives identical bits.
    const std::size_t d_in = weights.rows();
    const std::size_t d_out = weights.cols();
    Tensor out = Tensor::matrix(input.rows(), d_out);
    const double* w = weights.data();
    for (std::size_t r = 0; r < input.rows(); ++r) {
        double* y = out.data() + r * d_out;
        std::copy(bias.data(), bias.data() + d_out, y);
        const double* x = input.data() + r * d_in;
        for (std::size_t i = 0; i < d_in; ++i) {
            const double xi = x[i];
            if (xi == 0.0) continue;
            const double* wi = w + i * d_out;
            for (std::size_t j = 0; j < d_out; ++j) y[j] += xi * wi[j];
        }
    }
    return out;
}

Tensor tanh_forward(const Tensor& input) {
    Tensor out = input;
    for (double& v : out.values()) v = std::tanh(v);
    return out;
}

double masked_mse(const Tensor& pred, const Tensor& target, std::span<const std::size_t> masked_columns) {
    if (masked_columns.empty()) throw UsageError("masked_mse: empty mask, loss is undefined");
    if (!pred.same_shape(target)) throw DimensionError("masked_mse: pred/target shape mismatch");
    double sum = 0.0;
    for (std::size_t t = 0; t < pred.rows(); ++t) {
        for (std::size_t c : masked_columns) {
            if (c >= pred.cols()) throw DimensionError("masked_mse: mask column out of range");
            const double d = pred(t, c) - target(t, c);
            sum += d * d;
        }
    }
    return sum / static_cast<double>(pred.rows() * masked_columns.size());
}

NodeId GradientTape::push(Node node) {
    nodes_.push_back(std::move(node));
    return nodes_.size() - 1;
}

NodeId GradientTape::input(Tensor value) {
    Node n{.op = Op::input};
    n.owned = std::move(value);
    return push(std::move(n));
}

NodeId GradientTape::parameter(std::size_t slot, const Tensor& value) {
    Node n{.op = Op::parameter};
    n.slot = slot;
    n.requires_grad = true;
    n.external = &value;
    return push(std::move(n));
}

const Tensor& GradientTape::value(NodeId id) const {
    if (id >= nodes_.size()) throw UsageError("tape: unknown node " + std::to_string(id));
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.owned;
}

NodeId GradientTape::dense(NodeId x, NodeId weights, NodeId bias) {
    Node n{.op = Op::dense, .a = x, .b = weights, .c = bias};
    n.owned = dense_forward(value(x), value(weights), value(bias));
    n.requires_grad = nodes_[x].requires_grad || nodes_[weights].requires_grad || nodes_[bias].requires_grad;
    return push(std::move(n));
}

NodeId GradientTape::tanh(NodeId x) {
    Node n{.op = Op::tanh, .a = x};
    n.owned = tanh_forward(value(x));
    n.requires_grad = nodes_[x].requires_grad;
    return push(std::move(n));
}

NodeId GradientTape::masked_mse(NodeId pred, Tensor target, Tensor selection) {
    const Tensor& p = value(pred);
    if (!p.same_shape(target) || !p.same_shape(selection)) {
        throw DimensionError("tape masked_mse: pred " + shape_string(p) + ", target " +
                             shape_string(target) + ", selection " + shape_string(selection));
    }
    double count = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (selection[i] == 0.0) continue;
        const double d = p[i] - target[i];
        sum += selection[i] * d * d;
        count += selection[i];
    }
    if (count == 0.0) throw UsageError("masked_mse: empty mask, loss is undefined");
    Node n{.op = Op::masked_mse, .a = pred};
    n.owned = Tensor({1}, sum / count);
    n.target = std::move(target);
    n.selection = std::move(selection);
    n.selected = count;
    n.requires_grad = nodes_[pred].requires_grad;
    return push(std::move(n));
}

NodeId GradientTape::mse(NodeId pred, Tensor target) {
    const Tensor& p = value(pred);
    if (!p.same_shape(target)) throw DimensionError("tape mse: pred/target shape mismatch");
    if (p.empty()) throw UsageError("mse: empty prediction");
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - target[i];
        sum += d * d;
    }
    Node n{.op = Op::mse, .a = pred};
    n.owned = Tensor({1}, sum / static_cast<double>(p.size()));
    n.target = std::move(target);
    n.requires_grad = nodes_[pred].requires_grad;
    return push(std::move(n));
}

std::vector<Tensor> GradientTape::backward(NodeId loss, double loss_seed) const {
    if (nodes_.empty()) throw UsageError("backward: tape is empty, run a forward pass first");
    if (loss >= nodes_.size()) throw UsageError("backward: unknown loss node");
    if (value(loss).size() != 1) throw UsageError("backward: loss node is not a scalar");

    std::vector<Tensor> grads(loss + 1);
    grads[loss] = Tensor(value(loss).shape(), loss_seed);

    std::size_t n_slots = 0;
    for (const Node& n : nodes_) {
        if (n.op == Op::parameter) n_slots = std::max(n_slots, n.slot + 1);
    }
    std::vector<Tensor> out(n_slots);

    auto accumulate = [&](NodeId id, Tensor&& g) {
        if (!nodes_[id].requires_grad) return;
        if (grads[id].empty()) {
            grads[id] = std::move(g);
        } else {
            as_matrix(grads[id]) += as_matrix(g);
        }
    };

    for (std::size_t k = loss + 1; k-- > 0;) {
        const Node& n = nodes_[k];
        if (grads[k].empty() || !n.requires_grad) continue;
        const Tensor& g = grads[k];
        switch (n.op) {
            case Op::input:
                break;
            case Op::parameter: {
                if (out[n.slot].empty()) {
                    out[n.slot] = g;
                } else {
                    as_matrix(out[n.slot]) += as_matrix(g);
                }
                break;
            }
            case Op::dense: {
                const Tensor& x = value(n.a);
                const Tensor& w = value(n.b);
                const auto gy = as_matrix(g);
                if (nodes_[n.a].requires_grad) {
                    Tensor gx = Tensor(x.shape());
                    as_matrix(gx).noalias() = gy * as_matrix(w).transpose();
                    accumulate(n.a, std::move(gx));
                }
                if (nodes_[n.b].requires_grad) {
                    Tensor gw = Tensor(w.shape());
                    as_matrix(gw).noalias() = as_matrix(x).transpose() * gy;
                    accumulate(n.b, std::move(gw));
                }
                if (nodes_[n.c].requires_grad) {
                    Tensor gb = Tensor(value(n.c).shape());
                    Eigen::Map<Eigen::RowVectorXd>(gb.data(), static_cast<Eigen::Index>(gb.size())) =
                        gy.colwise().sum();
                    accumulate(n.c, std::move(gb));
                }
                break;
            }
            case Op::tanh: {
                Tensor gx = g;
                const Tensor& y = n.owned;
                for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= 1.0 - y[i] * y[i];
                accumulate(n.a, std::move(gx));
                break;
            }
            case Op::masked_mse: {
                const Tensor& p = value(n.a);
                Tensor gp(p.shape());
                const double scale = 2.0 * g[0] / n.selected;
                for (std::size_t i = 0; i < p.size(); ++i) {
                    if (n.selection[i] != 0.0) gp[i] = scale * n.selection[i] * (p[i] - n.target[i]);
                }
                accumulate(n.a, std::move(gp));
                break;
            }
            case Op::mse: {
                const Tensor& p = value(n.a);
                Tensor gp(p.shape());
                const double scale = 2.0 * g[0] / static_cast<double>(p.size());
                for (std::size_t i = 0; i < p.size(); ++i) gp[i] = scale * (p[i] - n.target[i]);
                accumulate(n.a, std::move(gp));
                break;
            }
        }
    }

    for (const Node& n : nodes_) {
        if (n.op == Op::parameter && out[n.slot].empty()) out[n.slot] = Tensor(n.external->shape());
    }
    return out;
}

AdamState AdamState::for_parameter(const Tensor& param, const AdamConfig& config) {
    AdamState s;
    s.first_moment = Tensor(param.shape());
    s.second_moment = Tensor(param.shape());
    s.beta1 = config.beta1;
    s.beta2 = config.beta2;
    s.epsilon = config.epsilon;
    s.learning_rate = config.learning_rate;
    return s;
}

void adam_step(Tensor& params, const Tensor& grads, AdamState& state) {
    if (!params.same_shape(grads) || !params.same_shape(state.first_moment) ||
        !params.same_shape(state.second_moment)) {
        throw DimensionError("adam_step: parameter " + shape_string(params) + ", gradient " +
                             shape_string(grads) + " or moment shapes differ");
    }
    if (!grads.all_finite()) throw NumericError("adam_step: non-finite gradient, update rejected");

    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double correction1 = 1.0 - std::pow(state.beta1, t);
    const double correction2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

void glorot_uniform(Tensor& weights, Rng& rng) {
    if (weights.rank() != 2) throw DimensionError("glorot_uniform: weights must be rank 2");
    const double limit = std::sqrt(6.0 / static_cast<double>(weights.rows() + weights.cols()));
    for (double& w : weights.values()) w = rng.uniform(-limit, limit);
}

}  // namespace maskfdia
