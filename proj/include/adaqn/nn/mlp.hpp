#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "adaqn/common/error.hpp"
#include "adaqn/common/rng.hpp"
#include "adaqn/nn/activation.hpp"
#include "adaqn/nn/loss.hpp"

namespace adaqn::nn {

/// Row-major batch: one sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ParamVector = std::vector<double>;

struct LayerShape {
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    std::size_t offset = 0;  // weights (fan_out x fan_in, row-major), then fan_out biases

    std::size_t weight_count() const { return fan_in * fan_out; }
    std::size_t bias_offset() const { return offset + weight_count(); }
    std::size_t end() const { return bias_offset() + fan_out; }
};

struct MlpSpec {
    std::size_t input_dim = 1;
    std::vector<std::size_t> hidden;
    std::size_t output_dim = 1;
    Activation activation;

    void validate() const {
        if (input_dim == 0 || output_dim == 0) throw ContractViolation("MLP dimensions must be >= 1");
        for (std::size_t h : hidden)
            if (h == 0) throw ContractViolation("hidden layer width must be >= 1");
        activation.validate();
    }

    std::size_t layer_count() const { return hidden.size() + 1; }

    std::vector<LayerShape> layers() const {
        std::vector<LayerShape> out;
        out.reserve(layer_count());
        std::size_t fan_in = input_dim;
        std::size_t offset = 0;
        for (std::size_t l = 0; l < layer_count(); ++l) {
            const std::size_t fan_out = l < hidden.size() ? hidden[l] : output_dim;
            out.push_back({fan_in, fan_out, offset});
            offset = out.back().end();
            fan_in = fan_out;
        }
        return out;
    }

    std::size_t param_count() const { return layers().back().end(); }

    friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

inline std::string describe(const MlpSpec& spec) {
    std::string s = "[";
    for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(spec.hidden[i]);
    }
    return s + "]/" + to_string(spec.activation);
}

/// Glorot-uniform weights, zero biases.
inline void init_layer(std::span<double> params, const LayerShape& layer, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.fan_in + layer.fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < layer.weight_count(); ++i) params[layer.offset + i] = dist(rng);
    for (std::size_t i = 0; i < layer.fan_out; ++i) params[layer.bias_offset() + i] = 0.0;
}

inline ParamVector mlp_init(const MlpSpec& spec, Rng& rng) {
    spec.validate();
    ParamVector params(spec.param_count(), 0.0);
    for (const LayerShape& layer : spec.layers()) init_layer(params, layer, rng);
    return params;
}

namespace detail {

using ConstRowMap = Eigen::Map<const Matrix>;
using RowMap = Eigen::Map<Matrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

inline void apply_activation(const Activation& act, const Matrix& z, Matrix& a) {
    a.resize(z.rows(), z.cols());
    const double* src = z.data();
    double* dst = a.data();
    const Eigen::Index n = z.size();
    switch (act.kind) {
        case ActivationKind::ReLU:
            a = z.cwiseMax(0.0);
            return;
        case ActivationKind::Tanh:
            a = z.array().tanh().matrix();
            return;
        default:
            for (Eigen::Index i = 0; i < n; ++i) dst[i] = act(src[i]);
    }
}

// grad <- grad * act'(z), elementwise
inline void scale_by_derivative(const Activation& act, const Matrix& z, Matrix& grad) {
    const double* zs = z.data();
    double* g = grad.data();
    const Eigen::Index n = z.size();
    switch (act.kind) {
        case ActivationKind::ReLU:
            for (Eigen::Index i = 0; i < n; ++i)
                if (!(zs[i] > 0.0)) g[i] = 0.0;
            return;
        default:
            for (Eigen::Index i = 0; i < n; ++i) g[i] *= act.derivative(zs[i]);
    }
}

/// Per-thread buffers reused across calls, so large layers do not hit the allocator on every pass.
struct Scratch {
    Matrix weights;
    Matrix weight_grad;
    Eigen::VectorXd bias;
};

inline Scratch& scratch() {
    thread_local Scratch s;
    return s;
}

inline void check_params(std::span<const double> params, const MlpSpec& spec) {
    if (params.size() != spec.param_count())
        throw ContractViolation("parameter vector length " + std::to_string(params.size()) +
                                " does not match spec (" + std::to_string(spec.param_count()) + ")");
}

}  // namespace detail

/// Intermediate values kept for back-propagation. `activations[0]` is the
/// input batch; `pre[l]` is the affine output of layer l.
struct ForwardCache {
    std::vector<Matrix> pre;
    std::vector<Matrix> activations;
};

inline const Matrix& mlp_forward_cached(std::span<const double> params, const MlpSpec& spec,
                                        const Matrix& inputs, ForwardCache& cache) {
    detail::check_params(params, spec);
    if (static_cast<std::size_t>(inputs.cols()) != spec.input_dim)
        throw ContractViolation("input dimension " + std::to_string(inputs.cols()) + " does not match spec (" +
                                std::to_string(spec.input_dim) + ")");
    const auto layers = spec.layers();
    cache.pre.resize(layers.size());
    cache.activations.resize(layers.size());
    cache.activations[0] = inputs;
    detail::Scratch& scratch = detail::scratch();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const LayerShape& L = layers[l];
        // Owned copies keep the SIMD reduction order independent of where the caller's vector lives.
        Matrix& w = scratch.weights;
        w = detail::ConstRowMap(params.data() + L.offset, L.fan_out, L.fan_in);
        scratch.bias = detail::ConstVecMap(params.data() + L.bias_offset(), L.fan_out);
        Matrix& z = cache.pre[l];
        z.noalias() = cache.activations[l] * w.transpose();
        z.rowwise() += scratch.bias.transpose();
        if (l + 1 < layers.size()) detail::apply_activation(spec.activation, z, cache.activations[l + 1]);
    }
    return cache.pre.back();
}

inline Matrix mlp_forward(std::span<const double> params, const MlpSpec& spec, const Matrix& inputs) {
    ForwardCache cache;
    return mlp_forward_cached(params, spec, inputs, cache);
}

/// Accumulates d(objective)/d(params) into `grad` given d(objective)/d(output).
/// When `input_grad` is non-null it receives d(objective)/d(inputs).
inline void mlp_backward(std::span<const double> params, const MlpSpec& spec, const ForwardCache& cache,
                         const Matrix& output_grad, std::span<double> grad, Matrix* input_grad = nullptr) {
    detail::check_params(params, spec);
    if (grad.size() != params.size()) throw ContractViolation("gradient buffer has wrong length");
    const auto layers = spec.layers();
    detail::Scratch& scratch = detail::scratch();
    Matrix dz = output_grad;
    for (std::size_t l = layers.size(); l-- > 0;) {
        const LayerShape& L = layers[l];
        Matrix& w = scratch.weights;
        Matrix& dw = scratch.weight_grad;
        w = detail::ConstRowMap(params.data() + L.offset, L.fan_out, L.fan_in);
        dw.noalias() = dz.transpose() * cache.activations[l];
        scratch.bias = dz.colwise().sum().transpose();
        detail::RowMap(grad.data() + L.offset, L.fan_out, L.fan_in) += dw;
        detail::VecMap(grad.data() + L.bias_offset(), L.fan_out) += scratch.bias;
        if (l == 0 && input_grad == nullptr) break;
        Matrix da = dz * w;
        if (l == 0) {
            *input_grad = std::move(da);
            break;
        }
        detail::scale_by_derivative(spec.activation, cache.pre[l - 1], da);
        dz = std::move(da);
    }
}

struct LossResult {
    double train_loss = 0.0;  // mean of the configured loss
    double l2_loss = 0.0;     // mean squared error, whatever the configured loss
    ParamVector grad;         // exact gradient of train_loss
};

/// Action-masked regression: sample i contributes loss(targets[i] - out[i][actions[i]]),
/// other output heads receive no gradient. Writes into `result`, reusing its gradient storage.
inline void loss_and_grad_into(std::span<const double> params, const MlpSpec& spec, const Matrix& inputs,
                               std::span<const std::size_t> actions, std::span<const double> targets,
                               const Loss& loss, LossResult& result) {
    loss.validate();
    const auto batch = static_cast<std::size_t>(inputs.rows());
    if (batch == 0) throw ContractViolation("empty batch");
    if (actions.size() != batch || targets.size() != batch)
        throw ContractViolation("inputs, actions and targets must be batch-aligned");
    for (std::size_t i = 0; i < batch; ++i) {
        if (!std::isfinite(targets[i]))
            throw NumericError("non-finite regression target at batch index " + std::to_string(i));
        if (actions[i] >= spec.output_dim) throw ContractViolation("action index out of range");
    }

    ForwardCache cache;
    const Matrix& out = mlp_forward_cached(params, spec, inputs, cache);
    Matrix dout = Matrix::Zero(out.rows(), out.cols());
    result.train_loss = 0.0;
    result.l2_loss = 0.0;
    const double inv_batch = 1.0 / static_cast<double>(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        const double residual = targets[i] - out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(actions[i]));
        result.train_loss += loss.value(residual);
        result.l2_loss += residual * residual;
        dout(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(actions[i])) =
            loss.grad_prediction(residual) * inv_batch;
    }
    result.train_loss *= inv_batch;
    result.l2_loss *= inv_batch;
    result.grad.assign(params.size(), 0.0);
    mlp_backward(params, spec, cache, dout, result.grad);
}

inline LossResult loss_and_grad(std::span<const double> params, const MlpSpec& spec, const Matrix& inputs,
                                std::span<const std::size_t> actions, std::span<const double> targets,
                                const Loss& loss) {
    LossResult result;
    loss_and_grad_into(params, spec, inputs, actions, targets, loss, result);
    return result;
}

/// Mean squared error of the selected heads, without gradients.
inline double masked_mse(std::span<const double> params, const MlpSpec& spec, const Matrix& inputs,
                         std::span<const std::size_t> actions, std::span<const double> targets) {
    const Matrix out = mlp_forward(params, spec, inputs);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double r = targets[static_cast<std::size_t>(i)] - out(i, static_cast<Eigen::Index>(actions[static_cast<std::size_t>(i)]));
        sum += r * r;
    }
    return sum / static_cast<double>(out.rows());
}

inline bool all_finite(std::span<const double> values) {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace adaqn::nn
