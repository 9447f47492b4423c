#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adaqn/common/error.hpp"
#include "adaqn/nn/mlp.hpp"

namespace adaqn::nn {

enum class OptimizerKind { SGD, Adam, AdamW, RMSProp };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 3e-4;
    double eps = 1e-8;
    double weight_decay = 0.0;  // AdamW only

    void validate() const {
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
            throw ContractViolation("learning rate must be positive");
        if (!(eps > 0.0)) throw ContractViolation("optimizer eps must be positive");
        if (!(weight_decay >= 0.0)) throw ContractViolation("weight decay must be non-negative");
    }

    friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kRmsPropDecay = 0.99;

struct OptimizerState {
    OptimizerConfig config;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::uint64_t step = 0;

    OptimizerState() = default;
    OptimizerState(const OptimizerConfig& cfg, std::size_t param_count)
        : config(cfg), first_moment(param_count, 0.0), second_moment(param_count, 0.0) {
        config.validate();
    }

    /// Fresh accumulators, same hyperparameters.
    void reset(std::size_t param_count) {
        first_moment.assign(param_count, 0.0);
        second_moment.assign(param_count, 0.0);
        step = 0;
    }
};

// Eigen's vectorized sqrt and its scalar fallback round differently, and the
// split between them follows the destination's alignment. An owned (aligned)
// destination makes the split depend on the length alone.
inline Eigen::ArrayXd& sqrt_scratch(Eigen::Index size) {
    thread_local Eigen::ArrayXd buf;
    buf.resize(size);
    return buf;
}

inline void optimizer_step(OptimizerState& opt, std::span<double> params, std::span<const double> grad) {
    const std::size_t n = params.size();
    if (grad.size() != n || opt.first_moment.size() != n || opt.second_moment.size() != n)
        throw ContractViolation("optimizer shapes do not match the parameter vector");
    if (!all_finite(grad)) throw NumericError("non-finite gradient; optimizer step refused");

    const OptimizerConfig& c = opt.config;
    ++opt.step;
    using Array = Eigen::ArrayXd;
    const auto size = static_cast<Eigen::Index>(n);
    Eigen::Map<Array> p(params.data(), size);
    const Eigen::Map<const Array> g(grad.data(), size);
    Eigen::Map<Array> m(opt.first_moment.data(), size);
    Eigen::Map<Array> v(opt.second_moment.data(), size);
    switch (c.kind) {
        case OptimizerKind::SGD:
            p -= c.learning_rate * g;
            break;
        case OptimizerKind::Adam:
        case OptimizerKind::AdamW: {
            const double t = static_cast<double>(opt.step);
            const double c1 = 1.0 - std::pow(kAdamBeta1, t);
            const double c2 = 1.0 - std::pow(kAdamBeta2, t);
            m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
            v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.square();
            if (c.kind == OptimizerKind::AdamW && c.weight_decay != 0.0) p -= (c.learning_rate * c.weight_decay) * p;
            Array& d = sqrt_scratch(size);
            d = (v / c2).sqrt();
            p -= c.learning_rate * (m / c1) / (d + c.eps);
            break;
        }
        case OptimizerKind::RMSProp:
            v = kRmsPropDecay * v + (1.0 - kRmsPropDecay) * g.square();
            Array& d = sqrt_scratch(size);
            d = v.sqrt();
            p -= c.learning_rate * g / (d + c.eps);
            break;
    }
}

inline std::string to_string(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::SGD: return "sgd";
        case OptimizerKind::Adam: return "adam";
        case OptimizerKind::AdamW: return "adamw";
        case OptimizerKind::RMSProp: return "rmsprop";
    }
    return "?";
}

inline OptimizerKind optimizer_from_string(std::string_view name) {
    if (name == "sgd") return OptimizerKind::SGD;
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "adamw") return OptimizerKind::AdamW;
    if (name == "rmsprop") return OptimizerKind::RMSProp;
    throw ContractViolation("unknown optimizer '" + std::string(name) + "'");
}

}  // namespace adaqn::nn
