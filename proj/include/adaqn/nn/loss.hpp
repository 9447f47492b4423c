#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "adaqn/common/error.hpp"

namespace adaqn::nn {

enum class LossKind { L2, L1, Huber, LogCosh };

/// Per-sample regression loss on the residual r = target - prediction.
struct Loss {
    LossKind kind = LossKind::L2;
    double delta = 1.0;  // Huber only

    static Loss l2() { return {LossKind::L2}; }
    static Loss l1() { return {LossKind::L1}; }
    static Loss huber(double delta = 1.0) { return {LossKind::Huber, delta}; }
    static Loss log_cosh() { return {LossKind::LogCosh}; }

    void validate() const {
        if (kind == LossKind::Huber && !(delta > 0.0))
            throw ContractViolation("Huber delta must be positive");
    }

    double value(double residual) const {
        const double a = std::abs(residual);
        switch (kind) {
            case LossKind::L2: return residual * residual;
            case LossKind::L1: return a;
            case LossKind::Huber: return a <= delta ? 0.5 * residual * residual : delta * (a - 0.5 * delta);
            case LossKind::LogCosh:
                // log(cosh(r)) = |r| + log1p(exp(-2|r|)) - log 2, stable for large |r|
                return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
        }
        return 0.0;
    }

    /// d value / d prediction (note the sign: prediction enters as -r).
    double grad_prediction(double residual) const {
        switch (kind) {
            case LossKind::L2: return -2.0 * residual;
            case LossKind::L1: return residual > 0.0 ? -1.0 : (residual < 0.0 ? 1.0 : 0.0);
            case LossKind::Huber:
                if (std::abs(residual) <= delta) return -residual;
                return residual > 0.0 ? -delta : delta;
            case LossKind::LogCosh: return -std::tanh(residual);
        }
        return 0.0;
    }

    friend bool operator==(const Loss&, const Loss&) = default;
};

inline std::string to_string(const Loss& l) {
    switch (l.kind) {
        case LossKind::L2: return "l2";
        case LossKind::L1: return "l1";
        case LossKind::Huber: return "huber";
        case LossKind::LogCosh: return "log_cosh";
    }
    return "?";
}

inline Loss loss_from_string(std::string_view name) {
    if (name == "l2") return Loss::l2();
    if (name == "l1") return Loss::l1();
    if (name == "huber") return Loss::huber();
    if (name == "log_cosh") return Loss::log_cosh();
    throw ContractViolation("unknown loss '" + std::string(name) + "'");
}

}  // namespace adaqn::nn
