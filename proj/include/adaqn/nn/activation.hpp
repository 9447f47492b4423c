#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "adaqn/common/error.hpp"

namespace adaqn::nn {

enum class ActivationKind { ReLU, Sigmoid, Tanh, LeakyReLU, SiLU };

struct Activation {
    ActivationKind kind = ActivationKind::ReLU;
    double slope = 0.01;  // LeakyReLU only

    static Activation relu() { return {ActivationKind::ReLU}; }
    static Activation sigmoid() { return {ActivationKind::Sigmoid}; }
    static Activation tanh() { return {ActivationKind::Tanh}; }
    static Activation leaky_relu(double slope = 0.01) { return {ActivationKind::LeakyReLU, slope}; }
    static Activation silu() { return {ActivationKind::SiLU}; }

    void validate() const {
        if (kind == ActivationKind::LeakyReLU && !(slope > 0.0 && slope < 1.0))
            throw ContractViolation("LeakyReLU slope must lie in (0, 1)");
    }

    double operator()(double z) const {
        switch (kind) {
            case ActivationKind::ReLU: return z > 0.0 ? z : 0.0;
            case ActivationKind::Sigmoid: return logistic(z);
            case ActivationKind::Tanh: return std::tanh(z);
            case ActivationKind::LeakyReLU: return z > 0.0 ? z : slope * z;
            case ActivationKind::SiLU: return z * logistic(z);
        }
        return z;
    }

    /// d act(z) / dz, evaluated at the pre-activation.
    double derivative(double z) const {
        switch (kind) {
            case ActivationKind::ReLU: return z > 0.0 ? 1.0 : 0.0;
            case ActivationKind::Sigmoid: {
                const double s = logistic(z);
                return s * (1.0 - s);
            }
            case ActivationKind::Tanh: {
                const double t = std::tanh(z);
                return 1.0 - t * t;
            }
            case ActivationKind::LeakyReLU: return z > 0.0 ? 1.0 : slope;
            case ActivationKind::SiLU: {
                const double s = logistic(z);
                return s * (1.0 + z * (1.0 - s));
            }
        }
        return 1.0;
    }

    static double logistic(double z) {
        if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
        const double e = std::exp(z);
        return e / (1.0 + e);
    }

    friend bool operator==(const Activation&, const Activation&) = default;
};

inline std::string to_string(const Activation& a) {
    switch (a.kind) {
        case ActivationKind::ReLU: return "relu";
        case ActivationKind::Sigmoid: return "sigmoid";
        case ActivationKind::Tanh: return "tanh";
        case ActivationKind::LeakyReLU: return "leaky_relu";
        case ActivationKind::SiLU: return "silu";
    }
    return "?";
}

inline Activation activation_from_string(std::string_view name) {
    if (name == "relu") return Activation::relu();
    if (name == "sigmoid") return Activation::sigmoid();
    if (name == "tanh") return Activation::tanh();
    if (name == "leaky_relu") return Activation::leaky_relu();
    if (name == "silu") return Activation::silu();
    throw ContractViolation("unknown activation '" + std::string(name) + "'");
}

}  // namespace adaqn::nn
