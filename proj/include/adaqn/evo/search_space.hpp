#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "adaqn/common/error.hpp"
#include "adaqn/common/rng.hpp"
#include "adaqn/dqn/agent.hpp"
#include "adaqn/nn/transfer.hpp"

namespace adaqn::evo {

enum class MutationCategory { Architecture, Activation, Loss, Optimizer, LearningRate };
inline constexpr std::size_t kMutationCategoryCount = 5;

enum class ArchitectureOp { None, AddLayer, RemoveLayer, AddNeurons, RemoveNeurons };

inline std::string to_string(MutationCategory c) {
    switch (c) {
        case MutationCategory::Architecture: return "architecture";
        case MutationCategory::Activation: return "activation";
        case MutationCategory::Loss: return "loss";
        case MutationCategory::Optimizer: return "optimizer";
        case MutationCategory::LearningRate: return "learning_rate";
    }
    return "?";
}

/// Hyperparameter ranges explored by the population.
struct SearchSpace {
    std::vector<nn::Activation> activations{nn::Activation::relu(), nn::Activation::sigmoid(), nn::Activation::tanh(),
                                            nn::Activation::leaky_relu(), nn::Activation::silu()};
    std::vector<nn::OptimizerKind> optimizers{nn::OptimizerKind::SGD, nn::OptimizerKind::Adam,
                                              nn::OptimizerKind::AdamW, nn::OptimizerKind::RMSProp};
    std::vector<nn::Loss> losses{{nn::LossKind::L2}, {nn::LossKind::L1}, {nn::LossKind::Huber}, {nn::LossKind::LogCosh}};
    double lr_min = 1e-6;
    double lr_max = 1e-3;
    std::size_t min_layers = 0;
    std::size_t max_layers = 2;
    std::size_t min_width = 25;
    std::size_t max_width = 512;
    double layer_op_probability = 0.2;  // neuron op otherwise
    std::size_t neuron_step = 16;
    double lr_log10_step = 0.5;         // multiplicative factor 10^U(-step, step)

    void validate() const {
        if (activations.empty() || optimizers.empty() || losses.empty())
            throw ConfigError("search_space", "every categorical menu needs at least one entry");
        if (!(lr_min > 0.0 && lr_min <= lr_max)) throw ConfigError("search_space.lr", "need 0 < lr_min <= lr_max");
        if (min_layers > max_layers) throw ConfigError("search_space.layers", "min_layers > max_layers");
        if (min_width == 0 || min_width > max_width) throw ConfigError("search_space.width", "need 1 <= min <= max");
        if (!(layer_op_probability >= 0.0 && layer_op_probability <= 1.0))
            throw ConfigError("search_space.layer_op_probability", "must lie in [0, 1]");
    }

    bool contains(const dqn::HyperparamSet& h) const {
        const auto& a = h.arch;
        if (a.hidden.size() < min_layers || a.hidden.size() > max_layers) return false;
        for (std::size_t w : a.hidden)
            if (w < min_width || w > max_width) return false;
        if (std::find(activations.begin(), activations.end(), a.activation) == activations.end()) return false;
        if (std::find(losses.begin(), losses.end(), h.loss) == losses.end()) return false;
        if (std::find(optimizers.begin(), optimizers.end(), h.optimizer.kind) == optimizers.end()) return false;
        return h.optimizer.learning_rate >= lr_min && h.optimizer.learning_rate <= lr_max;
    }
};

struct MutationRecord {
    MutationCategory category = MutationCategory::Architecture;
    ArchitectureOp arch_op = ArchitectureOp::None;
};

namespace detail {

/// Uniform pick among the menu entries different from `current`; `current` when the menu has nothing else.
template <class T>
T pick_other(const std::vector<T>& menu, const T& current, Rng& rng) {
    std::vector<T> others;
    for (const auto& m : menu)
        if (!(m == current)) others.push_back(m);
    if (others.empty()) return current;
    return others[uniform_index(rng, others.size())];
}

inline std::size_t clip_width(long long w, const SearchSpace& sp) {
    return static_cast<std::size_t>(
        std::clamp<long long>(w, static_cast<long long>(sp.min_width), static_cast<long long>(sp.max_width)));
}

inline ArchitectureOp mutate_layers(nn::MlpSpec& a, const SearchSpace& sp, Rng& rng) {
    const bool add = uniform01(rng) < 0.5;
    if (add && a.hidden.size() < sp.max_layers) {
        const std::size_t width = a.hidden.empty() ? clip_width(64, sp) : a.hidden.back();
        a.hidden.push_back(width);
        return ArchitectureOp::AddLayer;
    }
    if (!add && a.hidden.size() > sp.min_layers) {
        a.hidden.pop_back();
        return ArchitectureOp::RemoveLayer;
    }
    return add ? ArchitectureOp::AddLayer : ArchitectureOp::RemoveLayer;  // clipped at the boundary
}

inline ArchitectureOp mutate_neurons(nn::MlpSpec& a, const SearchSpace& sp, Rng& rng) {
    const std::size_t layer = uniform_index(rng, a.hidden.size());
    const bool add = uniform01(rng) < 0.5;
    const auto step = static_cast<long long>(sp.neuron_step);
    a.hidden[layer] = clip_width(static_cast<long long>(a.hidden[layer]) + (add ? step : -step), sp);
    return add ? ArchitectureOp::AddNeurons : ArchitectureOp::RemoveNeurons;
}

}  // namespace detail

/// Clips every numeric hyperparameter into the space.
inline void clip_to_space(dqn::HyperparamSet& h, const SearchSpace& sp) {
    h.optimizer.learning_rate = std::clamp(h.optimizer.learning_rate, sp.lr_min, sp.lr_max);
    while (h.arch.hidden.size() > sp.max_layers) h.arch.hidden.pop_back();
    while (h.arch.hidden.size() < sp.min_layers) h.arch.hidden.push_back(sp.min_width);
    for (auto& w : h.arch.hidden) w = std::clamp(w, sp.min_width, sp.max_width);
}

/// One mutation drawn uniformly over the five categories. Weights are carried
/// over where shapes overlap and the optimizer state is always reset.
inline MutationRecord mutate(dqn::AgentNetwork& member, const SearchSpace& sp, Rng& rng) {
    MutationRecord rec;
    rec.category = static_cast<MutationCategory>(uniform_index(rng, kMutationCategoryCount));
    dqn::HyperparamSet h = member.hyper;
    switch (rec.category) {
        case MutationCategory::Architecture: {
            const bool layer_op = h.arch.hidden.empty() || uniform01(rng) < sp.layer_op_probability;
            rec.arch_op = layer_op ? detail::mutate_layers(h.arch, sp, rng) : detail::mutate_neurons(h.arch, sp, rng);
            break;
        }
        case MutationCategory::Activation:
            h.arch.activation = detail::pick_other(sp.activations, h.arch.activation, rng);
            break;
        case MutationCategory::Loss: h.loss = detail::pick_other(sp.losses, h.loss, rng); break;
        case MutationCategory::Optimizer:
            h.optimizer.kind = detail::pick_other(sp.optimizers, h.optimizer.kind, rng);
            break;
        case MutationCategory::LearningRate: {
            const double e = std::uniform_real_distribution<double>(-sp.lr_log10_step, sp.lr_log10_step)(rng);
            h.optimizer.learning_rate *= std::pow(10.0, e);
            break;
        }
    }
    clip_to_space(h, sp);
    member.params = nn::weight_transfer(member.params, member.hyper.arch, h.arch, rng);
    member.hyper = std::move(h);
    member.opt = nn::OptimizerState(member.hyper.optimizer, member.params.size());
    member.cum_loss = 0.0;
    return rec;
}

/// Uniform random hyperparameters inside the space (learning rate log-uniform).
inline dqn::HyperparamSet sample_hyperparams(const SearchSpace& sp, Rng& rng) {
    sp.validate();
    dqn::HyperparamSet h;
    const std::size_t layers = sp.min_layers + uniform_index(rng, sp.max_layers - sp.min_layers + 1);
    for (std::size_t l = 0; l < layers; ++l) h.arch.hidden.push_back(sp.min_width + uniform_index(rng, sp.max_width - sp.min_width + 1));
    h.arch.activation = sp.activations[uniform_index(rng, sp.activations.size())];
    h.loss = sp.losses[uniform_index(rng, sp.losses.size())];
    h.optimizer.kind = sp.optimizers[uniform_index(rng, sp.optimizers.size())];
    const double lo = std::log10(sp.lr_min), hi = std::log10(sp.lr_max);
    h.optimizer.learning_rate = std::pow(10.0, std::uniform_real_distribution<double>(lo, hi)(rng));
    return h;
}

}  // namespace adaqn::evo
