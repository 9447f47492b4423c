#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaqn/common/error.hpp"
#include "adaqn/common/rng.hpp"
#include "adaqn/env/environment.hpp"
#include "adaqn/env/replay_buffer.hpp"
#include "adaqn/nn/mlp.hpp"
#include "adaqn/nn/optimizer.hpp"

namespace adaqn::dqn {

using nn::Matrix;
using nn::ParamVector;
using DiscreteTransition = env::Transition<env::Observation, std::size_t>;

/// value(t) = start + (end - start) * min(t / duration, 1)
struct LinearSchedule {
    double start = 1.0;
    double end = 0.01;
    std::uint64_t duration = 1000;

    double operator()(std::uint64_t t) const {
        if (duration == 0) return end;
        const double frac = std::min(static_cast<double>(t) / static_cast<double>(duration), 1.0);
        return start + (end - start) * frac;
    }
};

/// Everything that distinguishes one ensemble member's training.
struct HyperparamSet {
    nn::MlpSpec arch;  // input/output dims are filled in from the environment
    nn::Loss loss;
    nn::OptimizerConfig optimizer;
    std::optional<double> discount;  // per-network gamma; the shared gamma otherwise

    void validate() const {
        arch.validate();
        loss.validate();
        optimizer.validate();
        if (discount && !(*discount >= 0.0 && *discount < 1.0))
            throw ContractViolation("per-network discount must lie in [0, 1)");
    }

    std::string label() const {
        std::string s = nn::describe(arch) + "/" + to_string(loss) + "/" + nn::to_string(optimizer.kind) + "@" +
                        std::to_string(optimizer.learning_rate);
        if (discount) s += "/g" + std::to_string(*discount);
        return s;
    }

    friend bool operator==(const HyperparamSet&, const HyperparamSet&) = default;
};

struct AgentNetwork {
    HyperparamSet hyper;
    ParamVector params;
    nn::OptimizerState opt;
    double cum_loss = 0.0;  // L_k: summed selection (L2) losses since the last target update
};

inline AgentNetwork make_agent(HyperparamSet hyper, Rng& rng) {
    hyper.validate();
    AgentNetwork net;
    net.params = nn::mlp_init(hyper.arch, rng);
    net.opt = nn::OptimizerState(hyper.optimizer, net.params.size());
    net.hyper = std::move(hyper);
    return net;
}

/// Column-oriented mini-batch.
struct Batch {
    Matrix states;
    std::vector<std::size_t> actions;
    std::vector<double> rewards;
    Matrix next_states;
    std::vector<bool> dones;

    std::size_t size() const { return actions.size(); }
};

inline Batch make_batch(std::span<const DiscreteTransition> items) {
    if (items.empty()) throw ContractViolation("empty batch");
    const auto dim = static_cast<Eigen::Index>(items.front().state.size());
    Batch b;
    b.states.resize(static_cast<Eigen::Index>(items.size()), dim);
    b.next_states.resize(static_cast<Eigen::Index>(items.size()), dim);
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        for (Eigen::Index j = 0; j < dim; ++j) {
            b.states(row, j) = items[i].state[static_cast<std::size_t>(j)];
            b.next_states(row, j) = items[i].next_state[static_cast<std::size_t>(j)];
        }
        b.actions.push_back(items[i].action);
        b.rewards.push_back(items[i].reward);
        b.dones.push_back(items[i].done);
    }
    return b;
}

inline Batch sample_batch(const env::ReplayBuffer<DiscreteTransition>& buffer, std::size_t batch_size, Rng& rng) {
    const auto items = buffer.sample(batch_size, rng);
    return make_batch(items);
}

inline Matrix row_matrix(std::span<const double> v) {
    Matrix m(1, static_cast<Eigen::Index>(v.size()));
    for (std::size_t j = 0; j < v.size(); ++j) m(0, static_cast<Eigen::Index>(j)) = v[j];
    return m;
}

/// max_a' Q(s', a') of the target network for every transition of the batch.
inline std::vector<double> target_max_q(std::span<const double> target_params, const nn::MlpSpec& target_spec,
                                        const Matrix& next_states) {
    const Matrix q = nn::mlp_forward(target_params, target_spec, next_states);
    if (!q.allFinite()) throw NumericError("target network produced a non-finite value; run aborted");
    std::vector<double> out(static_cast<std::size_t>(q.rows()));
    for (Eigen::Index i = 0; i < q.rows(); ++i) out[static_cast<std::size_t>(i)] = q.row(i).maxCoeff();
    return out;
}

/// y = r + gamma * (1 - done) * max_next
inline std::vector<double> bootstrap_targets(const Batch& batch, std::span<const double> max_next, double gamma) {
    std::vector<double> y(batch.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = batch.rewards[i] + (batch.dones[i] ? 0.0 : gamma * max_next[i]);
    return y;
}

/// Shared target of one training step.
inline std::vector<double> compute_shared_target(const Batch& batch, std::span<const double> target_params,
                                                 const nn::MlpSpec& target_spec, double gamma) {
    if (batch.size() == 0) throw ContractViolation("empty batch");
    return bootstrap_targets(batch, target_max_q(target_params, target_spec, batch.next_states), gamma);
}

/// Greedy with probability 1 - epsilon (lowest index on ties), uniform otherwise.
inline std::size_t act_epsilon_greedy(std::span<const double> q_values, double epsilon, Rng& rng) {
    if (q_values.empty()) throw ContractViolation("no actions");
    if (epsilon > 0.0 && uniform01(rng) < epsilon) return uniform_index(rng, q_values.size());
    return static_cast<std::size_t>(std::max_element(q_values.begin(), q_values.end()) - q_values.begin());
}

inline std::vector<double> q_values(const AgentNetwork& net, std::span<const double> observation) {
    const Matrix q = nn::mlp_forward(net.params, net.hyper.arch, row_matrix(observation));
    return {q.data(), q.data() + q.size()};
}

/// Fills in environment-dependent dims of every hyperparameter set.
inline std::vector<HyperparamSet> bind_dims(std::vector<HyperparamSet> sets, std::size_t input_dim,
                                            std::size_t output_dim) {
    for (auto& h : sets) {
        h.arch.input_dim = input_dim;
        h.arch.output_dim = output_dim;
    }
    return sets;
}

}  // namespace adaqn::dqn
