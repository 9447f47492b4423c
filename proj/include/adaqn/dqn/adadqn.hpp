#pragma once

#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "adaqn/dqn/agent.hpp"
#include "adaqn/harness/run_record.hpp"

namespace adaqn::dqn {

/// How the next shared target is picked from the cumulative losses.
enum class SelectionMode {
    Argmin,   // AdaDQN
    Argmax,   // AdaDQN-max ablation
    Uniform,  // RandDQN ablation
};

/// Which online network acts in the environment.
enum class BehaviorMode {
    EpsilonB,          // uniform member w.p. eps_b(t), psi otherwise
    AlwaysPsi,         // the eps_b = 0 ablation
    LossProportional,  // p_k proportional to 1 / (L_k + eps0)
};

inline constexpr double kLossProportionalFloor = 1e-8;

struct AdaDqnState {
    std::vector<AgentNetwork> networks;
    ParamVector target_params;  // snapshot of networks[psi].params at the last target update
    nn::MlpSpec target_spec;
    std::size_t psi = 0;
    double selection_gamma = 0.99;
    LinearSchedule epsilon;
    LinearSchedule epsilon_b;
    SelectionMode selection_mode = SelectionMode::Argmin;
    BehaviorMode behavior_mode = BehaviorMode::EpsilonB;
    std::uint64_t gradient_steps = 0;
    std::uint64_t target_updates = 0;

    std::size_t size() const { return networks.size(); }
};

/// psi = 0, target = copy of network 0, all L_k = 0.
inline AdaDqnState make_adadqn_state(std::vector<AgentNetwork> networks, double selection_gamma) {
    if (networks.empty()) throw ContractViolation("AdaDQN needs at least one network");
    AdaDqnState s;
    s.networks = std::move(networks);
    s.selection_gamma = selection_gamma;
    s.target_params = s.networks[0].params;
    s.target_spec = s.networks[0].hyper.arch;
    return s;
}

inline std::size_t sample_loss_proportional(std::span<const double> losses, Rng& rng) {
    if (losses.empty()) throw ContractViolation("empty loss vector");
    std::vector<double> w(losses.size());
    for (std::size_t k = 0; k < losses.size(); ++k) {
        if (!(losses[k] >= 0.0)) throw ContractViolation("losses must be non-negative");
        w[k] = 1.0 / (losses[k] + kLossProportionalFloor);
    }
    return std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
}

inline std::size_t select_behavior_index(const AdaDqnState& s, std::uint64_t t, Rng& rng) {
    const std::size_t k = s.size();
    if (k == 1) return 0;
    switch (s.behavior_mode) {
        case BehaviorMode::AlwaysPsi: return s.psi;
        case BehaviorMode::LossProportional: {
            std::vector<double> losses;
            for (const auto& n : s.networks) losses.push_back(n.cum_loss);
            return sample_loss_proportional(losses, rng);
        }
        case BehaviorMode::EpsilonB: break;
    }
    const double eps_b = s.epsilon_b(t);
    if (eps_b > 0.0 && uniform01(rng) < eps_b) return uniform_index(rng, k);
    return s.psi;
}

/// Per-network targets from one shared target network. All networks share the
/// bootstrap max; only the discount can differ.
struct SharedTargets {
    std::vector<double> selection;                // built with the selection gamma
    std::vector<std::vector<double>> per_network;  // empty unless some network has its own discount
};

inline SharedTargets make_shared_targets(const AdaDqnState& s, const Batch& batch) {
    SharedTargets out;
    const auto max_next = target_max_q(s.target_params, s.target_spec, batch.next_states);
    out.selection = bootstrap_targets(batch, max_next, s.selection_gamma);
    const bool heterogeneous = std::any_of(s.networks.begin(), s.networks.end(),
                                           [](const AgentNetwork& n) { return n.hyper.discount.has_value(); });
    if (heterogeneous)
        for (const auto& n : s.networks)
            out.per_network.push_back(
                n.hyper.discount ? bootstrap_targets(batch, max_next, *n.hyper.discount) : out.selection);
    return out;
}

/// One gradient step for one ensemble member. L_k accumulates the L2 loss
/// against `selection_targets` when given, against `train_targets` otherwise.
inline void train_member(AgentNetwork& net, const Batch& batch, std::span<const double> train_targets,
                         std::span<const double> selection_targets = {}) {
    thread_local nn::LossResult res;
    nn::loss_and_grad_into(net.params, net.hyper.arch, batch.states, batch.actions, train_targets, net.hyper.loss, res);
    const double selection_loss = selection_targets.empty()
                                      ? res.l2_loss
                                      : nn::masked_mse(net.params, net.hyper.arch, batch.states, batch.actions,
                                                       selection_targets);
    net.cum_loss += selection_loss;
    nn::optimizer_step(net.opt, net.params, res.grad);
}

/// Every network takes one step on the same batch and the same target.
/// `order` permutes the member loop (results do not depend on it).
inline void train_step(AdaDqnState& s, const Batch& batch, std::span<const std::size_t> order = {}) {
    const SharedTargets targets = make_shared_targets(s, batch);
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (!order.empty()) {
        if (order.size() != s.size()) throw ContractViolation("loop order must be a permutation of the ensemble");
        idx.assign(order.begin(), order.end());
    }
    for (std::size_t k : idx) {
        if (targets.per_network.empty())
            train_member(s.networks[k], batch, targets.selection);
        else
            train_member(s.networks[k], batch, targets.per_network[k], targets.selection);
    }
    ++s.gradient_steps;
}

inline std::size_t argmin_index(std::span<const double> v) {
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

inline std::size_t argmax_index(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline std::vector<double> cumulative_losses(const AdaDqnState& s) {
    std::vector<double> out;
    for (const auto& n : s.networks) out.push_back(n.cum_loss);
    return out;
}

/// Picks psi from the cumulative losses, resets them, and snapshots theta^psi
/// into the target. Returns the loss vector used for the decision.
inline std::vector<double> target_update(AdaDqnState& s, Rng& rng) {
    std::vector<double> losses = cumulative_losses(s);
    switch (s.selection_mode) {
        case SelectionMode::Argmin: s.psi = argmin_index(losses); break;
        case SelectionMode::Argmax: s.psi = argmax_index(losses); break;
        case SelectionMode::Uniform: s.psi = uniform_index(rng, s.size()); break;
    }
    for (auto& n : s.networks) n.cum_loss = 0.0;
    s.target_params = s.networks[s.psi].params;
    s.target_spec = s.networks[s.psi].hyper.arch;
    ++s.target_updates;
    return losses;
}

struct AdaDqnConfig {
    std::vector<HyperparamSet> networks;
    double gamma = 0.99;  // shared discount, also the selection discount
    std::uint64_t target_update_period = 200;  // T
    std::uint64_t train_period = 1;            // G
    std::size_t buffer_capacity = 10000;
    std::size_t initial_fill = 1000;
    std::size_t batch_size = 32;
    LinearSchedule epsilon{1.0, 0.01, 1000};
    LinearSchedule epsilon_b{1.0, 0.01, 0};  // duration 0: decay until the end of training
    SelectionMode selection_mode = SelectionMode::Argmin;
    BehaviorMode behavior_mode = BehaviorMode::EpsilonB;
    std::uint64_t total_steps = 20000;
    std::uint64_t checkpoint_every = 1000;

    void validate() const {
        if (networks.empty()) throw ConfigError("agent.networks", "at least one network is required");
        for (std::size_t k = 0; k < networks.size(); ++k) {
            try {
                networks[k].validate();
            } catch (const ContractViolation& e) {
                throw ConfigError("agent.networks[" + std::to_string(k) + "]", e.what());
            }
        }
        if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("agent.gamma", "must lie in [0, 1)");
        if (target_update_period == 0) throw ConfigError("agent.T", "must be positive");
        if (train_period == 0) throw ConfigError("agent.G", "must be positive");
        if (batch_size == 0) throw ConfigError("agent.batch_size", "must be positive");
        if (buffer_capacity < batch_size) throw ConfigError("agent.buffer_capacity", "must hold at least one batch");
        if (initial_fill > buffer_capacity) throw ConfigError("agent.initial_fill", "exceeds buffer capacity");
        if (total_steps == 0) throw ConfigError("agent.total_steps", "must be positive");
    }

    LinearSchedule resolved_epsilon_b() const {
        LinearSchedule s = epsilon_b;
        if (s.duration == 0) s.duration = total_steps;
        return s;
    }
};

/// Called after every environment step (after any training / target update).
using AdaDqnObserver = std::function<void(std::uint64_t step, const AdaDqnState&)>;

/// Full AdaDQN loop. Streams: init, env, action, behavior, replay, selection.
inline harness::RunRecord run_adadqn(const AdaDqnConfig& cfg, env::DiscreteEnvironment& environment,
                                     std::uint64_t seed, std::uint64_t run_index = 0,
                                     const AdaDqnObserver& observer = {}) {
    cfg.validate();
    Rng init_rng = make_stream(seed, run_index, "init");
    Rng env_rng = make_stream(seed, run_index, "env");
    Rng action_rng = make_stream(seed, run_index, "action");
    Rng behavior_rng = make_stream(seed, run_index, "behavior");
    Rng replay_rng = make_stream(seed, run_index, "replay");
    Rng selection_rng = make_stream(seed, run_index, "selection");

    const auto hypers = bind_dims(cfg.networks, environment.observation_dim(), environment.action_count());
    std::vector<AgentNetwork> nets;
    for (const auto& h : hypers) nets.push_back(make_agent(h, init_rng));
    AdaDqnState state = make_adadqn_state(std::move(nets), cfg.gamma);
    state.epsilon = cfg.epsilon;
    state.epsilon_b = cfg.resolved_epsilon_b();
    state.selection_mode = cfg.selection_mode;
    state.behavior_mode = cfg.behavior_mode;

    harness::RunRecord record;
    record.seed = seed;
    record.run_index = run_index;
    for (const auto& h : hypers) record.network_labels.push_back(h.label());
    harness::CheckpointTracker tracker(record, cfg.checkpoint_every);

    env::ReplayBuffer<DiscreteTransition> buffer(cfg.buffer_capacity);
    const std::size_t learn_after = std::max(cfg.initial_fill, cfg.batch_size);
    std::vector<std::uint64_t> behavior_counts(state.size(), 0);

    env::Observation obs = environment.reset(env_rng);
    double episode_return = 0.0;
    std::uint64_t episode_length = 0;
    for (std::uint64_t t = 0; t < cfg.total_steps; ++t) {
        const std::size_t kb = select_behavior_index(state, t, behavior_rng);
        ++behavior_counts[kb];
        const auto q = q_values(state.networks[kb], obs);
        const std::size_t action = act_epsilon_greedy(q, state.epsilon(t), action_rng);
        env::StepOutcome out = environment.step(action, env_rng);
        buffer.push({obs, action, out.reward, out.observation, out.terminated});
        episode_return += out.reward;
        ++episode_length;
        ++record.ledger.training_steps;
        obs = std::move(out.observation);
        if (out.episode_over()) {
            tracker.on_episode(t + 1, episode_return, episode_length);
            episode_return = 0.0;
            episode_length = 0;
            obs = environment.reset(env_rng);
        }

        if (buffer.size() >= learn_after && (t + 1) % cfg.train_period == 0)
            train_step(state, sample_batch(buffer, cfg.batch_size, replay_rng));

        if ((t + 1) % cfg.target_update_period == 0) {
            harness::SelectionEvent ev;
            ev.step = t + 1;
            ev.losses = target_update(state, selection_rng);
            ev.selected = {state.psi};
            ev.behavior_counts = behavior_counts;
            record.selections.push_back(std::move(ev));
            std::fill(behavior_counts.begin(), behavior_counts.end(), 0);
        }
        tracker.on_step(t + 1);
        if (observer) observer(t + 1, state);
    }
    return record;
}

}  // namespace adaqn::dqn
