#pragma once

#include <functional>

#include "adaqn/dqn/adadqn.hpp"

namespace adaqn::dqn {

/// Plain single-network DQN. Kept as its own loop so that the K = 1 AdaDQN
/// reduction can be checked against it; it consumes the same named streams.
struct DqnConfig {
    HyperparamSet network;
    double gamma = 0.99;
    std::uint64_t target_update_period = 200;
    std::uint64_t train_period = 1;
    std::size_t buffer_capacity = 10000;
    std::size_t initial_fill = 1000;
    std::size_t batch_size = 32;
    LinearSchedule epsilon{1.0, 0.01, 1000};
    std::uint64_t total_steps = 20000;
    std::uint64_t checkpoint_every = 1000;

    /// Shared settings of an AdaDQN config with one of its networks.
    static DqnConfig from(const AdaDqnConfig& c, std::size_t network_index) {
        DqnConfig d;
        d.network = c.networks.at(network_index);
        d.gamma = c.gamma;
        d.target_update_period = c.target_update_period;
        d.train_period = c.train_period;
        d.buffer_capacity = c.buffer_capacity;
        d.initial_fill = c.initial_fill;
        d.batch_size = c.batch_size;
        d.epsilon = c.epsilon;
        d.total_steps = c.total_steps;
        d.checkpoint_every = c.checkpoint_every;
        return d;
    }
};

using DqnObserver = std::function<void(std::uint64_t step, const ParamVector& online, const ParamVector& target)>;

inline harness::RunRecord run_dqn(const DqnConfig& cfg, env::DiscreteEnvironment& environment, std::uint64_t seed,
                                  std::uint64_t run_index = 0, const DqnObserver& observer = {}) {
    Rng init_rng = make_stream(seed, run_index, "init");
    Rng env_rng = make_stream(seed, run_index, "env");
    Rng action_rng = make_stream(seed, run_index, "action");
    Rng replay_rng = make_stream(seed, run_index, "replay");

    HyperparamSet hyper = cfg.network;
    hyper.arch.input_dim = environment.observation_dim();
    hyper.arch.output_dim = environment.action_count();
    hyper.validate();
    const nn::MlpSpec& spec = hyper.arch;
    const double gamma = hyper.discount.value_or(cfg.gamma);

    ParamVector online = nn::mlp_init(spec, init_rng);
    ParamVector target = online;
    nn::OptimizerState opt(hyper.optimizer, online.size());

    harness::RunRecord record;
    record.seed = seed;
    record.run_index = run_index;
    record.network_labels = {hyper.label()};
    harness::CheckpointTracker tracker(record, cfg.checkpoint_every);
    env::ReplayBuffer<DiscreteTransition> buffer(cfg.buffer_capacity);
    const std::size_t learn_after = std::max(cfg.initial_fill, cfg.batch_size);

    env::Observation obs = environment.reset(env_rng);
    double episode_return = 0.0;
    std::uint64_t episode_length = 0;
    nn::LossResult res;
    for (std::uint64_t t = 0; t < cfg.total_steps; ++t) {
        const Matrix q = nn::mlp_forward(online, spec, row_matrix(obs));
        const std::size_t action =
            act_epsilon_greedy(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())), cfg.epsilon(t),
                               action_rng);
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

        if (buffer.size() >= learn_after && (t + 1) % cfg.train_period == 0) {
            const Batch batch = sample_batch(buffer, cfg.batch_size, replay_rng);
            const auto y = compute_shared_target(batch, target, spec, gamma);
            nn::loss_and_grad_into(online, spec, batch.states, batch.actions, y, hyper.loss, res);
            nn::optimizer_step(opt, online, res.grad);
        }
        if ((t + 1) % cfg.target_update_period == 0) target = online;
        tracker.on_step(t + 1);
        if (observer) observer(t + 1, online, target);
    }
    return record;
}

}  // namespace adaqn::dqn
