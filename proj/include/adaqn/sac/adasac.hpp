#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

#include "adaqn/dqn/agent.hpp"
#include "adaqn/env/environment.hpp"
#include "adaqn/env/replay_buffer.hpp"
#include "adaqn/harness/run_record.hpp"
#include "adaqn/sac/policy.hpp"

namespace adaqn::sac {

using ContinuousTransition = env::Transition<env::Observation, std::vector<double>>;

struct ContinuousBatch {
    Matrix states;
    Matrix actions;
    std::vector<double> rewards;
    Matrix next_states;
    std::vector<bool> dones;

    std::size_t size() const { return rewards.size(); }
};

inline ContinuousBatch make_continuous_batch(std::span<const ContinuousTransition> items) {
    if (items.empty()) throw ContractViolation("empty batch");
    const auto n = static_cast<Eigen::Index>(items.size());
    const auto dim = static_cast<Eigen::Index>(items.front().state.size());
    const auto adim = static_cast<Eigen::Index>(items.front().action.size());
    ContinuousBatch b;
    b.states.resize(n, dim);
    b.next_states.resize(n, dim);
    b.actions.resize(n, adim);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& it = items[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < dim; ++j) {
            b.states(i, j) = it.state[static_cast<std::size_t>(j)];
            b.next_states(i, j) = it.next_state[static_cast<std::size_t>(j)];
        }
        for (Eigen::Index j = 0; j < adim; ++j) b.actions(i, j) = it.action[static_cast<std::size_t>(j)];
        b.rewards.push_back(it.reward);
        b.dones.push_back(it.done);
    }
    return b;
}

/// target <- tau * online + (1 - tau) * target
inline void polyak_update(std::span<double> target, std::span<const double> online, double tau) {
    if (target.size() != online.size()) throw ContractViolation("Polyak update between different shapes");
    for (std::size_t i = 0; i < target.size(); ++i) target[i] = tau * online[i] + (1.0 - tau) * target[i];
}

/// Indices of the two smallest entries, smaller first; ties go to the lower index.
inline std::pair<std::size_t, std::size_t> two_lowest(std::span<const double> v) {
    if (v.size() < 2) throw ContractViolation("need at least two critics");
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    return {idx[0], idx[1]};
}

/// Ordered pair of distinct indices, uniform over the K(K-1) possibilities.
inline std::pair<std::size_t, std::size_t> distinct_uniform_pair(std::size_t k, Rng& rng) {
    if (k < 2) throw ContractViolation("need at least two critics");
    const std::size_t first = uniform_index(rng, k);
    std::size_t second = uniform_index(rng, k - 1);
    if (second >= first) ++second;
    return {first, second};
}

struct AdaSacState {
    std::vector<dqn::AgentNetwork> critics;  // cum_loss holds the EMA loss
    std::vector<ParamVector> targets;
    std::size_t psi1 = 0;
    std::size_t psi2 = 1;
    GaussianPolicy policy;
    ParamVector actor;
    nn::OptimizerState actor_opt;
    double alpha = 0.2;
    double tau = 0.005;
    double gamma = 0.99;
    dqn::LinearSchedule epsilon_b;
    std::uint64_t critic_updates = 0;

    std::size_t size() const { return critics.size(); }
};

inline std::vector<double> ema_losses(const AdaSacState& s) {
    std::vector<double> out;
    for (const auto& c : s.critics) out.push_back(c.cum_loss);
    return out;
}

inline std::vector<double> critic_values(std::span<const double> params, const nn::MlpSpec& spec, const Matrix& x) {
    const Matrix q = nn::mlp_forward(params, spec, x);
    return {q.data(), q.data() + q.rows()};
}

/// y = r + gamma * (1 - done) * (min over the selected target critics of Q(s', a') - alpha * log pi(a' | s'))
/// with a' freshly drawn from the current policy.
inline std::vector<double> sac_target(const ContinuousBatch& batch, const AdaSacState& s, Rng& rng) {
    if (batch.size() == 0) throw ContractViolation("empty batch");
    const PolicySample next = policy_sample(s.actor, s.policy, batch.next_states, rng);
    const Matrix x = critic_input(batch.next_states, next.actions);
    const auto q1 = critic_values(s.targets[s.psi1], s.critics[s.psi1].hyper.arch, x);
    const auto q2 = critic_values(s.targets[s.psi2], s.critics[s.psi2].hyper.arch, x);
    std::vector<double> y(batch.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double soft = std::min(q1[i], q2[i]) - s.alpha * next.log_prob[i];
        if (!std::isfinite(soft)) throw NumericError("non-finite soft target; run aborted");
        y[i] = batch.rewards[i] + (batch.dones[i] ? 0.0 : s.gamma * soft);
    }
    return y;
}

/// One critic update: shared target, per-critic gradient step, EMA of the L2
/// loss, Polyak target update, then (psi1, psi2) from the two lowest EMA losses.
inline void critic_step(AdaSacState& s, const ContinuousBatch& batch, Rng& rng) {
    const std::vector<double> y = sac_target(batch, s, rng);
    const Matrix x = critic_input(batch.states, batch.actions);
    const std::vector<std::size_t> head(batch.size(), 0);
    for (std::size_t k = 0; k < s.size(); ++k) {
        auto& c = s.critics[k];
        thread_local nn::LossResult res;
        nn::loss_and_grad_into(c.params, c.hyper.arch, x, head, y, c.hyper.loss, res);
        c.cum_loss = (1.0 - s.tau) * c.cum_loss + s.tau * res.l2_loss;
        nn::optimizer_step(c.opt, c.params, res.grad);
        polyak_update(s.targets[k], c.params, s.tau);
    }
    std::tie(s.psi1, s.psi2) = two_lowest(ema_losses(s));
    ++s.critic_updates;
}

/// Critic pair used by the actor at step t.
inline std::pair<std::size_t, std::size_t> actor_pair(const AdaSacState& s, std::uint64_t t, Rng& rng) {
    const double eps_b = s.epsilon_b(t);
    if (eps_b > 0.0 && uniform01(rng) < eps_b) return distinct_uniform_pair(s.size(), rng);
    return {s.psi1, s.psi2};
}

/// Descends alpha * log pi - min Q over an eps_b-chosen pair of online critics.
inline std::pair<std::size_t, std::size_t> actor_step(AdaSacState& s, const ContinuousBatch& batch, std::uint64_t t,
                                                      Rng& pair_rng, Rng& noise_rng) {
    const auto pair = actor_pair(s, t, pair_rng);
    const CriticRef refs[2] = {{s.critics[pair.first].params, &s.critics[pair.first].hyper.arch},
                               {s.critics[pair.second].params, &s.critics[pair.second].hyper.arch}};
    const Matrix noise = standard_normal(batch.states.rows(), static_cast<Eigen::Index>(s.policy.action_dim), noise_rng);
    const ActorObjective obj = actor_objective(s.actor, s.policy, refs, batch.states, noise, s.alpha);
    nn::optimizer_step(s.actor_opt, s.actor, obj.grad);
    return pair;
}

struct AdaSacConfig {
    std::vector<dqn::HyperparamSet> critics;  // input/output dims are bound from the environment
    nn::MlpSpec actor_arch{3, {64, 64}, 2, nn::Activation::relu()};
    nn::OptimizerConfig actor_optimizer{nn::OptimizerKind::Adam, 3e-4};
    double gamma = 0.99;
    double tau = 0.005;
    double alpha = 0.2;
    std::uint64_t utd = 1;
    std::size_t batch_size = 256;
    std::size_t buffer_capacity = 100000;
    std::size_t initial_fill = 1000;  // uniform random actions until the buffer holds this many
    dqn::LinearSchedule epsilon_b{1.0, 0.01, 0};  // duration 0: until the end
    std::uint64_t total_steps = 30000;
    std::uint64_t checkpoint_every = 1000;
    std::uint64_t selection_log_every = 100;  // critic updates between logged selections

    void validate() const {
        if (critics.size() < 2) throw ConfigError("agent.critics", "AdaSAC needs K >= 2 critics");
        for (std::size_t k = 0; k < critics.size(); ++k) {
            try {
                critics[k].validate();
            } catch (const ContractViolation& e) {
                throw ConfigError("agent.critics[" + std::to_string(k) + "]", e.what());
            }
        }
        try {
            actor_arch.validate();
            actor_optimizer.validate();
        } catch (const ContractViolation& e) {
            throw ConfigError("agent.actor", e.what());
        }
        if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("agent.gamma", "must lie in [0, 1)");
        if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("agent.tau", "must lie in (0, 1]");
        if (!(alpha >= 0.0)) throw ConfigError("agent.alpha", "must be non-negative");
        if (utd == 0) throw ConfigError("agent.utd", "must be positive");
        if (batch_size == 0) throw ConfigError("agent.batch_size", "must be positive");
        if (buffer_capacity < batch_size) throw ConfigError("agent.buffer_capacity", "must hold at least one batch");
        if (initial_fill > buffer_capacity) throw ConfigError("agent.initial_fill", "exceeds buffer capacity");
        if (total_steps == 0) throw ConfigError("agent.total_steps", "must be positive");
        if (selection_log_every == 0) throw ConfigError("agent.selection_log_every", "must be positive");
    }
};

inline AdaSacState make_adasac_state(const AdaSacConfig& cfg, std::size_t obs_dim, std::size_t action_dim,
                                     double action_scale, Rng& init_rng) {
    cfg.validate();
    AdaSacState s;
    for (auto h : cfg.critics) {
        h.arch.input_dim = obs_dim + action_dim;
        h.arch.output_dim = 1;
        s.critics.push_back(dqn::make_agent(h, init_rng));
        s.targets.push_back(s.critics.back().params);
    }
    s.policy.arch = cfg.actor_arch;
    s.policy.arch.input_dim = obs_dim;
    s.policy.arch.output_dim = 2 * action_dim;
    s.policy.action_dim = action_dim;
    s.policy.action_scale = action_scale;
    s.policy.validate();
    s.actor = nn::mlp_init(s.policy.arch, init_rng);
    s.actor_opt = nn::OptimizerState(cfg.actor_optimizer, s.actor.size());
    s.alpha = cfg.alpha;
    s.tau = cfg.tau;
    s.gamma = cfg.gamma;
    s.epsilon_b = cfg.epsilon_b;
    if (s.epsilon_b.duration == 0) s.epsilon_b.duration = cfg.total_steps;
    return s;
}

/// Called after every environment step.
using AdaSacObserver = std::function<void(std::uint64_t step, const AdaSacState&)>;

/// Full AdaSAC loop on the pendulum. Streams: init, env, action, behavior, replay, selection.
inline harness::RunRecord run_adasac(const AdaSacConfig& cfg, env::PendulumEnv& environment, std::uint64_t seed,
                                     std::uint64_t run_index = 0, const AdaSacObserver& observer = {}) {
    Rng init_rng = make_stream(seed, run_index, "init");
    Rng env_rng = make_stream(seed, run_index, "env");
    Rng action_rng = make_stream(seed, run_index, "action");
    Rng behavior_rng = make_stream(seed, run_index, "behavior");
    Rng replay_rng = make_stream(seed, run_index, "replay");
    Rng selection_rng = make_stream(seed, run_index, "selection");

    constexpr std::size_t action_dim = 1;
    AdaSacState s = make_adasac_state(cfg, env::PendulumEnv::observation_dim(), action_dim, environment.max_action(),
                                      init_rng);

    harness::RunRecord record;
    record.seed = seed;
    record.run_index = run_index;
    for (const auto& c : s.critics) record.network_labels.push_back(c.hyper.label());
    harness::CheckpointTracker tracker(record, cfg.checkpoint_every);
    env::ReplayBuffer<ContinuousTransition> buffer(cfg.buffer_capacity);
    const std::size_t learn_after = std::max(cfg.initial_fill, cfg.batch_size);
    std::vector<std::uint64_t> pair_counts(s.size(), 0);

    env::Observation obs = environment.reset(env_rng);
    double episode_return = 0.0;
    std::uint64_t episode_length = 0;
    for (std::uint64_t t = 0; t < cfg.total_steps; ++t) {
        double torque = 0.0;
        if (buffer.size() < learn_after) {
            torque = std::uniform_real_distribution<double>(-environment.max_action(), environment.max_action())(action_rng);
        } else {
            const Matrix a = policy_sample(s.actor, s.policy, dqn::row_matrix(obs), action_rng).actions;
            torque = a(0, 0);
        }
        env::StepOutcome out = environment.step(torque);
        buffer.push({obs, {torque}, out.reward, out.observation, out.terminated});
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

        if (buffer.size() >= learn_after) {
            for (std::uint64_t u = 0; u < cfg.utd; ++u) {
                const auto items = buffer.sample(cfg.batch_size, replay_rng);
                critic_step(s, make_continuous_batch(items), selection_rng);
                if (s.critic_updates % cfg.selection_log_every == 0) {
                    harness::SelectionEvent ev;
                    ev.step = t + 1;
                    ev.selected = {s.psi1, s.psi2};
                    ev.losses = ema_losses(s);
                    ev.behavior_counts = pair_counts;
                    record.selections.push_back(std::move(ev));
                    std::fill(pair_counts.begin(), pair_counts.end(), 0);
                }
            }
            const auto items = buffer.sample(cfg.batch_size, replay_rng);
            const auto pair = actor_step(s, make_continuous_batch(items), t, behavior_rng, action_rng);
            ++pair_counts[pair.first];
            ++pair_counts[pair.second];
        }
        tracker.on_step(t + 1);
        if (observer) observer(t + 1, s);
    }
    return record;
}

/// Episode returns of a uniformly random torque policy.
inline std::vector<double> random_policy_returns(env::PendulumEnv environment, std::size_t episodes, Rng& rng) {
    std::vector<double> out;
    for (std::size_t e = 0; e < episodes; ++e) {
        environment.reset(rng);
        double ret = 0.0;
        for (;;) {
            const double u = std::uniform_real_distribution<double>(-environment.max_action(), environment.max_action())(rng);
            const env::StepOutcome o = environment.step(u);
            ret += o.reward;
            if (o.episode_over()) break;
        }
        out.push_back(ret);
    }
    return out;
}

}  // namespace adaqn::sac
