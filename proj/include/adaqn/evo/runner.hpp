#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "adaqn/dqn/adadqn.hpp"
#include "adaqn/evo/population.hpp"
#include "adaqn/harness/run_record.hpp"

namespace adaqn::evo {

enum class FitnessKind {
    NegCumLoss,  // approximation-error fitness, no evaluation interaction
    EvalReturn,  // evaluated return, as in SEARL
};

struct EvoConfig {
    std::vector<dqn::HyperparamSet> initial_population;  // empty: sampled from the search space
    std::size_t population_size = 5;
    SearchSpace space;
    FitnessKind fitness = FitnessKind::NegCumLoss;
    SelectionScheme selection = SelectionScheme::Tournament;
    std::size_t tournament_size = 3;
    std::uint64_t hp_period = 2000;      // M: environment steps per generation
    std::uint64_t min_eval_steps = 0;    // per member and generation; 0 means ceil(M / K)
    double gamma = 0.99;
    std::uint64_t target_update_period = 200;
    std::uint64_t train_period = 1;
    std::size_t buffer_capacity = 10000;
    std::size_t initial_fill = 1000;
    std::size_t batch_size = 32;
    dqn::LinearSchedule epsilon{1.0, 0.01, 1000};
    std::uint64_t total_steps = 20000;
    std::uint64_t checkpoint_every = 1000;

    std::size_t members() const {
        return initial_population.empty() ? population_size : initial_population.size();
    }

    std::uint64_t eval_steps_per_member() const {
        if (min_eval_steps > 0) return min_eval_steps;
        const auto k = static_cast<std::uint64_t>(members());
        return (hp_period + k - 1) / k;
    }

    void validate() const {
        space.validate();
        if (members() < tournament_size) throw ConfigError("agent.population_size", "must be at least the tournament size");
        if (tournament_size == 0) throw ConfigError("agent.tournament_size", "must be positive");
        for (std::size_t k = 0; k < initial_population.size(); ++k) {
            try {
                initial_population[k].validate();
            } catch (const ContractViolation& e) {
                throw ConfigError("agent.initial_population[" + std::to_string(k) + "]", e.what());
            }
        }
        if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("agent.gamma", "must lie in [0, 1)");
        if (hp_period == 0) throw ConfigError("agent.M", "must be positive");
        if (target_update_period == 0) throw ConfigError("agent.T", "must be positive");
        if (fitness == FitnessKind::NegCumLoss && hp_period % target_update_period != 0)
            throw ConfigError("agent.M", "must be a multiple of T so generations coincide with target updates");
        if (train_period == 0) throw ConfigError("agent.G", "must be positive");
        if (batch_size == 0) throw ConfigError("agent.batch_size", "must be positive");
        if (buffer_capacity < batch_size) throw ConfigError("agent.buffer_capacity", "must hold at least one batch");
        if (initial_fill > buffer_capacity) throw ConfigError("agent.initial_fill", "exceeds buffer capacity");
        if (total_steps == 0) throw ConfigError("agent.total_steps", "must be positive");
    }
};

namespace detail {

inline std::vector<dqn::AgentNetwork> initial_members(const EvoConfig& cfg, std::size_t in, std::size_t out,
                                                      Rng& init_rng) {
    std::vector<dqn::HyperparamSet> hs = cfg.initial_population;
    if (hs.empty())
        for (std::size_t k = 0; k < cfg.population_size; ++k) hs.push_back(sample_hyperparams(cfg.space, init_rng));
    std::vector<dqn::AgentNetwork> nets;
    for (auto& h : dqn::bind_dims(hs, in, out)) nets.push_back(dqn::make_agent(h, init_rng));
    return nets;
}

inline std::vector<std::string> labels_of(const std::vector<dqn::AgentNetwork>& nets) {
    std::vector<std::string> out;
    for (const auto& n : nets) out.push_back(n.hyper.label());
    return out;
}

}  // namespace detail

using EvoObserver = std::function<void(std::uint64_t step, const std::vector<dqn::AgentNetwork>&)>;

/// AdaQN with an evolving population: a single shared target chosen by the
/// cumulative L2 loss, loss-proportional behaviour, and a generation every M
/// steps whose fitness is the negated loss vector of the last target period.
inline harness::RunRecord run_evo_negcumloss(const EvoConfig& cfg, env::DiscreteEnvironment& environment,
                                             std::uint64_t seed, std::uint64_t run_index = 0,
                                             const EvoObserver& observer = {}) {
    cfg.validate();
    if (cfg.fitness != FitnessKind::NegCumLoss) throw ContractViolation("configuration requests evaluation fitness");
    Rng init_rng = make_stream(seed, run_index, "init");
    Rng env_rng = make_stream(seed, run_index, "env");
    Rng action_rng = make_stream(seed, run_index, "action");
    Rng behavior_rng = make_stream(seed, run_index, "behavior");
    Rng replay_rng = make_stream(seed, run_index, "replay");
    Rng selection_rng = make_stream(seed, run_index, "selection");
    Rng mutation_rng = make_stream(seed, run_index, "mutation");

    dqn::AdaDqnState state = dqn::make_adadqn_state(
        detail::initial_members(cfg, environment.observation_dim(), environment.action_count(), init_rng), cfg.gamma);
    state.epsilon = cfg.epsilon;
    state.behavior_mode = dqn::BehaviorMode::LossProportional;

    harness::RunRecord record;
    record.seed = seed;
    record.run_index = run_index;
    record.network_labels = detail::labels_of(state.networks);
    harness::CheckpointTracker tracker(record, cfg.checkpoint_every);
    env::ReplayBuffer<dqn::DiscreteTransition> buffer(cfg.buffer_capacity);
    const std::size_t learn_after = std::max(cfg.initial_fill, cfg.batch_size);
    std::vector<std::uint64_t> behavior_counts(state.size(), 0);

    env::Observation obs = environment.reset(env_rng);
    double episode_return = 0.0;
    std::uint64_t episode_length = 0;
    for (std::uint64_t t = 0; t < cfg.total_steps; ++t) {
        const std::size_t kb = dqn::select_behavior_index(state, t, behavior_rng);
        ++behavior_counts[kb];
        const auto q = dqn::q_values(state.networks[kb], obs);
        const std::size_t action = dqn::act_epsilon_greedy(q, state.epsilon(t), action_rng);
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
            dqn::train_step(state, dqn::sample_batch(buffer, cfg.batch_size, replay_rng));

        if ((t + 1) % cfg.target_update_period == 0) {
            harness::SelectionEvent ev;
            ev.step = t + 1;
            ev.losses = dqn::target_update(state, selection_rng);
            ev.selected = {state.psi};
            ev.behavior_counts = behavior_counts;
            std::fill(behavior_counts.begin(), behavior_counts.end(), 0);

            if ((t + 1) % cfg.hp_period == 0) {
                std::vector<double> fitness(ev.losses.size());
                for (std::size_t k = 0; k < fitness.size(); ++k) fitness[k] = -ev.losses[k];
                const GenerationOutcome g = generation_step(state.networks, fitness, cfg.space, mutation_rng,
                                                            cfg.selection, cfg.tournament_size);
                // The elite is the argmin-loss member, i.e. the current target network.
                state.psi = state.size() - 1;
                harness::GenerationEvent gen;
                gen.step = t + 1;
                gen.fitness = std::move(fitness);
                gen.parents = g.parents;
                gen.mutated = g.mutated;
                gen.labels = detail::labels_of(state.networks);
                record.generations.push_back(std::move(gen));
            }
            record.selections.push_back(std::move(ev));
        }
        tracker.on_step(t + 1);
        if (observer) observer(t + 1, state.networks);
    }
    return record;
}

/// SEARL-style baseline: every generation evaluates each member for at least
/// ceil(M / K) environment steps (whole episodes), stores those transitions in
/// the shared buffer, selects and mutates on evaluated return, then trains
/// each member as an independent DQN with its own target network.
inline harness::RunRecord run_evo_evalreturn(const EvoConfig& cfg, env::DiscreteEnvironment& environment,
                                             std::uint64_t seed, std::uint64_t run_index = 0,
                                             const EvoObserver& observer = {}) {
    cfg.validate();
    if (cfg.fitness != FitnessKind::EvalReturn) throw ContractViolation("configuration requests loss fitness");
    Rng init_rng = make_stream(seed, run_index, "init");
    Rng env_rng = make_stream(seed, run_index, "env");
    Rng action_rng = make_stream(seed, run_index, "action");
    Rng replay_rng = make_stream(seed, run_index, "replay");
    Rng mutation_rng = make_stream(seed, run_index, "mutation");

    std::vector<dqn::AgentNetwork> members =
        detail::initial_members(cfg, environment.observation_dim(), environment.action_count(), init_rng);
    std::vector<dqn::ParamVector> targets;
    std::vector<std::uint64_t> grad_steps(members.size(), 0);
    for (const auto& m : members) targets.push_back(m.params);

    harness::RunRecord record;
    record.seed = seed;
    record.run_index = run_index;
    record.network_labels = detail::labels_of(members);
    harness::CheckpointTracker tracker(record, cfg.checkpoint_every);
    env::ReplayBuffer<dqn::DiscreteTransition> buffer(cfg.buffer_capacity);
    const std::size_t learn_after = std::max(cfg.initial_fill, cfg.batch_size);
    const std::uint64_t quota = cfg.eval_steps_per_member();

    std::uint64_t env_steps = 0;
    while (env_steps < cfg.total_steps) {
        // Evaluation: whole episodes until the per-member quota is met.
        std::vector<double> fitness(members.size(), 0.0);
        std::vector<std::uint64_t> used(members.size(), 0);
        std::uint64_t generation_steps = 0;
        for (std::size_t k = 0; k < members.size(); ++k) {
            double total_return = 0.0;
            std::size_t episodes = 0;
            while (used[k] < quota) {
                env::Observation obs = environment.reset(env_rng);
                double ret = 0.0;
                std::uint64_t len = 0;
                for (;;) {
                    const auto q = dqn::q_values(members[k], obs);
                    const std::size_t a = dqn::act_epsilon_greedy(q, cfg.epsilon(env_steps), action_rng);
                    env::StepOutcome out = environment.step(a, env_rng);
                    buffer.push({obs, a, out.reward, out.observation, out.terminated});
                    ret += out.reward;
                    ++len;
                    ++used[k];
                    ++env_steps;
                    ++record.ledger.evaluation_steps;
                    tracker.on_step(env_steps);
                    obs = std::move(out.observation);
                    if (out.episode_over()) break;
                }
                tracker.on_episode(env_steps, ret, len);
                total_return += ret;
                ++episodes;
            }
            fitness[k] = total_return / static_cast<double>(episodes);
            generation_steps += used[k];
        }

        const GenerationOutcome g =
            generation_step(members, fitness, cfg.space, mutation_rng, cfg.selection, cfg.tournament_size);
        std::vector<dqn::ParamVector> next_targets;
        std::vector<std::uint64_t> next_steps;
        for (std::size_t slot = 0; slot < members.size(); ++slot) {
            const bool changed = std::find(g.mutated.begin(), g.mutated.end(), slot) != g.mutated.end();
            next_targets.push_back(changed ? members[slot].params : targets[g.parents[slot]]);
            next_steps.push_back(changed ? 0 : grad_steps[g.parents[slot]]);
        }
        targets = std::move(next_targets);
        grad_steps = std::move(next_steps);

        harness::GenerationEvent gen;
        gen.step = env_steps;
        gen.fitness = std::move(fitness);
        gen.parents = g.parents;
        gen.mutated = g.mutated;
        gen.eval_steps = used;
        gen.labels = detail::labels_of(members);
        record.generations.push_back(std::move(gen));

        // Training: as many updates per member as the generation collected per member.
        if (buffer.size() >= learn_after) {
            const std::uint64_t updates = generation_steps / members.size() / cfg.train_period;
            for (std::size_t k = 0; k < members.size(); ++k)
                for (std::uint64_t u = 0; u < updates; ++u) {
                    const dqn::Batch batch = dqn::sample_batch(buffer, cfg.batch_size, replay_rng);
                    const double gamma = members[k].hyper.discount.value_or(cfg.gamma);
                    const auto y = dqn::compute_shared_target(batch, targets[k], members[k].hyper.arch, gamma);
                    dqn::train_member(members[k], batch, y);
                    if (++grad_steps[k] % cfg.target_update_period == 0) targets[k] = members[k].params;
                }
        }
        if (observer) observer(env_steps, members);
    }
    return record;
}

inline harness::RunRecord run_evo(const EvoConfig& cfg, env::DiscreteEnvironment& environment, std::uint64_t seed,
                                  std::uint64_t run_index = 0, const EvoObserver& observer = {}) {
    return cfg.fitness == FitnessKind::NegCumLoss ? run_evo_negcumloss(cfg, environment, seed, run_index, observer)
                                                  : run_evo_evalreturn(cfg, environment, seed, run_index, observer);
}

}  // namespace adaqn::evo
