#pragma once

#include <memory>
#include <vector>

#include "adaqn/common/rng.hpp"
#include "adaqn/env/cartpole.hpp"
#include "adaqn/env/pendulum.hpp"
#include "adaqn/env/tabular_mdp.hpp"

namespace adaqn::env {

using Observation = std::vector<double>;

struct StepOutcome {
    Observation observation;
    double reward = 0.0;
    bool terminated = false;
    bool truncated = false;

    bool episode_over() const { return terminated || truncated; }
};

/// Episodic environment with a finite action set and vector observations.
class DiscreteEnvironment {
public:
    virtual ~DiscreteEnvironment() = default;
    virtual std::size_t observation_dim() const = 0;
    virtual std::size_t action_count() const = 0;
    virtual Observation reset(Rng& rng) = 0;
    virtual StepOutcome step(std::size_t action, Rng& rng) = 0;
    /// Fresh instance with the same parameters (episode state not copied).
    virtual std::unique_ptr<DiscreteEnvironment> clone() const = 0;
};

class CartPoleEnv final : public DiscreteEnvironment {
public:
    explicit CartPoleEnv(CartPoleParams params = {}) : params_(params) {}

    std::size_t observation_dim() const override { return 4; }
    std::size_t action_count() const override { return 2; }

    Observation reset(Rng& rng) override {
        std::uniform_real_distribution<double> d(-0.05, 0.05);
        state_ = {};
        state_.x = d(rng);
        state_.x_dot = d(rng);
        state_.theta = d(rng);
        state_.theta_dot = d(rng);
        return observe();
    }

    StepOutcome step(std::size_t action, Rng&) override {
        const CartPoleOutcome o = cartpole_step(state_, static_cast<int>(action), params_);
        state_ = o.next_state;
        return {observe(), o.reward, o.terminated, o.truncated};
    }

    std::unique_ptr<DiscreteEnvironment> clone() const override { return std::make_unique<CartPoleEnv>(params_); }

    const CartPoleState& state() const { return state_; }

private:
    Observation observe() const { return {state_.x, state_.x_dot, state_.theta, state_.theta_dot}; }

    CartPoleParams params_;
    CartPoleState state_;
};

/// Tabular MDP exposed through one-hot observations.
class TabularEnv final : public DiscreteEnvironment {
public:
    TabularEnv(TabularMDP mdp, int horizon) : mdp_(std::move(mdp)), horizon_(horizon) { mdp_.validate(); }

    std::size_t observation_dim() const override { return mdp_.n_states; }
    std::size_t action_count() const override { return mdp_.n_actions; }

    Observation reset(Rng& rng) override {
        do {
            state_ = uniform_index(rng, mdp_.n_states);
        } while (mdp_.terminal[state_] && !all_terminal());
        steps_ = 0;
        return one_hot(state_);
    }

    StepOutcome step(std::size_t action, Rng& rng) override {
        mdp_.check_index(state_, action);
        const double r = mdp_.reward[state_][action];
        state_ = sample_next_state(mdp_, state_, action, rng);
        ++steps_;
        const bool term = mdp_.terminal[state_];
        return {one_hot(state_), r, term, !term && steps_ >= horizon_};
    }

    std::unique_ptr<DiscreteEnvironment> clone() const override {
        return std::make_unique<TabularEnv>(mdp_, horizon_);
    }

    const TabularMDP& mdp() const { return mdp_; }
    std::size_t state() const { return state_; }

    Observation one_hot(std::size_t s) const {
        Observation o(mdp_.n_states, 0.0);
        o[s] = 1.0;
        return o;
    }

private:
    bool all_terminal() const {
        for (bool t : mdp_.terminal)
            if (!t) return false;
        return true;
    }

    TabularMDP mdp_;
    int horizon_;
    std::size_t state_ = 0;
    int steps_ = 0;
};

/// Pendulum swing-up with a scalar torque action.
class PendulumEnv {
public:
    explicit PendulumEnv(PendulumParams params = {}) : params_(params) {}

    static constexpr std::size_t observation_dim() { return 3; }
    double max_action() const { return params_.max_torque; }

    Observation reset(Rng& rng) {
        state_.theta = std::uniform_real_distribution<double>(-std::numbers::pi, std::numbers::pi)(rng);
        state_.theta_dot = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
        steps_ = 0;
        return observe();
    }

    StepOutcome step(double torque) {
        const PendulumOutcome o = pendulum_step(state_, torque, params_);
        state_ = o.next_state;
        ++steps_;
        return {observe(), o.reward, false, steps_ >= params_.horizon};
    }

    const PendulumState& state() const { return state_; }

private:
    Observation observe() const {
        const auto o = pendulum_observation(state_);
        return {o[0], o[1], o[2]};
    }

    PendulumParams params_;
    PendulumState state_;
    int steps_ = 0;
};

}  // namespace adaqn::env
