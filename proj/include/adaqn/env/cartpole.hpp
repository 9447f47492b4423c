#pragma once

#include <cmath>
#include <numbers>

namespace adaqn::env {

struct CartPoleState {
    double x = 0.0;
    double x_dot = 0.0;
    double theta = 0.0;
    double theta_dot = 0.0;
    int steps = 0;
};

struct CartPoleParams {
    double gravity = 9.8;
    double cart_mass = 1.0;
    double pole_mass = 0.1;
    double half_length = 0.5;
    double force_mag = 10.0;
    double dt = 0.02;
    double x_limit = 2.4;
    double theta_limit = 12.0 * std::numbers::pi / 180.0;
    int horizon = 500;
};

struct CartPoleOutcome {
    CartPoleState next_state;
    double reward = 1.0;
    bool terminated = false;  // pole fell or cart left the track
    bool truncated = false;   // horizon reached; still bootstraps

    bool done() const { return terminated || truncated; }
};

/// One explicit-Euler step under an arbitrary horizontal force.
inline CartPoleState cartpole_dynamics(const CartPoleState& s, double force, const CartPoleParams& p = {}) {
    const double total_mass = p.cart_mass + p.pole_mass;
    const double pole_mass_length = p.pole_mass * p.half_length;
    const double cos_t = std::cos(s.theta);
    const double sin_t = std::sin(s.theta);
    const double temp = (force + pole_mass_length * s.theta_dot * s.theta_dot * sin_t) / total_mass;
    const double theta_acc = (p.gravity * sin_t - cos_t * temp) /
                             (p.half_length * (4.0 / 3.0 - p.pole_mass * cos_t * cos_t / total_mass));
    const double x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;

    CartPoleState n = s;
    n.x = s.x + p.dt * s.x_dot;
    n.x_dot = s.x_dot + p.dt * x_acc;
    n.theta = s.theta + p.dt * s.theta_dot;
    n.theta_dot = s.theta_dot + p.dt * theta_acc;
    n.steps = s.steps + 1;
    return n;
}

inline bool cartpole_out_of_bounds(const CartPoleState& s, const CartPoleParams& p = {}) {
    return std::abs(s.x) > p.x_limit || std::abs(s.theta) > p.theta_limit;
}

/// action 1 pushes right, action 0 pushes left. Reward +1 per step.
inline CartPoleOutcome cartpole_step(const CartPoleState& s, int action, const CartPoleParams& p = {}) {
    CartPoleOutcome out;
    out.next_state = cartpole_dynamics(s, action == 1 ? p.force_mag : -p.force_mag, p);
    out.terminated = cartpole_out_of_bounds(s, p) || cartpole_out_of_bounds(out.next_state, p);
    out.truncated = !out.terminated && out.next_state.steps >= p.horizon;
    return out;
}

}  // namespace adaqn::env
