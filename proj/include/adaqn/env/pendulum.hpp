#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace adaqn::env {

struct PendulumState {
    double theta = 0.0;  // 0 is upright
    double theta_dot = 0.0;
};

struct PendulumParams {
    double gravity = 10.0;
    double mass = 1.0;
    double length = 1.0;
    double dt = 0.05;
    double max_speed = 8.0;
    double max_torque = 2.0;
    int horizon = 200;
};

struct PendulumOutcome {
    PendulumState next_state;
    double reward = 0.0;
    bool done = false;  // never terminates; the runner truncates at the horizon
};

/// Wraps an angle into [-pi, pi).
inline double angle_normalize(double theta) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(theta + std::numbers::pi, two_pi);
    if (r < 0.0) r += two_pi;
    return r - std::numbers::pi;
}

inline PendulumOutcome pendulum_step(const PendulumState& s, double torque, const PendulumParams& p = {}) {
    const double u = std::clamp(torque, -p.max_torque, p.max_torque);
    const double th = angle_normalize(s.theta);
    PendulumOutcome out;
    out.reward = -(th * th + 0.1 * s.theta_dot * s.theta_dot + 0.001 * u * u);
    const double acc = 3.0 * p.gravity / (2.0 * p.length) * std::sin(s.theta) +
                       3.0 / (p.mass * p.length * p.length) * u;
    const double speed = std::clamp(s.theta_dot + acc * p.dt, -p.max_speed, p.max_speed);
    out.next_state = {s.theta + speed * p.dt, speed};
    return out;
}

inline std::array<double, 3> pendulum_observation(const PendulumState& s) {
    return {std::cos(s.theta), std::sin(s.theta), s.theta_dot};
}

}  // namespace adaqn::env
