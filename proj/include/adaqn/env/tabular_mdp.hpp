#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "adaqn/common/error.hpp"
#include "adaqn/common/rng.hpp"

namespace adaqn::env {

/// Dense Q-table indexed [state][action].
using QTable = std::vector<std::vector<double>>;

/// Finite MDP with an explicit transition kernel. Transitions into a terminal
/// state end the episode and do not bootstrap.
struct TabularMDP {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<std::vector<std::vector<double>>> transition;  // [s][a][s']
    std::vector<std::vector<double>> reward;                   // [s][a]
    double gamma = 0.9;
    std::vector<bool> terminal;

    void validate() const {
        if (n_states == 0 || n_actions == 0) throw ContractViolation("MDP needs at least one state and action");
        if (!(gamma >= 0.0 && gamma < 1.0)) throw ContractViolation("MDP discount must lie in [0, 1)");
        if (transition.size() != n_states || reward.size() != n_states || terminal.size() != n_states)
            throw ContractViolation("MDP tables do not match n_states");
        for (std::size_t s = 0; s < n_states; ++s) {
            if (transition[s].size() != n_actions || reward[s].size() != n_actions)
                throw ContractViolation("MDP tables do not match n_actions");
            for (std::size_t a = 0; a < n_actions; ++a) {
                const auto& row = transition[s][a];
                if (row.size() != n_states) throw ContractViolation("transition row has wrong length");
                double sum = 0.0;
                for (double p : row) {
                    if (!(p >= 0.0)) throw ContractViolation("negative transition probability");
                    sum += p;
                }
                if (std::abs(sum - 1.0) > 1e-12) throw ContractViolation("transition row does not sum to 1");
                if (!std::isfinite(reward[s][a])) throw ContractViolation("non-finite reward");
            }
        }
    }

    QTable zero_q() const { return QTable(n_states, std::vector<double>(n_actions, 0.0)); }

    void check_index(std::size_t s, std::size_t a) const {
        if (s >= n_states || a >= n_actions) throw ContractViolation("state or action out of range");
    }
};

inline double max_of(const std::vector<double>& row) { return *std::max_element(row.begin(), row.end()); }

/// Random test-bed MDP: every (s, a) reaches `branching` distinct successors
/// with Dirichlet(1) weights; rewards are uniform on [0, reward_scale).
inline TabularMDP random_mdp(std::size_t n_states, std::size_t n_actions, std::size_t branching,
                             double reward_scale, double gamma, Rng& rng) {
    if (branching == 0 || branching > n_states) throw ContractViolation("branching must lie in [1, n_states]");
    TabularMDP mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.gamma = gamma;
    mdp.terminal.assign(n_states, false);
    mdp.transition.assign(n_states, std::vector<std::vector<double>>(n_actions, std::vector<double>(n_states, 0.0)));
    mdp.reward.assign(n_states, std::vector<double>(n_actions, 0.0));

    std::exponential_distribution<double> gamma1(1.0);
    std::uniform_real_distribution<double> reward_dist(0.0, reward_scale);
    std::vector<std::size_t> states(n_states);
    for (std::size_t s = 0; s < n_states; ++s) {
        for (std::size_t a = 0; a < n_actions; ++a) {
            std::iota(states.begin(), states.end(), std::size_t{0});
            // partial Fisher-Yates: the first `branching` entries are a uniform subset
            for (std::size_t i = 0; i < branching; ++i) std::swap(states[i], states[i + uniform_index(rng, n_states - i)]);
            std::vector<double> w(branching);
            double total = 0.0;
            for (double& x : w) total += (x = gamma1(rng));
            auto& row = mdp.transition[s][a];
            double assigned = 0.0;
            for (std::size_t i = 0; i + 1 < branching; ++i) assigned += (row[states[i]] = w[i] / total);
            row[states[branching - 1]] = 1.0 - assigned;
            mdp.reward[s][a] = reward_dist(rng);
        }
    }
    return mdp;
}

/// Random MDP whose probabilities are all multiples of 2^-denominator_bits, so a
/// finite dataset can reproduce every conditional expectation exactly.
inline TabularMDP random_dyadic_mdp(std::size_t n_states, std::size_t n_actions, unsigned denominator_bits,
                                    double reward_scale, double gamma, Rng& rng) {
    TabularMDP mdp = random_mdp(n_states, n_actions, 1, reward_scale, gamma, rng);
    const std::size_t units = std::size_t{1} << denominator_bits;
    for (std::size_t s = 0; s < n_states; ++s) {
        for (std::size_t a = 0; a < n_actions; ++a) {
            std::vector<std::size_t> counts(n_states, 0);
            for (std::size_t u = 0; u < units; ++u) ++counts[uniform_index(rng, n_states)];
            auto& row = mdp.transition[s][a];
            for (std::size_t sp = 0; sp < n_states; ++sp)
                row[sp] = static_cast<double>(counts[sp]) / static_cast<double>(units);
        }
    }
    return mdp;
}

/// Optimal Bellman operator applied exactly with the model.
inline QTable bellman_optimal(const TabularMDP& mdp, const QTable& q) {
    std::vector<double> v(mdp.n_states);
    for (std::size_t s = 0; s < mdp.n_states; ++s) v[s] = mdp.terminal[s] ? 0.0 : max_of(q[s]);
    QTable out = mdp.zero_q();
    for (std::size_t s = 0; s < mdp.n_states; ++s)
        for (std::size_t a = 0; a < mdp.n_actions; ++a) {
            double expect = 0.0;
            const auto& row = mdp.transition[s][a];
            for (std::size_t sp = 0; sp < mdp.n_states; ++sp) expect += row[sp] * v[sp];
            out[s][a] = mdp.reward[s][a] + mdp.gamma * expect;
        }
    return out;
}

inline double sup_distance(const QTable& x, const QTable& y) {
    double d = 0.0;
    for (std::size_t s = 0; s < x.size(); ++s)
        for (std::size_t a = 0; a < x[s].size(); ++a) d = std::max(d, std::abs(x[s][a] - y[s][a]));
    return d;
}

/// Iterates the optimal Bellman operator until the sup-norm residual is <= tol.
inline QTable value_iteration(const TabularMDP& mdp, double tol) {
    if (!(tol > 0.0)) throw ContractViolation("value iteration tolerance must be positive");
    mdp.validate();
    QTable q = mdp.zero_q();
    for (;;) {
        QTable next = bellman_optimal(mdp, q);
        const double residual = sup_distance(next, q);
        q = std::move(next);
        // ||G q_new - q_new|| <= gamma * residual, so one extra check is enough
        if (mdp.gamma * residual <= tol) return q;
    }
}

inline std::size_t sample_next_state(const TabularMDP& mdp, std::size_t s, std::size_t a, Rng& rng) {
    mdp.check_index(s, a);
    const auto& row = mdp.transition[s][a];
    double u = uniform01(rng);
    for (std::size_t sp = 0; sp < row.size(); ++sp) {
        u -= row[sp];
        if (u < 0.0) return sp;
    }
    // rounding: fall back to the last reachable successor
    for (std::size_t sp = row.size(); sp-- > 0;)
        if (row[sp] > 0.0) return sp;
    return row.size() - 1;
}

}  // namespace adaqn::env
