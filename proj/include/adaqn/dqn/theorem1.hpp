#pragma once

#include <cmath>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "adaqn/dqn/adadqn.hpp"
#include "adaqn/env/tabular_mdp.hpp"

namespace adaqn::dqn {

/// (s, a, r, s') over a tabular MDP.
using TabularSample = env::Transition<std::size_t, std::size_t>;

namespace detail {

/// Smallest D <= max_denominator with every p * D integral, 0 when none exists.
inline std::size_t common_denominator(std::span<const double> probs, std::size_t max_denominator) {
    for (std::size_t d = 1; d <= max_denominator; ++d) {
        bool ok = true;
        for (double p : probs) {
            const double scaled = p * static_cast<double>(d);
            if (std::abs(scaled - std::round(scaled)) > 1e-9) {
                ok = false;
                break;
            }
        }
        if (ok) return d;
    }
    return 0;
}

}  // namespace detail

/// Dataset in which, for every (s, a), each successor s' appears with
/// multiplicity exactly proportional to P(s' | s, a). `pair_repeats[s][a]`
/// (default 1) replicates the block of a pair, which shapes nu without
/// breaking unbiasedness. Throws when some row has no small rational form.
inline std::vector<TabularSample> enumerate_dataset(const env::TabularMDP& mdp,
                                                    const std::vector<std::vector<std::size_t>>& pair_repeats = {},
                                                    std::size_t max_denominator = 1 << 12) {
    mdp.validate();
    std::vector<TabularSample> out;
    for (std::size_t s = 0; s < mdp.n_states; ++s)
        for (std::size_t a = 0; a < mdp.n_actions; ++a) {
            const auto& row = mdp.transition[s][a];
            const std::size_t d = detail::common_denominator(row, max_denominator);
            if (d == 0)
                throw ContractViolation("transition probabilities of (" + std::to_string(s) + ", " +
                                        std::to_string(a) + ") are not rational with a small denominator; "
                                        "an unbiased finite dataset cannot be constructed");
            const std::size_t repeats = pair_repeats.empty() ? 1 : pair_repeats[s][a];
            for (std::size_t rep = 0; rep < repeats; ++rep)
                for (std::size_t sp = 0; sp < mdp.n_states; ++sp) {
                    const auto copies = static_cast<std::size_t>(std::llround(row[sp] * static_cast<double>(d)));
                    for (std::size_t c = 0; c < copies; ++c)
                        out.push_back({s, a, mdp.reward[s][a], sp, static_cast<bool>(mdp.terminal[sp])});
                }
        }
    return out;
}

struct Theorem1Report {
    bool hypothesis_holds = false;       // sample mean of the empirical target equals G Q_bar on every pair
    std::vector<double> empirical_losses;  // sum over D of (G_hat Q_bar - Q_k)^2
    std::vector<double> true_errors;       // || G Q_bar - Q_k ||^2_{2, nu}
    std::size_t empirical_argmin = 0;
    std::size_t true_argmin = 0;

    bool argmin_equal() const { return empirical_argmin == true_argmin; }
};

/// Q-networks take one-hot states and output one value per action.
inline env::QTable q_table_of(std::span<const double> params, const nn::MlpSpec& spec, std::size_t n_states) {
    Matrix eye = Matrix::Identity(static_cast<Eigen::Index>(n_states), static_cast<Eigen::Index>(n_states));
    const Matrix q = nn::mlp_forward(params, spec, eye);
    env::QTable out(n_states, std::vector<double>(static_cast<std::size_t>(q.cols())));
    for (std::size_t s = 0; s < n_states; ++s)
        for (std::size_t a = 0; a < out[s].size(); ++a)
            out[s][a] = q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
    return out;
}

/// Compares the empirical-loss argmin with the true approximation-error
/// argmin. Both sides are computed by direct enumeration.
inline Theorem1Report theorem1_oracle_check(std::span<const ParamVector> networks, const nn::MlpSpec& spec,
                                            std::span<const double> target_params, const env::TabularMDP& mdp,
                                            std::span<const TabularSample> dataset) {
    if (networks.empty()) throw ContractViolation("need at least one online network");
    if (dataset.empty()) throw ContractViolation("empty dataset");
    if (spec.input_dim != mdp.n_states || spec.output_dim != mdp.n_actions)
        throw ContractViolation("network dims must match (n_states one-hot -> n_actions)");

    const env::QTable q_bar = q_table_of(target_params, spec, mdp.n_states);
    const env::QTable true_target = env::bellman_optimal(mdp, q_bar);
    std::vector<env::QTable> q_k;
    for (const auto& p : networks) q_k.push_back(q_table_of(p, spec, mdp.n_states));

    Theorem1Report rep;
    rep.empirical_losses.assign(networks.size(), 0.0);
    rep.true_errors.assign(networks.size(), 0.0);

    std::map<std::pair<std::size_t, std::size_t>, std::pair<double, std::size_t>> per_pair;  // sum of targets, count
    for (const TabularSample& x : dataset) {
        mdp.check_index(x.state, x.action);
        const double y = x.reward + (x.done ? 0.0 : mdp.gamma * env::max_of(q_bar[x.next_state]));
        auto& acc = per_pair[{x.state, x.action}];
        acc.first += y;
        ++acc.second;
        for (std::size_t k = 0; k < networks.size(); ++k) {
            const double d = y - q_k[k][x.state][x.action];
            rep.empirical_losses[k] += d * d;
        }
    }

    rep.hypothesis_holds = true;
    const double total = static_cast<double>(dataset.size());
    for (const auto& [sa, acc] : per_pair) {
        const double g = true_target[sa.first][sa.second];
        const double mean = acc.first / static_cast<double>(acc.second);
        if (std::abs(mean - g) > 1e-9 * (1.0 + std::abs(g))) rep.hypothesis_holds = false;
        const double nu = static_cast<double>(acc.second) / total;
        for (std::size_t k = 0; k < networks.size(); ++k) {
            const double d = g - q_k[k][sa.first][sa.second];
            rep.true_errors[k] += nu * d * d;
        }
    }
    rep.empirical_argmin = argmin_index(rep.empirical_losses);
    rep.true_argmin = argmin_index(rep.true_errors);
    return rep;
}

}  // namespace adaqn::dqn
