#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "adaqn/common/error.hpp"
#include "adaqn/common/rng.hpp"
#include "adaqn/env/replay_buffer.hpp"
#include "adaqn/env/tabular_mdp.hpp"

namespace adaqn::tabular {

using TabularTransition = env::Transition<std::size_t, std::size_t>;

/// Step size alpha(n) = scale / (1 + n)^exponent, n = prior visits of (s, a).
/// exponent in (0.5, 1] keeps sum(alpha) infinite and sum(alpha^2) finite.
struct StepSchedule {
    double scale = 1.0;
    double exponent = 0.85;

    void validate() const {
        if (!(scale > 0.0 && scale <= 1.0)) throw ContractViolation("step scale must lie in (0, 1]");
        if (!(exponent > 0.5 && exponent <= 1.0)) throw ContractViolation("step exponent must lie in (0.5, 1]");
    }

    double operator()(std::uint64_t visits) const {
        return scale / std::pow(1.0 + static_cast<double>(visits), exponent);
    }
};

/// N Q-tables trained toward one shared target table Q^psi.
struct TabularEnsemble {
    std::vector<env::QTable> q;
    std::vector<std::vector<std::vector<std::uint64_t>>> visits;  // [i][s][a]
    std::vector<StepSchedule> schedules;
    std::size_t psi = 0;
    std::size_t selection_period = 100;
    std::uint64_t updates = 0;
    std::vector<TabularTransition> window;  // transitions since the last selection

    std::size_t size() const { return q.size(); }
};

inline TabularEnsemble make_ensemble(std::size_t n_states, std::size_t n_actions, std::vector<StepSchedule> schedules,
                                     std::size_t selection_period, double init_scale, Rng& rng) {
    if (schedules.empty()) throw ContractViolation("ensemble needs at least one member");
    if (selection_period == 0) throw ContractViolation("selection period must be positive");
    TabularEnsemble ens;
    ens.selection_period = selection_period;
    for (const auto& s : schedules) s.validate();
    ens.schedules = std::move(schedules);
    std::uniform_real_distribution<double> init(0.0, init_scale);
    for (std::size_t i = 0; i < ens.schedules.size(); ++i) {
        env::QTable table(n_states, std::vector<double>(n_actions, 0.0));
        if (init_scale > 0.0)
            for (auto& row : table)
                for (double& v : row) v = init(rng);
        ens.q.push_back(std::move(table));
        ens.visits.emplace_back(n_states, std::vector<std::uint64_t>(n_actions, 0));
    }
    return ens;
}

/// Selection against the true model: || G*(Q^psi_prev) - Q^i ||_2 over all (s, a).
struct ExactSelection {
    const env::TabularMDP* mdp;
};

/// Selection against sample targets r + gamma max Q^psi_prev(s') of a batch.
struct EmpiricalSelection {
    std::span<const TabularTransition> batch;
    double gamma;
};

using SelectionSource = std::variant<ExactSelection, EmpiricalSelection>;

/// Squared approximation errors of every member against the target built from Q^psi.
inline std::vector<double> selection_errors(const TabularEnsemble& ens, const SelectionSource& source) {
    const env::QTable& target_q = ens.q[ens.psi];
    std::vector<double> err(ens.size(), 0.0);
    if (const auto* exact = std::get_if<ExactSelection>(&source)) {
        const env::QTable target = env::bellman_optimal(*exact->mdp, target_q);
        for (std::size_t i = 0; i < ens.size(); ++i)
            for (std::size_t s = 0; s < target.size(); ++s)
                for (std::size_t a = 0; a < target[s].size(); ++a) {
                    const double d = target[s][a] - ens.q[i][s][a];
                    err[i] += d * d;
                }
        return err;
    }
    const auto& emp = std::get<EmpiricalSelection>(source);
    if (emp.batch.empty()) throw ContractViolation("empirical selection needs a non-empty batch");
    for (const TabularTransition& t : emp.batch) {
        const double y = t.reward + (t.done ? 0.0 : emp.gamma * env::max_of(target_q[t.next_state]));
        for (std::size_t i = 0; i < ens.size(); ++i) {
            const double d = y - ens.q[i][t.state][t.action];
            err[i] += d * d;
        }
    }
    return err;
}

/// argmin of selection_errors, lowest index on ties.
inline std::size_t tabular_select_psi(const TabularEnsemble& ens, const SelectionSource& source) {
    const auto err = selection_errors(ens, source);
    std::size_t best = 0;
    for (std::size_t i = 1; i < err.size(); ++i)
        if (err[i] < err[best]) best = i;
    return best;
}

/// Moves every table toward the shared sample target; re-selects psi every
/// `selection_period` updates from the transitions observed since the last
/// selection (or from `model` when given).
inline void tabular_update(TabularEnsemble& ens, const TabularTransition& t, double gamma,
                           const env::TabularMDP* model = nullptr) {
    const auto& first = ens.q.front();
    if (t.state >= first.size() || t.next_state >= first.size() || t.action >= first[t.state].size())
        throw ContractViolation("transition state or action out of range");

    const double y = t.reward + (t.done ? 0.0 : gamma * env::max_of(ens.q[ens.psi][t.next_state]));
    for (std::size_t i = 0; i < ens.size(); ++i) {
        auto& n = ens.visits[i][t.state][t.action];
        double& v = ens.q[i][t.state][t.action];
        v += ens.schedules[i](n) * (y - v);
        ++n;
    }
    ++ens.updates;
    ens.window.push_back(t);
    if (ens.updates % ens.selection_period == 0) {
        ens.psi = model ? tabular_select_psi(ens, ExactSelection{model})
                        : tabular_select_psi(ens, EmpiricalSelection{ens.window, gamma});
        ens.window.clear();
    }
}

struct TabularRunConfig {
    std::vector<StepSchedule> members = {{1.0, 0.85}, {0.8, 0.85}, {0.6, 0.85}, {0.4, 0.85}};
    std::size_t selection_period = 100;
    std::uint64_t total_updates = 200000;
    std::uint64_t checkpoint_every = 10000;
    double init_scale = 0.0;
    bool exact_selection = false;
};

struct TabularRunResult {
    std::vector<std::uint64_t> checkpoint_steps;
    std::vector<double> sup_error;  // ||Q^psi - Q*||_inf at each checkpoint
    std::vector<std::size_t> psi_history;
    double final_error = 0.0;
    TabularEnsemble ensemble;
};

/// Uniform-random behaviour policy on a continuing walk through the MDP
/// (episodes restart uniformly after a terminal state).
inline TabularRunResult run_tabular(const env::TabularMDP& mdp, const TabularRunConfig& cfg, Rng& env_rng,
                                    Rng& init_rng) {
    mdp.validate();
    const env::QTable q_star = env::value_iteration(mdp, 1e-12);
    TabularRunResult out;
    out.ensemble = make_ensemble(mdp.n_states, mdp.n_actions, cfg.members, cfg.selection_period, cfg.init_scale,
                                 init_rng);
    TabularEnsemble& ens = out.ensemble;
    std::size_t s = uniform_index(env_rng, mdp.n_states);
    for (std::uint64_t t = 1; t <= cfg.total_updates; ++t) {
        const std::size_t a = uniform_index(env_rng, mdp.n_actions);
        const std::size_t sp = env::sample_next_state(mdp, s, a, env_rng);
        const TabularTransition tr{s, a, mdp.reward[s][a], sp, mdp.terminal[sp]};
        tabular_update(ens, tr, mdp.gamma, cfg.exact_selection ? &mdp : nullptr);
        if (ens.updates % ens.selection_period == 0) out.psi_history.push_back(ens.psi);
        s = mdp.terminal[sp] ? uniform_index(env_rng, mdp.n_states) : sp;
        if (t % cfg.checkpoint_every == 0 || t == cfg.total_updates) {
            out.checkpoint_steps.push_back(t);
            out.sup_error.push_back(env::sup_distance(ens.q[ens.psi], q_star));
        }
    }
    out.final_error = env::sup_distance(ens.q[ens.psi], q_star);
    return out;
}

/// The fixed 5-state test bed used for convergence checks.
inline env::TabularMDP benchmark_mdp() {
    Rng rng = make_stream(20240501, 0, "benchmark-mdp");
    return env::random_mdp(5, 2, 2, 1.0, 0.5, rng);
}

}  // namespace adaqn::tabular
