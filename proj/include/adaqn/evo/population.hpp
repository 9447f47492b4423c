#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "adaqn/dqn/adadqn.hpp"
#include "adaqn/evo/search_space.hpp"

namespace adaqn::evo {

enum class SelectionScheme { Tournament, Truncation };

/// p_k proportional to 1 / (L_k + 1e-8).
inline std::size_t loss_proportional_behavior(std::span<const double> losses, Rng& rng) {
    return dqn::sample_loss_proportional(losses, rng);
}

/// K - 1 tournaments of `tournament_size` members drawn without replacement
/// (highest fitness wins, lowest index on ties); the last slot holds the
/// global best.
inline std::vector<std::size_t> tournament_select(std::span<const double> fitness, Rng& rng,
                                                  std::size_t tournament_size = 3) {
    const std::size_t k = fitness.size();
    if (k < tournament_size || tournament_size == 0)
        throw ContractViolation("tournament selection needs at least " + std::to_string(tournament_size) + " members");
    std::vector<std::size_t> parents;
    std::vector<std::size_t> pool(k);
    for (std::size_t round = 0; round + 1 < k; ++round) {
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < tournament_size; ++i) std::swap(pool[i], pool[i + uniform_index(rng, k - i)]);
        std::size_t best = pool[0];
        for (std::size_t i = 1; i < tournament_size; ++i) {
            const std::size_t c = pool[i];
            if (fitness[c] > fitness[best] || (fitness[c] == fitness[best] && c < best)) best = c;
        }
        parents.push_back(best);
    }
    parents.push_back(dqn::argmax_index(fitness));
    return parents;
}

/// The best ceil(fraction * K) members fill the slots cyclically; the last slot holds the global best.
inline std::vector<std::size_t> truncation_select(std::span<const double> fitness, double fraction = 0.2) {
    const std::size_t k = fitness.size();
    if (k == 0) throw ContractViolation("empty population");
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
    const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(k))));
    std::vector<std::size_t> parents;
    for (std::size_t i = 0; i + 1 < k; ++i) parents.push_back(order[i % keep]);
    parents.push_back(order[0]);
    return parents;
}

/// Slots to mutate: every repeated occurrence of a parent except one. The
/// elite (last) slot is the kept occurrence of its parent; for other parents
/// the first occurrence is kept.
inline std::vector<std::size_t> duplicated_slots(std::span<const std::size_t> parents) {
    std::vector<std::size_t> out;
    if (parents.empty()) return out;
    const std::size_t elite = parents.back();
    std::vector<std::size_t> seen;
    for (std::size_t i = 0; i + 1 < parents.size(); ++i) {
        const std::size_t p = parents[i];
        const bool kept_elsewhere = p == elite || std::find(seen.begin(), seen.end(), p) != seen.end();
        if (kept_elsewhere)
            out.push_back(i);
        else
            seen.push_back(p);
    }
    return out;
}

struct GenerationOutcome {
    std::vector<std::size_t> parents;
    std::vector<std::size_t> mutated;
    std::vector<MutationRecord> mutations;
};

/// Exploitation then exploration over `members` given their fitness. The
/// population is rebuilt from the selected parents; all L accumulations are reset.
inline GenerationOutcome generation_step(std::vector<dqn::AgentNetwork>& members, std::span<const double> fitness,
                                         const SearchSpace& space, Rng& rng,
                                         SelectionScheme scheme = SelectionScheme::Tournament,
                                         std::size_t tournament_size = 3) {
    if (fitness.size() != members.size()) throw ContractViolation("one fitness value per member is required");
    GenerationOutcome out;
    out.parents = scheme == SelectionScheme::Tournament ? tournament_select(fitness, rng, tournament_size)
                                                        : truncation_select(fitness);
    std::vector<dqn::AgentNetwork> next;
    next.reserve(members.size());
    for (std::size_t p : out.parents) next.push_back(members[p]);
    out.mutated = duplicated_slots(out.parents);
    for (std::size_t slot : out.mutated) out.mutations.push_back(mutate(next[slot], space, rng));
    for (auto& m : next) m.cum_loss = 0.0;
    members = std::move(next);
    return out;
}

}  // namespace adaqn::evo
