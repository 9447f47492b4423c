#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace adaqn::harness {

struct EpisodeEvent {
    std::uint64_t step = 0;  // environment step at which the episode ended
    double episode_return = 0.0;
    std::uint64_t length = 0;
};

/// One target update (value-based agents) or one logged critic update (actor-critic).
struct SelectionEvent {
    std::uint64_t step = 0;
    std::vector<std::size_t> selected;           // psi, or (psi1, psi2)
    std::vector<double> losses;                  // L vector before the reset
    std::vector<std::uint64_t> behavior_counts;  // behavioural index histogram over the period
};

struct GenerationEvent {
    std::uint64_t step = 0;
    std::vector<double> fitness;
    std::vector<std::size_t> parents;
    std::vector<std::size_t> mutated;          // slots that underwent a mutation
    std::vector<std::uint64_t> eval_steps;     // per member; empty for loss-based fitness
    std::vector<std::string> labels;           // hyperparameters after the generation
};

/// Environment interactions split by purpose.
struct StepLedger {
    std::uint64_t training_steps = 0;
    std::uint64_t evaluation_steps = 0;
};

struct RunRecord {
    std::string experiment;
    std::string variant;
    std::uint64_t seed = 0;
    std::uint64_t run_index = 0;
    std::string config_hash;
    std::string status = "ok";
    std::string error;
    std::string metric = "return";  // what checkpoint_returns holds
    std::vector<std::string> network_labels;
    std::vector<std::uint64_t> checkpoint_steps;
    std::vector<double> checkpoint_returns;
    std::vector<EpisodeEvent> episodes;
    std::vector<SelectionEvent> selections;
    std::vector<GenerationEvent> generations;
    StepLedger ledger;
};

/// Turns an episode stream into returns on a regular step grid: each
/// checkpoint holds the mean return of episodes finished since the previous
/// one, or carries the previous value forward when none finished.
class CheckpointTracker {
public:
    CheckpointTracker(RunRecord& record, std::uint64_t every) : record_(record), every_(every) {}

    void on_episode(std::uint64_t step, double episode_return, std::uint64_t length) {
        record_.episodes.push_back({step, episode_return, length});
        window_.push_back(episode_return);
    }

    /// `step` counts completed environment steps.
    void on_step(std::uint64_t step) {
        if (every_ == 0 || step % every_ != 0) return;
        if (!window_.empty())
            last_ = std::accumulate(window_.begin(), window_.end(), 0.0) / static_cast<double>(window_.size());
        window_.clear();
        record_.checkpoint_steps.push_back(step);
        record_.checkpoint_returns.push_back(last_);
    }

private:
    RunRecord& record_;
    std::uint64_t every_;
    std::vector<double> window_;
    double last_ = 0.0;
};

}  // namespace adaqn::harness
