#pragma once

#include <cstddef>
#include <vector>

#include "adaqn/common/error.hpp"
#include "adaqn/common/rng.hpp"

namespace adaqn::env {

/// (s, a, r, s', done). `done` means the episode terminated at s' and the
/// target must not bootstrap; time-limit truncation is not `done`.
template <class Observation, class Action>
struct Transition {
    Observation state;
    Action action;
    double reward = 0.0;
    Observation next_state;
    bool done = false;
};

/// Fixed-capacity FIFO ring. Sampling is uniform with replacement.
template <class T>
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw ContractViolation("replay buffer capacity must be positive");
        storage_.reserve(capacity);
    }

    void push(T item) {
        if (storage_.size() < capacity_) {
            storage_.push_back(std::move(item));
        } else {
            storage_[next_] = std::move(item);
        }
        next_ = (next_ + 1) % capacity_;
        ++inserted_;
    }

    std::size_t size() const noexcept { return storage_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t insertion_count() const noexcept { return inserted_; }
    bool empty() const noexcept { return storage_.empty(); }

    /// Element `i` in insertion order among the retained items (0 = oldest).
    const T& at_age(std::size_t i) const {
        if (i >= size()) throw ContractViolation("replay buffer index out of range");
        const std::size_t oldest = storage_.size() < capacity_ ? 0 : next_;
        return storage_[(oldest + i) % storage_.size()];
    }

    std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const {
        if (empty()) throw ContractViolation("cannot sample from an empty replay buffer");
        std::vector<std::size_t> idx(batch_size);
        for (auto& i : idx) i = uniform_index(rng, storage_.size());
        return idx;
    }

    std::vector<T> sample(std::size_t batch_size, Rng& rng) const {
        std::vector<T> out;
        out.reserve(batch_size);
        for (std::size_t i : sample_indices(batch_size, rng)) out.push_back(storage_[i]);
        return out;
    }

    const T& operator[](std::size_t slot) const { return storage_[slot]; }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::size_t inserted_ = 0;
    std::vector<T> storage_;
};

}  // namespace adaqn::env
