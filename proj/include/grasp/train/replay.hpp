#pragma once

#include "grasp/model/training.hpp"

#include <deque>
#include <random>

namespace grasp::train {

using model::EpisodeSegment;
using Rng = std::mt19937_64;

struct Transition {
    std::vector<double> observation;
    std::vector<double> goal;
    std::vector<double> action;
    double reward = 0.0;
    int duration = 1;
    std::vector<double> next_observation;
    bool terminal = false;
    std::uint64_t episode = 0;
};

class WarmupIncomplete : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// FIFO ring of transitions. A segment of length n starting at i is valid when
// transitions i..i+n-1 share an episode, or when it ends early at a terminal
// transition of that episode.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 200000);

    void append(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return items_.at(i); }

    // Length of the valid segment starting at i, 0 if the start is invalid.
    std::size_t segment_length(std::size_t start, std::size_t n) const;
    std::size_t count_valid_starts(std::size_t n) const;
    EpisodeSegment segment(std::size_t start, std::size_t n) const;

    // Uniform over valid start indices. Throws WarmupIncomplete if none exist.
    EpisodeSegment sample(std::size_t n, Rng& rng) const;
    std::size_t sample_start(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::deque<Transition> items_;
};

}  // namespace grasp::train
