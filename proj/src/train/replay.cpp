#include "grasp/train/replay.hpp"

namespace grasp::train {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
}

void ReplayBuffer::append(Transition t) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(t));
}

std::size_t ReplayBuffer::segment_length(std::size_t start, std::size_t n) const {
    if (n == 0 || start >= items_.size()) return 0;
    const std::uint64_t episode = items_[start].episode;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t i = start + j;
        if (i >= items_.size() || items_[i].episode != episode) return 0;
        if (items_[i].terminal) return j + 1;
    }
    return n;
}

std::size_t ReplayBuffer::count_valid_starts(std::size_t n) const {
    std::size_t count = 0;
    for (std::size_t i = 0; i < items_.size(); ++i) count += segment_length(i, n) > 0;
    return count;
}

EpisodeSegment ReplayBuffer::segment(std::size_t start, std::size_t n) const {
    const std::size_t len = segment_length(start, n);
    if (len == 0) throw std::out_of_range("replay: no valid segment at " + std::to_string(start));
    EpisodeSegment s;
    s.goal = items_[start].goal;
    for (std::size_t j = 0; j < len; ++j) {
        const Transition& t = items_[start + j];
        s.observations.push_back(t.observation);
        s.actions.push_back(t.action);
        s.rewards.push_back(t.reward);
        s.durations.push_back(t.duration);
        s.terminals.push_back(t.terminal);
    }
    s.observations.push_back(items_[start + len - 1].next_observation);
    return s;
}

std::size_t ReplayBuffer::sample_start(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw WarmupIncomplete("replay: warmup incomplete (buffer is empty)");
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    // Rejection keeps the draw uniform over valid starts; invalid starts are
    // only the tails of unfinished episodes, so this rarely loops.
    for (int attempt = 0; attempt < 64; ++attempt) {
        const std::size_t i = pick(rng);
        if (segment_length(i, n) > 0) return i;
    }
    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < items_.size(); ++i) {
        if (segment_length(i, n) > 0) valid.push_back(i);
    }
    if (valid.empty()) {
        throw WarmupIncomplete("replay: warmup incomplete (no complete segment of length " + std::to_string(n) + ")");
    }
    return valid[std::uniform_int_distribution<std::size_t>(0, valid.size() - 1)(rng)];
}

EpisodeSegment ReplayBuffer::sample(std::size_t n, Rng& rng) const { return segment(sample_start(n, rng), n); }

}  // namespace grasp::train
