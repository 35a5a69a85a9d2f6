#include "grasp/env/collect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace grasp::env {

CollectWorld::CollectWorld(CollectConfig config) : config_(config) {}

ResetResult CollectWorld::reset(Rng& rng) {
    std::uniform_real_distribution<double> pos(config_.spawn_lo, config_.spawn_hi);
    agent_ = {pos(rng), pos(rng)};
    for (;;) {
        for (auto& o : objects_) o = {pos(rng), pos(rng)};
        bool separated = true;
        for (int i = 0; i < 3; ++i) {
            for (int j = i + 1; j < 3; ++j) {
                const double d = std::hypot(objects_[i][0] - objects_[j][0], objects_[i][1] - objects_[j][1]);
                separated = separated && d >= config_.min_object_separation;
            }
        }
        if (separated) break;
    }
    goal_index_ = std::uniform_int_distribution<std::size_t>(0, goal_orderings().size() - 1)(rng);
    collected_ = {false, false, false};
    progress_ = 0;
    options_taken_ = 0;
    done_ = false;
    solved_ = false;
    trace_.clear();
    return {observation(), goal()};
}

void CollectWorld::set_state(std::array<double, 2> agent, std::array<std::array<double, 2>, 3> objects,
                             std::size_t goal_index) {
    agent_ = agent;
    objects_ = objects;
    goal_index_ = goal_index;
    collected_ = {false, false, false};
    progress_ = 0;
    options_taken_ = 0;
    done_ = false;
    solved_ = false;
    trace_.clear();
}

std::vector<double> CollectWorld::observation() const {
    std::vector<double> obs{agent_[0], agent_[1]};
    for (const auto& o : objects_) {
        obs.push_back(o[0]);
        obs.push_back(o[1]);
    }
    for (bool c : collected_) obs.push_back(c ? 1.0 : 0.0);
    return obs;
}

std::array<double, 2> CollectWorld::to_native(std::span<const double> action) {
    if (action.size() != 2) throw std::invalid_argument("collect: option vector must have 2 components");
    std::array<double, 2> t{};
    for (int i = 0; i < 2; ++i) t[i] = std::clamp((action[i] + 1.0) * 0.5, 0.0, 1.0);
    return t;
}

std::array<double, 2> CollectWorld::to_normalized(std::array<double, 2> target) {
    return {2.0 * target[0] - 1.0, 2.0 * target[1] - 1.0};
}

int CollectWorld::option_step_bound() const { return static_cast<int>(std::ceil(2.0 / config_.step_size)) + 1; }

StepResult CollectWorld::step(std::span<const double> action) { return run_option(to_native(action)); }

double CollectWorld::collect() {
    int nearest = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        if (collected_[i]) continue;
        const double d = std::hypot(objects_[i][0] - agent_[0], objects_[i][1] - agent_[1]);
        if (d <= config_.step_size + 1e-12 && d < best) {
            best = d;
            nearest = i;
        }
    }
    if (nearest < 0) {
        trace_.push_back({{agent_[0], agent_[1]}, 0.0, "collect_miss"});
        return 0.0;
    }
    const auto& order = goal_orderings()[goal_index_];
    if (order[progress_] != nearest) {
        done_ = true;
        trace_.push_back({{agent_[0], agent_[1]}, 0.0, "wrong_object"});
        return 0.0;
    }
    collected_[nearest] = true;
    ++progress_;
    if (progress_ == 3) {
        done_ = true;
        solved_ = true;
        trace_.push_back({{agent_[0], agent_[1]}, 1.0, "solved"});
        return 1.0;
    }
    trace_.push_back({{agent_[0], agent_[1]}, 0.0, std::string("collected_") + "ABC"[nearest]});
    return 0.0;
}

StepResult CollectWorld::run_option(std::array<double, 2> target) {
    if (done_) throw EpisodeOver("collect: option issued after the episode ended");
    trace_.clear();
    trace_.push_back({{agent_[0], agent_[1]}, 0.0, "start"});
    const double eps = config_.step_size;
    const double half = 0.5 * eps + 1e-12;
    int steps = 0;
    const int bound = option_step_bound();
    // Greedy grid moves until no axis gap exceeds half a step.
    while (steps + 1 < bound) {
        const double dx = target[0] - agent_[0];
        const double dy = target[1] - agent_[1];
        if (std::abs(dx) <= half && std::abs(dy) <= half) break;
        if (std::abs(dx) >= std::abs(dy)) {
            agent_[0] = std::clamp(agent_[0] + std::copysign(eps, dx), 0.0, 1.0);
        } else {
            agent_[1] = std::clamp(agent_[1] + std::copysign(eps, dy), 0.0, 1.0);
        }
        ++steps;
        trace_.push_back({{agent_[0], agent_[1]}, 0.0, "move"});
    }
    const double r = collect();
    const double discounted = std::pow(config_.gamma, steps) * r;
    ++steps;
    ++options_taken_;
    StepResult out;
    out.reward = discounted;
    out.duration = steps;
    out.observation = observation();
    out.terminal = done_;
    if (!done_ && options_taken_ >= config_.max_options) {
        done_ = true;
        out.truncated = true;
    }
    return out;
}

}  // namespace grasp::env
