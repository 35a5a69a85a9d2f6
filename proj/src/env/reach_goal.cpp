#include "grasp/env/reach_goal.hpp"

#include "grasp/env/point_mass.hpp"

#include <algorithm>
#include <cmath>

namespace grasp::env {

ReachGoal::ReachGoal(ReachGoalConfig config) : config_(config) {}

ResetResult ReachGoal::reset(Rng& rng) {
    std::uniform_real_distribution<double> pos(-0.9 * config_.position_bound, 0.9 * config_.position_bound);
    std::uniform_real_distribution<double> goal(-config_.goal_bound, config_.goal_bound);
    state_ = {pos(rng), pos(rng), 0.0, 0.0};
    goal_ = {goal(rng), goal(rng)};
    steps_ = 0;
    done_ = false;
    trace_.clear();
    return {{state_.begin(), state_.end()}, {goal_.begin(), goal_.end()}};
}

void ReachGoal::set_state(std::array<double, 4> state, std::array<double, 2> goal) {
    state_ = state;
    goal_ = goal;
    steps_ = 0;
    done_ = false;
    trace_.clear();
}

double ReachGoal::distance() const { return std::hypot(state_[0] - goal_[0], state_[1] - goal_[1]); }

StepResult ReachGoal::step(std::span<const double> action) {
    if (done_) throw EpisodeOver("reach_goal: action issued after the episode ended");
    if (action.size() != 2) throw std::invalid_argument("reach_goal: action must have 2 components");
    std::array<double, 2> accel{};
    for (int i = 0; i < 2; ++i) accel[i] = std::clamp(action[i], -1.0, 1.0) * config_.max_accel;
    integrate(state_, accel, config_.dt, config_.position_bound, config_.velocity_bound);
    ++steps_;
    StepResult out;
    out.reward = -distance();
    out.duration = 1;
    out.observation = {state_.begin(), state_.end()};
    if (steps_ >= config_.max_steps) {
        done_ = true;
        out.truncated = true;
    }
    trace_.assign(1, TracePoint{{state_[0], state_[1], state_[2], state_[3]}, out.reward, "move"});
    return out;
}

}  // namespace grasp::env
