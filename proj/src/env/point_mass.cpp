#include "grasp/env/point_mass.hpp"

#include <algorithm>
#include <cmath>

namespace grasp::env {

void integrate(std::array<double, 4>& s, std::array<double, 2> accel, double dt, double position_bound,
               double velocity_bound) {
    for (int i = 0; i < 2; ++i) {
        s[2 + i] = std::clamp(s[2 + i] + accel[i] * dt, -velocity_bound, velocity_bound);
        const double p = s[i] + s[2 + i] * dt;
        if (p > position_bound || p < -position_bound) {
            s[i] = std::clamp(p, -position_bound, position_bound);
            s[2 + i] = 0.0;
        } else {
            s[i] = p;
        }
    }
}

PointMassWorld::PointMassWorld(PointMassConfig config) : config_(config) {}

ResetResult PointMassWorld::reset(Rng& rng) {
    std::uniform_real_distribution<double> pos(-0.9 * config_.position_bound, 0.9 * config_.position_bound);
    state_ = {pos(rng), pos(rng), 0.0, 0.0};
    goal_index_ = std::uniform_int_distribution<std::size_t>(0, goal_orderings().size() - 1)(rng);
    crossed_ = {false, false, false};
    progress_ = 0;
    steps_ = 0;
    done_ = false;
    solved_ = false;
    trace_.clear();
    return {observation(), goal()};
}

void PointMassWorld::set_state(std::array<double, 4> state, std::size_t goal_index) {
    state_ = state;
    goal_index_ = goal_index;
    crossed_ = {false, false, false};
    progress_ = 0;
    steps_ = 0;
    done_ = false;
    solved_ = false;
    trace_.clear();
}

std::vector<double> PointMassWorld::observation() const {
    std::vector<double> obs(state_.begin(), state_.end());
    for (bool c : crossed_) obs.push_back(c ? 1.0 : 0.0);
    return obs;
}

double PointMassWorld::primitive(std::array<double, 2> accel) {
    for (double& a : accel) a = std::clamp(a, -config_.max_accel, config_.max_accel);
    integrate(state_, accel, config_.dt, config_.position_bound, config_.velocity_bound);
    ++steps_;
    double reward = 0.0;
    std::string event = "move";
    const int next = goal_orderings()[goal_index_][progress_];
    const auto& w = config_.waypoints[next];
    if (std::hypot(state_[0] - w[0], state_[1] - w[1]) <= config_.crossing_radius) {
        crossed_[next] = true;
        ++progress_;
        event = std::string("crossed_") + "ABC"[next];
        if (progress_ == 3) {
            done_ = true;
            solved_ = true;
            reward = 1.0;
            event = "solved";
        }
    }
    if (!done_ && steps_ >= config_.max_steps) done_ = true;
    trace_.push_back({{state_[0], state_[1], state_[2], state_[3]}, reward, event});
    return reward;
}

StepResult PointMassWorld::step(std::span<const double> action) {
    if (action.size() != 4) throw std::invalid_argument("point_mass: option vector must have 4 components");
    std::array<double, 4> target{};
    for (int i = 0; i < 2; ++i) {
        target[i] = std::clamp(action[i], -1.0, 1.0) * config_.position_bound;
        target[2 + i] = std::clamp(action[2 + i], -1.0, 1.0) * config_.velocity_bound;
    }
    return run_option(target);
}

StepResult PointMassWorld::run_option(std::array<double, 4> target) {
    if (done_) throw EpisodeOver("point_mass: option issued after the episode ended");
    trace_.clear();
    trace_.push_back({{state_[0], state_[1], state_[2], state_[3]}, 0.0, "start"});
    StepResult out;
    double discount = 1.0;
    int n = 0;
    while (n < config_.option_max_steps && !done_) {
        std::array<double, 2> accel{};
        for (int i = 0; i < 2; ++i) {
            accel[i] = config_.kp * (target[i] - state_[i]) + config_.kd * (target[2 + i] - state_[2 + i]);
        }
        out.reward += discount * primitive(accel);
        discount *= config_.gamma;
        ++n;
        const bool near_pos = std::hypot(state_[0] - target[0], state_[1] - target[1]) <= config_.position_tolerance;
        const bool near_vel = std::hypot(state_[2] - target[2], state_[3] - target[3]) <= config_.velocity_tolerance;
        if (near_pos && near_vel) break;
    }
    out.duration = n;
    out.observation = observation();
    out.terminal = solved_;
    out.truncated = done_ && !solved_;
    return out;
}

}  // namespace grasp::env
