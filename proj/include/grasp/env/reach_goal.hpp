#pragma once

#include "grasp/env/environment.hpp"

#include <array>

namespace grasp::env {

struct ReachGoalConfig {
    double dt = 0.05;
    double max_accel = 2.0;
    double position_bound = 1.0;
    double velocity_bound = 1.0;
    double goal_bound = 0.8;
    int max_steps = 200;
};

// Goal-reaching double integrator with continuous primitive actions and a
// shaped reward of minus the distance to the goal after each step.
//
// Observation (4): x, y, u, v. Goal (2): goal x, y.
class ReachGoal final : public Environment {
public:
    explicit ReachGoal(ReachGoalConfig config = {});

    std::string id() const override { return "reach_goal"; }
    std::size_t observation_dim() const override { return 4; }
    std::size_t goal_dim() const override { return 2; }
    std::size_t action_dim() const override { return 2; }
    bool option_mode() const override { return false; }

    ResetResult reset(Rng& rng) override;
    StepResult step(std::span<const double> action) override;

    bool done() const override { return done_; }
    bool solved() const override { return distance() < 0.05; }
    const std::vector<TracePoint>& last_trace() const override { return trace_; }
    std::unique_ptr<Environment> clone() const override { return std::make_unique<ReachGoal>(*this); }

    void set_state(std::array<double, 4> state, std::array<double, 2> goal);

    const ReachGoalConfig& config() const { return config_; }
    const std::array<double, 4>& state() const { return state_; }
    double distance() const;
    int steps_taken() const { return steps_; }

private:
    ReachGoalConfig config_;
    std::array<double, 4> state_{};
    std::array<double, 2> goal_{};
    int steps_ = 0;
    bool done_ = true;
    std::vector<TracePoint> trace_;
};

}  // namespace grasp::env
