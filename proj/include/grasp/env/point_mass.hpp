#pragma once

#include "grasp/env/environment.hpp"

#include <array>

namespace grasp::env {

struct PointMassConfig {
    double dt = 0.05;
    double max_accel = 4.0;
    double position_bound = 1.0;
    double velocity_bound = 1.0;
    double crossing_radius = 0.1;
    std::array<std::array<double, 2>, 3> waypoints{{{-0.5, -0.4}, {0.5, -0.4}, {0.0, 0.6}}};
    int max_steps = 500;
    // Goto option controller and termination.
    double kp = 16.0;
    double kd = 8.0;
    double position_tolerance = 0.05;
    double velocity_tolerance = 0.1;
    int option_max_steps = 50;
    double gamma = default_gamma;
};

// Semi-implicit Euler update of a double integrator: velocity first, then
// position with the new velocity, each clipped to its box.
void integrate(std::array<double, 4>& state, std::array<double, 2> accel, double dt, double position_bound,
               double velocity_bound);

// Point mass that must pass through three fixed waypoints in the goal's
// order. Actions are goto options over the 4-D (x, y, u, v) configuration
// space driven by a PD controller.
//
// Observation (7): x, y, u, v, crossed flags for waypoints A, B, C.
// Goal (6): one-hot index into goal_orderings().
class PointMassWorld final : public Environment {
public:
    explicit PointMassWorld(PointMassConfig config = {});

    std::string id() const override { return "point_mass"; }
    std::size_t observation_dim() const override { return 7; }
    std::size_t goal_dim() const override { return 6; }
    std::size_t action_dim() const override { return 4; }
    bool option_mode() const override { return true; }

    ResetResult reset(Rng& rng) override;
    StepResult step(std::span<const double> action) override;

    bool done() const override { return done_; }
    bool solved() const override { return solved_; }
    const std::vector<TracePoint>& last_trace() const override { return trace_; }
    std::unique_ptr<Environment> clone() const override { return std::make_unique<PointMassWorld>(*this); }

    void set_state(std::array<double, 4> state, std::size_t goal_index);
    StepResult run_option(std::array<double, 4> target);

    const PointMassConfig& config() const { return config_; }
    const std::array<double, 4>& state() const { return state_; }
    std::size_t goal_index() const { return goal_index_; }
    int steps_taken() const { return steps_; }

    std::vector<double> observation() const;
    std::vector<double> goal() const { return one_hot_goal(goal_index_); }

private:
    // One primitive step; returns the primitive reward.
    double primitive(std::array<double, 2> accel);

    PointMassConfig config_;
    std::array<double, 4> state_{};
    std::array<bool, 3> crossed_{};
    std::size_t goal_index_ = 0;
    int progress_ = 0;
    int steps_ = 0;
    bool done_ = true;
    bool solved_ = false;
    std::vector<TracePoint> trace_;
};

}  // namespace grasp::env
