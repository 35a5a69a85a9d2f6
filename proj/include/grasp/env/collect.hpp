#pragma once

#include "grasp/env/environment.hpp"

#include <array>

namespace grasp::env {

struct CollectConfig {
    double step_size = 0.05;  // primitive move length, also the collect radius
    double spawn_lo = 0.05;
    double spawn_hi = 0.95;
    // Objects are resampled until pairwise distances reach this, so that
    // the collect radius never covers two objects at once.
    double min_object_separation = 0.15;
    int max_options = 100;
    double gamma = default_gamma;
};

// Unit-square world with an agent and three objects A, B, C that must be
// collected in the order given by the goal. Actions are navigate-and-collect
// options parameterised by a target point.
//
// Observation (11): agent x, y; A x, y; B x, y; C x, y; collected flags A, B, C.
// Goal (6): one-hot index into goal_orderings().
class CollectWorld final : public Environment {
public:
    explicit CollectWorld(CollectConfig config = {});

    std::string id() const override { return "collect"; }
    std::size_t observation_dim() const override { return 11; }
    std::size_t goal_dim() const override { return 6; }
    std::size_t action_dim() const override { return 2; }
    bool option_mode() const override { return true; }

    ResetResult reset(Rng& rng) override;
    StepResult step(std::span<const double> action) override;

    bool done() const override { return done_; }
    bool solved() const override { return solved_; }
    const std::vector<TracePoint>& last_trace() const override { return trace_; }
    std::unique_ptr<Environment> clone() const override { return std::make_unique<CollectWorld>(*this); }

    // Places everything explicitly; used by tests and the visualiser.
    void set_state(std::array<double, 2> agent, std::array<std::array<double, 2>, 3> objects, std::size_t goal_index);

    // Runs the navigate-and-collect option towards a native target in [0,1]^2.
    StepResult run_option(std::array<double, 2> target);

    // Maps [-1, 1]^2 onto the unit square.
    static std::array<double, 2> to_native(std::span<const double> action);
    static std::array<double, 2> to_normalized(std::array<double, 2> target);

    // Upper bound on primitive steps consumed by one option.
    int option_step_bound() const;

    const CollectConfig& config() const { return config_; }
    std::array<double, 2> agent() const { return agent_; }
    const std::array<std::array<double, 2>, 3>& objects() const { return objects_; }
    const std::array<bool, 3>& collected() const { return collected_; }
    std::size_t goal_index() const { return goal_index_; }
    int options_taken() const { return options_taken_; }

    std::vector<double> observation() const;
    std::vector<double> goal() const { return one_hot_goal(goal_index_); }

private:
    // Returns the primitive reward of one collect attempt.
    double collect();

    CollectConfig config_;
    std::array<double, 2> agent_{};
    std::array<std::array<double, 2>, 3> objects_{};
    std::array<bool, 3> collected_{};
    std::size_t goal_index_ = 0;
    int progress_ = 0;
    int options_taken_ = 0;
    bool done_ = true;
    bool solved_ = false;
    std::vector<TracePoint> trace_;
};

}  // namespace grasp::env
