#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace grasp::env {

using Rng = std::mt19937_64;

class EpisodeOver : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct ResetResult {
    std::vector<double> observation;
    std::vector<double> goal;
};

struct StepResult {
    // Discounted within-option sum for option environments, the single
    // primitive reward otherwise.
    double reward = 0.0;
    int duration = 1;
    std::vector<double> observation;
    bool terminal = false;   // true environment termination (no bootstrap)
    bool truncated = false;  // episode cap reached (bootstrap still valid)
};

// Position samples recorded while the last action or option executed.
struct TracePoint {
    std::vector<double> state;  // x, y and, for point masses, u, v
    double reward = 0.0;
    std::string event;
};

class Environment {
public:
    virtual ~Environment() = default;

    virtual std::string id() const = 0;
    virtual std::size_t observation_dim() const = 0;
    virtual std::size_t goal_dim() const = 0;
    virtual std::size_t action_dim() const = 0;
    virtual bool option_mode() const = 0;

    virtual ResetResult reset(Rng& rng) = 0;
    // `action` lies in [-1, 1]^action_dim; each environment maps it onto its
    // native action or option box.
    virtual StepResult step(std::span<const double> action) = 0;

    virtual bool done() const = 0;
    // 1 once the episode's task has been solved.
    virtual bool solved() const = 0;
    virtual const std::vector<TracePoint>& last_trace() const = 0;

    virtual std::unique_ptr<Environment> clone() const = 0;
};

inline constexpr double default_gamma = 0.99;

struct EnvOptions {
    double gamma = default_gamma;
    double collect_step = 0.05;
};

// Ids: "collect", "point_mass", "reach_goal".
std::unique_ptr<Environment> make_environment(const std::string& id, double gamma = default_gamma);
std::unique_ptr<Environment> make_environment(const std::string& id, const EnvOptions& options);

// The six orderings of three objects, lexicographic; goal vectors one-hot
// encode an index into this table.
const std::vector<std::array<int, 3>>& goal_orderings();
std::vector<double> one_hot_goal(std::size_t index);

}  // namespace grasp::env
