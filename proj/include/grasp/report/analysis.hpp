#pragma once

#include "grasp/train/trainer.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace grasp::report {

// One line of the trajectory dump:
// episode,step,head_index,x,y[,u,v],reward,event
struct TrajectoryRecord {
    std::size_t episode = 0;  // start-state index
    std::size_t step = 0;
    std::size_t head = 0;
    std::vector<double> state;  // x, y and, for point masses, u, v
    double reward = 0.0;
    std::string event;
};

std::string trajectory_header(bool velocities);
std::string format_record(const TrajectoryRecord& r);

// fixed: one object layout shared by every grid start; varied: a fresh
// layout and goal per grid start.
enum class Layout { fixed_objects, varied_objects };
Layout parse_layout(const std::string& name);

struct GridSpec {
    std::size_t columns = 3;
    std::size_t rows = 3;
};
GridSpec parse_grid(const std::string& spec);  // "3x3"

struct StartRollout {
    std::array<double, 2> start{};
    std::vector<std::array<double, 2>> landmarks;  // objects or waypoints
    std::vector<std::vector<std::array<double, 2>>> paths;  // per head
    std::vector<std::array<double, 2>> endpoints;  // per head
    bool injective = false;  // every head within delta of a distinct landmark
};

struct AffordanceRollouts {
    std::string env;
    std::size_t heads = 0;
    std::vector<TrajectoryRecord> records;
    std::vector<StartRollout> starts;
    double injective_fraction = 0.0;
};

// Executes every head's option once from each grid start. Requires an option
// environment (collect or point_mass).
AffordanceRollouts rollout_heads(train::Trainer& trainer, const GridSpec& grid, Layout layout, std::uint64_t seed,
                                 double delta = 0.1);

// Policy used for a whole episode: maps (observation, goal) to an action in
// [-1, 1]^d. The rng is the per-configuration policy stream.
using Policy = std::function<std::vector<double>(const std::vector<double>&, const std::vector<double>&, train::Rng&)>;

// Undiscounted episode returns of each policy on the same `configs` start
// and goal configurations: configuration j is reset from derive_seed(seed, 2j)
// for every policy, and each policy rng from derive_seed(seed, 2j + 1).
std::vector<std::vector<double>> paired_returns(const std::function<std::unique_ptr<env::Environment>()>& make_env,
                                                const std::vector<Policy>& policies, std::size_t configs,
                                                std::uint64_t seed);

struct HeadSummary {
    double mean = 0.0;
    double skew = 0.0;
    double frac_positive = 0.0;
};

struct SwitchReport {
    std::size_t heads = 0;
    std::size_t configs = 0;
    std::vector<double> plan_returns;
    std::vector<std::vector<double>> head_returns;  // [head][config]
    std::vector<std::vector<double>> deltas;        // plan - head, [head][config]
    std::vector<HeadSummary> summary;
};

// Planning policy (greedy root choice) against each head used alone.
// Throws std::invalid_argument for K = 1.
SwitchReport switch_analysis(train::Trainer& trainer, std::size_t configs, std::uint64_t seed);
SwitchReport summarize_switch(std::vector<double> plan_returns, std::vector<std::vector<double>> head_returns);

}  // namespace grasp::report
