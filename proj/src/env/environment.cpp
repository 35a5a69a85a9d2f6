#include "grasp/env/environment.hpp"

#include "grasp/env/collect.hpp"
#include "grasp/env/point_mass.hpp"
#include "grasp/env/reach_goal.hpp"

namespace grasp::env {

const std::vector<std::array<int, 3>>& goal_orderings() {
    static const std::vector<std::array<int, 3>> table{
        {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
    };
    return table;
}

std::vector<double> one_hot_goal(std::size_t index) {
    std::vector<double> g(goal_orderings().size(), 0.0);
    g.at(index) = 1.0;
    return g;
}

std::unique_ptr<Environment> make_environment(const std::string& id, double gamma) {
    EnvOptions o;
    o.gamma = gamma;
    return make_environment(id, o);
}

std::unique_ptr<Environment> make_environment(const std::string& id, const EnvOptions& options) {
    const double gamma = options.gamma;
    if (id == "collect") {
        CollectConfig c;
        c.gamma = gamma;
        c.step_size = options.collect_step;
        return std::make_unique<CollectWorld>(c);
    }
    if (id == "point_mass") {
        PointMassConfig c;
        c.gamma = gamma;
        return std::make_unique<PointMassWorld>(c);
    }
    if (id == "reach_goal") return std::make_unique<ReachGoal>();
    throw std::invalid_argument("unknown environment '" + id + "' (expected collect, point_mass or reach_goal)");
}

}  // namespace grasp::env
