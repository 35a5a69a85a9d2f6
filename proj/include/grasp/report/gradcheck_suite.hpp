#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace grasp::report {

struct SuiteEntry {
    std::string group;  // "op", "network" or "planner"
    std::string name;
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    std::size_t entries = 0;
    std::string worst;  // parameter[index] analytic vs numeric at the worst entry
    bool pass() const { return max_rel_error < tolerance; }
};

// Central-difference check of every primitive op, every network and the
// planner objective (softmax backup, K <= 3, D <= 2, options on and off).
// Ops and networks must stay below 1e-4, the planner objective below 1e-3.
std::vector<SuiteEntry> run_gradcheck_suite(std::uint64_t seed = 0);

}  // namespace grasp::report
