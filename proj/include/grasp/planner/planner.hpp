#pragma once

#include "grasp/affordance/affordance.hpp"
#include "grasp/model/value_model.hpp"

#include <optional>
#include <random>

namespace grasp::planner {

using ad::Graph;
using ad::Var;
using affordance::AffordanceModule;
using model::ValueModel;
using Rng = std::mt19937_64;

enum class Mode { complete, uct };
enum class BackupMode { softmax, visit_count };

Mode parse_mode(const std::string& name);
std::string mode_name(Mode m);

struct PlannerConfig {
    Mode mode = Mode::complete;
    std::size_t depth = 2;
    double tau = 1.0;
    std::size_t trajectories = 50;
    double c1 = 1.25;
    double c2 = 19652.0;
    std::size_t node_budget = 4096;
    double gamma = 0.99;
    // Unset: softmax for complete trees, visit counts for UCT.
    std::optional<BackupMode> backup;
};

BackupMode effective_backup(const PlannerConfig& config);

// Nodes in a complete K-ary tree of the given depth: sum_{d=0..D} K^d.
std::size_t complete_node_count(std::size_t branching, std::size_t depth);
// Throws std::invalid_argument with a diagnostic when the configuration is
// unusable for K heads (zero depth, zero trajectories, node budget exceeded).
void validate(const PlannerConfig& config, std::size_t branching);

// Complete K-ary lookahead for a batch of roots, stored level by level. Level
// l holds roots * K^l nodes; the children of node i on level l are rows
// i*K .. i*K+K-1 of level l+1, and edge rows are indexed like child rows.
struct CompleteTree {
    std::size_t roots = 0;
    std::size_t branching = 0;
    std::size_t depth = 0;
    std::vector<Var> states;     // depth + 1 entries, (N_l, state_width)
    std::vector<Var> actions;    // depth entries, (N_{l+1}, action_dim)
    std::vector<Var> rewards;    // depth entries, (N_{l+1}, 1)
    std::vector<Var> durations;  // depth entries, (N_{l+1}, 1)
    Var leaf_values;             // (N_D, 1)

    std::size_t level_size(std::size_t level) const;
    std::size_t node_count() const;
    std::size_t edge_count() const { return node_count() - roots; }
};

struct CompleteBackup {
    std::vector<Var> q;       // depth entries, (N_l, K)
    std::vector<Var> policy;  // depth entries, (N_l, K)
    std::vector<Var> values;  // depth + 1 entries, (N_l, 1)
};

CompleteTree expand_complete(Graph& g, Var roots, ValueModel& model, AffordanceModule& affordances,
                             const PlannerConfig& config);

// Leaf value from the value network; Q = r̂ + gamma^n̂ V(child); node value is
// the policy-weighted sum of its Qs. Softmax mode uses softmax(Q / tau); in
// visit-count mode every edge of a complete tree is taken once, so the
// weights are uniform constants.
CompleteBackup backup(const CompleteTree& tree, double gamma, double tau, BackupMode mode);

// Partial tree grown by UCT trajectories for a single root.
struct SearchEdge {
    std::size_t parent = 0;
    std::size_t child = 0;
    std::size_t affordance = 0;
    Var action;
    Var reward;
    Var duration;
    int visits = 0;
    double return_sum = 0.0;

    double mean_return() const { return visits > 0 ? return_sum / visits : 0.0; }
};

struct SearchNode {
    Var state;
    std::size_t depth = 0;
    int visits = 0;
    Var affordances;                // (1, K * action_dim), set on first expansion
    std::vector<std::ptrdiff_t> edges;  // per affordance index, -1 if not taken
    Var leaf_value;                 // set for nodes at the depth limit
};

struct SearchTree {
    std::size_t branching = 0;
    std::size_t depth = 0;
    std::vector<SearchNode> nodes;
    std::vector<SearchEdge> edges;
    int expansions = 0;
};

// Tracks the range of backed-up edge returns so Q̄ can be normalised to [0, 1].
class MinMaxStats {
public:
    void update(double x);
    double normalize(double x) const;

private:
    double lo_ = std::numeric_limits<double>::infinity();
    double hi_ = -std::numeric_limits<double>::infinity();
};

// pUCT exploration bonus with a uniform prior over `branching` affordances.
double uct_bonus(int parent_visits, int edge_visits, std::size_t branching, double c1, double c2);

SearchTree expand_uct(Graph& g, Var root, ValueModel& model, AffordanceModule& affordances,
                      const PlannerConfig& config, Rng& rng);

struct TreeBackup {
    std::vector<Var> node_values;
    std::vector<Var> edge_q;                   // indexed like tree.edges
    std::vector<std::vector<double>> policy;   // per node, over its taken edges in affordance order
};

TreeBackup backup(const SearchTree& tree, double gamma, double tau, BackupMode mode);

struct PlanResult {
    std::vector<double> policy;  // over the K affordances
    Var root_value;
    std::vector<double> root_q;  // NaN for affordances not taken (UCT with H < K)
    std::vector<std::vector<double>> actions;
    std::size_t tree_nodes = 0;
    std::size_t expansions = 0;
};

// Plans from a single abstract state (1, state_width).
PlanResult plan(Graph& g, Var root, ValueModel& model, AffordanceModule& affordances, const PlannerConfig& config,
                Rng& rng);

struct RootChoice {
    std::size_t index = 0;
    std::vector<double> action;
};

// Samples an affordance index from the root policy, or takes the argmax
// (ties to the lowest index) when greedy.
RootChoice root_sample(const PlanResult& result, Rng& rng, bool greedy);

// Sum of root values V(s_0) over a batch of root states (B, state_width),
// to be maximised with respect to the affordance parameters.
Var affordance_objective(Graph& g, Var roots, ValueModel& model, AffordanceModule& affordances,
                         const PlannerConfig& config, Rng& rng);

// Uniform double in [0, 1) from 53 random bits.
double uniform01(Rng& rng);

}  // namespace grasp::planner
