#include "grasp/autodiff/adam.hpp"
#include "grasp/autodiff/gradcheck.hpp"
#include "grasp/planner/planner.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

using namespace grasp;
using namespace grasp::planner;

namespace {

struct TreeData {
    std::size_t k = 0;
    std::size_t depth = 0;
    std::vector<std::vector<double>> rewards;    // per level, N_{l+1} entries
    std::vector<std::vector<double>> durations;  // per level, N_{l+1} entries
    std::vector<double> leaves;
};

TreeData random_tree_data(std::size_t k, std::size_t depth, ad::Rng& rng, bool options) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> dur(0.5, 6.0);
    TreeData t;
    t.k = k;
    t.depth = depth;
    std::size_t n = 1;
    for (std::size_t l = 0; l < depth; ++l) {
        n *= k;
        std::vector<double> r(n), d(n);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = u(rng);
            d[i] = options ? dur(rng) : 1.0;
        }
        t.rewards.push_back(r);
        t.durations.push_back(d);
    }
    t.leaves.resize(n);
    for (double& v : t.leaves) v = 3.0 * u(rng);
    return t;
}

CompleteTree as_complete_tree(Graph& g, const TreeData& d) {
    CompleteTree t;
    t.roots = 1;
    t.branching = d.k;
    t.depth = d.depth;
    for (std::size_t l = 0; l < d.depth; ++l) {
        const std::size_t n = d.rewards[l].size();
        t.rewards.push_back(g.constant(ad::Tensor(ad::Shape{n, 1}, d.rewards[l])));
        t.durations.push_back(g.constant(ad::Tensor(ad::Shape{n, 1}, d.durations[l])));
    }
    t.leaf_values = g.constant(ad::Tensor(ad::Shape{d.leaves.size(), 1}, d.leaves));
    return t;
}

// Scalar enumeration: walks every node by (level, index) with explicit loops.
double enumerate_value(const TreeData& d, std::size_t level, std::size_t index, double gamma, double tau,
                       std::vector<double>* policy_sums) {
    if (level == d.depth) return d.leaves[index];
    std::vector<double> q(d.k);
    for (std::size_t c = 0; c < d.k; ++c) {
        const std::size_t child = index * d.k + c;
        q[c] = d.rewards[level][child] +
               std::pow(gamma, d.durations[level][child]) * enumerate_value(d, level + 1, child, gamma, tau, policy_sums);
    }
    double mx = q[0];
    for (double x : q) mx = std::max(mx, x);
    double z = 0.0;
    for (double x : q) z += std::exp((x - mx) / tau);
    double v = 0.0, s = 0.0;
    for (double x : q) {
        const double p = std::exp((x - mx) / tau) / z;
        v += p * x;
        s += p;
    }
    if (policy_sums) policy_sums->push_back(s);
    return v;
}

struct Fixture {
    model::ValueModel model;
    affordance::AffordanceModule aff;
};

Fixture make_fixture(std::size_t k, bool options, std::uint64_t seed, affordance::Variant v = affordance::Variant::goal_state) {
    model::ModelConfig c;
    c.observation_dim = 3;
    c.action_dim = 2;
    c.state_dim = 4;
    c.hidden = 8;
    c.option_mode = options;
    c.gamma = 0.9;
    ad::Rng rng(seed);
    Fixture f{model::ValueModel(c, rng), affordance::make_variant(v, k, 4, 2, 8, seed + 100, false)};
    return f;
}

Var random_states(Graph& g, std::size_t rows, ad::Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ad::Tensor t(ad::Shape{rows, 4});
    for (double& x : t.data()) x = u(rng);
    return g.constant(t);
}

PlannerConfig config_for(Mode mode, std::size_t depth, std::size_t h = 20) {
    PlannerConfig c;
    c.mode = mode;
    c.depth = depth;
    c.trajectories = h;
    c.gamma = 0.9;
    return c;
}

}  // namespace

TEST(CompleteTree, NodeAndEdgeCounts) {
    EXPECT_EQ(complete_node_count(4, 2), 21u);
    EXPECT_EQ(complete_node_count(3, 2), 13u);
    EXPECT_EQ(complete_node_count(1, 5), 6u);
    auto f = make_fixture(4, false, 1);
    Graph g;
    ad::Rng rng(1);
    auto tree = expand_complete(g, random_states(g, 1, rng), f.model, f.aff, config_for(Mode::complete, 2));
    EXPECT_EQ(tree.node_count(), 21u);
    EXPECT_EQ(tree.edge_count(), 20u);
    EXPECT_EQ(tree.states[2].rows(), 16u);
    EXPECT_EQ(tree.leaf_values.rows(), 16u);
}

TEST(CompleteTree, SingleHeadIsAChain) {
    auto f = make_fixture(1, false, 2);
    Graph g;
    ad::Rng rng(2);
    auto tree = expand_complete(g, random_states(g, 1, rng), f.model, f.aff, config_for(Mode::complete, 4));
    for (const auto& s : tree.states) EXPECT_EQ(s.rows(), 1u);
    EXPECT_EQ(tree.node_count(), 5u);
}

TEST(CompleteTree, ChildrenFollowTheirParentsHeads) {
    auto f = make_fixture(3, false, 3);
    Graph g;
    ad::Rng rng(3);
    auto tree = expand_complete(g, random_states(g, 2, rng), f.model, f.aff, config_for(Mode::complete, 2));
    // node 4 on level 1 is root 1, head 1; its child 2 is row 14 on level 2
    Var parent = ad::gather_rows(tree.states[1], {4});
    Var heads = f.aff.afford(g, parent);
    auto t = f.model.transition(g, parent, ad::slice(heads, 4, 6));
    const ad::Tensor expected = t.next_state.value();
    const ad::Tensor got = ad::gather_rows(tree.states[2], {14}).value();
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(got.at(0, c), expected.at(0, c), 1e-14);
}

TEST(CompleteTree, NodeBudgetEnforced) {
    PlannerConfig c = config_for(Mode::complete, 6);
    c.node_budget = 4096;
    EXPECT_THROW(validate(c, 4), std::invalid_argument);
    c.depth = 5;
    EXPECT_NO_THROW(validate(c, 4));
    c.depth = 0;
    EXPECT_THROW(validate(c, 4), std::invalid_argument);
    PlannerConfig u = config_for(Mode::uct, 2, 5000);
    EXPECT_THROW(validate(u, 4), std::invalid_argument);
    try {
        validate(config_for(Mode::complete, 7), 8);
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("budget"), std::string::npos);
    }
}

TEST(Backup, MatchesEnumerationOracle) {
    ad::Rng rng(4);
    std::uniform_int_distribution<std::size_t> kd(1, 4), dd(1, 3);
    std::uniform_real_distribution<double> gd(0.5, 1.0), td(0.2, 3.0);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t k = kd(rng), depth = dd(rng);
        const double gamma = gd(rng), tau = td(rng);
        TreeData d = random_tree_data(k, depth, rng, trial % 2 == 1);
        Graph g;
        CompleteBackup b = backup(as_complete_tree(g, d), gamma, tau, BackupMode::softmax);
        std::vector<double> sums;
        const double oracle = enumerate_value(d, 0, 0, gamma, tau, &sums);
        EXPECT_NEAR(b.values[0].item(), oracle, 1e-10) << "K=" << k << " D=" << depth;
        for (const auto& pi : b.policy) {
            for (double s : ad::row_sum(pi).value().data()) EXPECT_NEAR(s, 1.0, 1e-12);
        }
    }
}

TEST(Backup, DepthZeroIsLeafValue) {
    Graph g;
    CompleteTree t;
    t.roots = 1;
    t.branching = 3;
    t.leaf_values = g.constant(ad::Tensor::scalar(0.25).reshaped({1, 1}));
    EXPECT_EQ(backup(t, 0.9, 1.0, BackupMode::softmax).values[0].item(), 0.25);
    EXPECT_THROW(backup(CompleteTree{}, 0.9, 1.0, BackupMode::softmax), std::invalid_argument);
}

TEST(Backup, LowTemperatureApproachesMax) {
    TreeData d{2, 1, {{0.0, 0.0}}, {{1.0, 1.0}}, {1.0, 3.0}};
    Graph g;
    EXPECT_NEAR(backup(as_complete_tree(g, d), 1.0, 1e-3, BackupMode::softmax).values[0].item(), 3.0, 1e-12);
    const double v1 = backup(as_complete_tree(g, d), 1.0, 1.0, BackupMode::softmax).values[0].item();
    EXPECT_LT(v1, 3.0);
    EXPECT_GT(v1, 2.0);
}

TEST(Backup, VisitModeOnCompleteTreeIsUniform) {
    TreeData d{2, 1, {{0.5, 0.0}}, {{1.0, 1.0}}, {1.0, 3.0}};
    Graph g;
    EXPECT_NEAR(backup(as_complete_tree(g, d), 0.5, 1.0, BackupMode::visit_count).values[0].item(),
                0.5 * (0.5 + 0.5) + 0.5 * 1.5, 1e-15);
}

TEST(Backup, ConstantShiftKeepsRootArgmax) {
    ad::Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        TreeData d = random_tree_data(3, 2, rng, false);
        TreeData shifted = d;
        const double c = 10.0 * (trial % 7 - 3);
        for (double& v : shifted.leaves) v += c;
        Graph g;
        CompleteBackup a = backup(as_complete_tree(g, d), 0.9, 1.0, BackupMode::softmax);
        CompleteBackup b = backup(as_complete_tree(g, shifted), 0.9, 1.0, BackupMode::softmax);
        EXPECT_NEAR(b.values[0].item() - a.values[0].item(), 0.81 * c, 1e-10);
        EXPECT_EQ(ad::max_index(a.q[0]), ad::max_index(b.q[0]));
    }
}

TEST(Uct, EqualBudgetVisitsEveryRootHeadOnce) {
    auto f = make_fixture(4, false, 6);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Graph g;
        Rng rng(seed);
        auto tree = expand_uct(g, random_states(g, 1, rng), f.model, f.aff, config_for(Mode::uct, 2, 4), rng);
        for (auto e : tree.nodes[0].edges) {
            ASSERT_GE(e, 0);
            EXPECT_EQ(tree.edges[e].visits, 1);
        }
    }
}

TEST(Uct, CoverageAndVisitPolicy) {
    auto f = make_fixture(4, true, 7);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        for (std::size_t h : {20, 50}) {
            Graph g;
            Rng rng(seed);
            PlannerConfig c = config_for(Mode::uct, 2, h);
            auto tree = expand_uct(g, random_states(g, 1, rng), f.model, f.aff, c, rng);
            int total = 0;
            for (auto e : tree.nodes[0].edges) {
                ASSERT_GE(e, 0);
                EXPECT_GE(tree.edges[e].visits, 1);
                total += tree.edges[e].visits;
            }
            EXPECT_EQ(total, static_cast<int>(h));
            EXPECT_EQ(tree.nodes[0].visits, static_cast<int>(h));
            auto b = backup(tree, c.gamma, c.tau, BackupMode::visit_count);
            for (std::size_t k = 0; k < 4; ++k) {
                EXPECT_EQ(b.policy[0][k], static_cast<double>(tree.edges[tree.nodes[0].edges[k]].visits) / total);
            }
            // every trajectory reaches the depth limit
            for (const auto& n : tree.nodes) {
                if (n.depth == c.depth) EXPECT_TRUE(n.leaf_value.valid());
            }
        }
    }
}

TEST(Uct, ZeroBonusSendsVisitsToBestEdge) {
    auto f = make_fixture(4, false, 8);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Graph g;
        Rng rng(seed);
        PlannerConfig c = config_for(Mode::uct, 1, 30);
        c.c1 = 0.0;
        c.c2 = 1e15;
        auto tree = expand_uct(g, random_states(g, 1, rng), f.model, f.aff, c, rng);
        std::size_t best = 0;
        for (std::size_t k = 1; k < 4; ++k) {
            if (tree.edges[tree.nodes[0].edges[k]].mean_return() > tree.edges[tree.nodes[0].edges[best]].mean_return()) {
                best = k;
            }
        }
        for (std::size_t k = 0; k < 4; ++k) {
            EXPECT_EQ(tree.edges[tree.nodes[0].edges[k]].visits, k == best ? 27 : 1) << "seed " << seed;
        }
    }
}

TEST(Uct, BackupMatchesScalarRecursion) {
    auto f = make_fixture(3, true, 9);
    Graph g;
    Rng rng(9);
    PlannerConfig c = config_for(Mode::uct, 3, 25);
    auto tree = expand_uct(g, random_states(g, 1, rng), f.model, f.aff, c, rng);
    for (BackupMode mode : {BackupMode::softmax, BackupMode::visit_count}) {
        auto b = backup(tree, c.gamma, 0.7, mode);
        std::function<double(std::size_t)> value = [&](std::size_t id) -> double {
            const auto& n = tree.nodes[id];
            std::vector<double> q, w;
            for (auto e : n.edges) {
                if (e < 0) continue;
                const auto& edge = tree.edges[e];
                q.push_back(edge.reward.item() + std::pow(c.gamma, edge.duration.item()) * value(edge.child));
                w.push_back(edge.visits);
            }
            if (q.empty()) return n.leaf_value.item();
            double z = 0.0, v = 0.0;
            if (mode == BackupMode::softmax) {
                for (double x : q) z += std::exp(x / 0.7);
                for (double x : q) v += std::exp(x / 0.7) / z * x;
            } else {
                for (double x : w) z += x;
                for (std::size_t i = 0; i < q.size(); ++i) v += w[i] / z * q[i];
            }
            return v;
        };
        EXPECT_NEAR(b.node_values[0].item(), value(0), 1e-10);
    }
}

TEST(RootSample, PointMassAlwaysChosen) {
    PlanResult r;
    r.policy = {1.0, 0.0, 0.0, 0.0};
    r.actions = {{0.1}, {0.2}, {0.3}, {0.4}};
    Rng rng(10);
    for (int i = 0; i < 1000; ++i) {
        auto c = root_sample(r, rng, false);
        EXPECT_EQ(c.index, 0u);
        EXPECT_EQ(c.action, r.actions[0]);
    }
}

TEST(RootSample, UniformFrequenciesWithinThreeSigma) {
    PlanResult r;
    r.policy = {0.25, 0.25, 0.25, 0.25};
    r.actions.assign(4, {0.0});
    Rng rng(11);
    const int n = 10000;
    std::vector<int> counts(4, 0);
    for (int i = 0; i < n; ++i) counts[root_sample(r, rng, false).index]++;
    const double sigma = std::sqrt(n * 0.25 * 0.75);
    for (int c : counts) EXPECT_LT(std::abs(c - n * 0.25), 3.0 * sigma);
}

TEST(RootSample, GreedyTakesArgmaxLowestOnTies) {
    PlanResult r;
    r.policy = {0.2, 0.5, 0.3};
    r.actions.assign(3, {0.0});
    Rng rng(12);
    EXPECT_EQ(root_sample(r, rng, true).index, 1u);
    r.policy = {0.4, 0.2, 0.4};
    EXPECT_EQ(root_sample(r, rng, true).index, 0u);
}

TEST(Plan, PolicySumsToOneAndActionsAreHeads) {
    for (Mode mode : {Mode::complete, Mode::uct}) {
        auto f = make_fixture(4, true, 13);
        Graph g;
        Rng rng(13);
        Var s = random_states(g, 1, rng);
        PlanResult r = plan(g, s, f.model, f.aff, config_for(mode, 2, 20), rng);
        double total = 0.0;
        for (double p : r.policy) total += p;
        EXPECT_NEAR(total, 1.0, 1e-12);
        const ad::Tensor heads = f.aff.afford(g, s).value();
        auto choice = root_sample(r, rng, false);
        for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(choice.action[j], heads.at(0, choice.index * 2 + j));
        EXPECT_GT(r.tree_nodes, 1u);
    }
}

TEST(Objective, SingleHeadDepthOneMatchesClosedForm) {
    auto f = make_fixture(1, true, 14);
    Graph g;
    Rng rng(14);
    Var s = random_states(g, 1, rng);
    Var obj = affordance_objective(g, s, f.model, f.aff, config_for(Mode::complete, 1), rng);
    auto t = f.model.transition(g, s, f.aff.afford(g, s));
    const double expect = t.reward.item() + std::pow(0.9, t.duration.item()) * f.model.value(g, t.next_state).item();
    EXPECT_NEAR(obj.item(), expect, 1e-12);
}

TEST(Objective, GradientMatchesFiniteDifferences) {
    struct Case {
        Mode mode;
        BackupMode backup;
        std::size_t k, depth;
        bool options;
    };
    const Case cases[] = {
        {Mode::complete, BackupMode::softmax, 1, 1, false},  {Mode::complete, BackupMode::softmax, 2, 2, false},
        {Mode::complete, BackupMode::softmax, 2, 2, true},   {Mode::complete, BackupMode::softmax, 3, 2, true},
        {Mode::complete, BackupMode::visit_count, 3, 2, false}, {Mode::complete, BackupMode::visit_count, 2, 2, true},
        {Mode::uct, BackupMode::visit_count, 3, 2, true},    {Mode::uct, BackupMode::softmax, 3, 2, false},
    };
    std::uint64_t seed = 20;
    for (const Case& c : cases) {
        auto f = make_fixture(c.k, c.options, seed++);
        ad::Rng data(seed);
        ad::Tensor roots(ad::Shape{3, 4});
        std::uniform_real_distribution<double> u(-1, 1);
        for (double& x : roots.data()) x = u(data);
        PlannerConfig pc = config_for(c.mode, c.depth, 8);
        pc.backup = c.backup;
        auto r = ad::check_gradients(f.aff.parameters(), [&](Graph& g) {
            Rng rng(seed);
            return affordance_objective(g, g.constant(roots), f.model, f.aff, pc, rng);
        });
        EXPECT_LT(r.max_rel_error, 1e-3) << mode_name(c.mode) << " K=" << c.k << " D=" << c.depth
                                         << " options=" << c.options << " worst " << r.worst_param;
    }
}

TEST(Objective, ModelParametersAreNotStepped) {
    auto f = make_fixture(2, false, 30);
    const auto model_hash = ad::parameter_hash(f.model.parameters());
    ad::Adam opt(f.aff.trainable_parameters(), {1e-3});
    Graph g;
    Rng rng(30);
    Var obj = affordance_objective(g, random_states(g, 4, rng), f.model, f.aff, config_for(Mode::complete, 2), rng);
    g.backward(ad::scale(obj, -1.0));
    opt.step();
    EXPECT_EQ(ad::parameter_hash(f.model.parameters()), model_hash);
}
