#include "grasp/config/config.hpp"
#include "grasp/report/analysis.hpp"
#include "grasp/report/gradcheck_suite.hpp"
#include "grasp/report/metrics.hpp"
#include "grasp/report/svg.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

using namespace grasp;
using namespace grasp::report;

namespace {

// Throws when `svg` is not well-formed XML; returns the root element name.
std::string parse_xml(const std::string& svg) {
    std::istringstream in(svg);
    boost::property_tree::ptree tree;
    boost::property_tree::read_xml(in, tree);
    return tree.begin()->first;
}

std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
    return n;
}

train::TrainConfig tiny(std::size_t heads, const std::string& env = "collect") {
    train::TrainConfig c;
    c.env = env;
    c.heads = heads;
    c.state_dim = 8;
    c.hidden = 16;
    c.afford_hidden = 16;
    c.warmup = 10;
    c.batch = 4;
    return c;
}

}  // namespace

TEST(Config, DefaultsResolveToDocumentedValues) {
    const auto ex = config::resolve({});
    EXPECT_EQ(ex.train.env, "collect");
    EXPECT_EQ(ex.train.heads, 4u);
    EXPECT_DOUBLE_EQ(ex.train.gamma, 0.99);
    EXPECT_DOUBLE_EQ(ex.train.afford_lr, 1e-3);
    EXPECT_DOUBLE_EQ(ex.train.model_lr, 1e-4);
    EXPECT_EQ(ex.train.sync_period, 1000u);
    EXPECT_EQ(ex.train.capacity, 200000u);
    EXPECT_EQ(ex.train.plan.depth, 2u);
    EXPECT_EQ(ex.seeds.size(), 5u);
}

TEST(Config, ParsesCommentsAndRejectsUnknownKeys) {
    const auto v = config::parse_text("# comment\nplan.tau = 0.5  # trailing\n\nafford.K=3\n", "t.cfg");
    EXPECT_EQ(v.at("plan.tau"), "0.5");
    EXPECT_EQ(v.at("afford.K"), "3");
    try {
        config::parse_text("plan.tau = 1\nplan.tua = 2\n", "t.cfg");
        FAIL();
    } catch (const config::ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("t.cfg:2"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("plan.tua"), std::string::npos);
    }
    EXPECT_THROW(config::parse_text("plan.tau = 1\nplan.tau = 2\n"), config::ConfigError);
    EXPECT_THROW(config::parse_text("just words\n"), config::ConfigError);
}

TEST(Config, FieldLevelDiagnostics) {
    auto message = [](const config::Values& v) {
        try {
            config::resolve(v);
        } catch (const config::ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message({{"plan.tau", "abc"}}).find("plan.tau"), std::string::npos);
    EXPECT_NE(message({{"afford.K", "-2"}}).find("afford.K"), std::string::npos);
    EXPECT_NE(message({{"afford.variant", "XY"}}).find("afford.variant"), std::string::npos);
    EXPECT_NE(message({{"plan.K", "3"}}).find("plan.K"), std::string::npos);
    EXPECT_NE(message({{"env.id", "ant"}}).find("env.id"), std::string::npos);
    EXPECT_NE(message({{"run.seeds", ""}}).find("run.seeds"), std::string::npos);
    EXPECT_NE(message({{"train.explore_random", "1.5"}}).find("train.explore_random"), std::string::npos);
    EXPECT_NE(message({{"train.cpu_budget", "-1"}}).find("train.cpu_budget"), std::string::npos);
    // complete tree K^D over the node budget
    EXPECT_NE(message({{"afford.K", "8"}, {"plan.depth", "4"}}).find("budget"), std::string::npos);
    EXPECT_EQ(message({{"plan.K", "4"}}), "");
}

TEST(Config, EnvironmentOverridesUseUpperCaseUnderscoreNames) {
    EXPECT_EQ(config::env_name("plan.tau"), "GRASP_PLAN_TAU");
    EXPECT_EQ(config::env_name("model.unroll_len"), "GRASP_MODEL_UNROLL_LEN");
    config::Values v{{"plan.tau", "1"}};
    const auto changed = config::apply_env_overrides(v, [](const std::string& name) -> std::optional<std::string> {
        if (name == "GRASP_PLAN_TAU") return "0.25";
        if (name == "GRASP_AFFORD_K") return "2";
        return std::nullopt;
    });
    EXPECT_EQ(v.at("plan.tau"), "0.25");
    EXPECT_EQ(v.at("afford.K"), "2");
    EXPECT_EQ(changed.size(), 2u);
    EXPECT_NE(config::render_table(v, changed).find("GRASP_PLAN_TAU"), std::string::npos);
}

TEST(Config, ResolvedTextRoundTrips) {
    config::Values v{{"plan.mode", "uct"}, {"plan.uct_trajectories", "20"}, {"afford.frozen", "true"}};
    const auto again = config::parse_text(config::to_text(v));
    const auto a = config::resolve(v), b = config::resolve(again);
    EXPECT_EQ(a.name, "RND UCT-20");
    EXPECT_EQ(b.name, a.name);
    EXPECT_EQ(b.train.plan.trajectories, 20u);
}

TEST(Aggregate, StderrMatchesTextbookFormula) {
    // seeds: 1, 2, 4 -> mean 7/3, sample var ((4/3)^2 + (1/3)^2 + (5/3)^2) / 2 = 7/3
    const auto a = parse_metrics("step,x\n10,1\n20,5\n");
    const auto b = parse_metrics("step,x\n10,2\n20,nan\n");
    const auto c = parse_metrics("step,x\n10,4\n20,7\n");
    const auto agg = aggregate({a, b, c});
    ASSERT_EQ(agg.columns, (std::vector<std::string>{"step", "x_mean", "x_stderr", "x_n"}));
    EXPECT_NEAR(agg.rows[0][1], 7.0 / 3.0, 1e-15);
    EXPECT_NEAR(agg.rows[0][2], std::sqrt(7.0 / 3.0) / std::sqrt(3.0), 1e-15);
    EXPECT_EQ(agg.rows[0][3], 3.0);
    // NaN cells are skipped: two seeds left at step 20
    EXPECT_NEAR(agg.rows[1][1], 6.0, 1e-15);
    EXPECT_NEAR(agg.rows[1][2], std::sqrt(2.0) / std::sqrt(2.0), 1e-15);
    EXPECT_EQ(agg.rows[1][3], 2.0);
}

TEST(Aggregate, SingleSeedHasZeroBand) {
    const auto agg = aggregate({parse_metrics("step,x\n1,3\n2,4\n")});
    EXPECT_EQ(agg.rows[0][2], 0.0);
    EXPECT_EQ(agg.rows[1][2], 0.0);
}

TEST(Aggregate, SchemaMismatchIsRejected) {
    EXPECT_THROW(aggregate({parse_metrics("step,x\n1,1\n"), parse_metrics("step,y\n1,1\n")}), SchemaError);
    EXPECT_THROW(parse_metrics("x,step\n1,1\n"), SchemaError);
    EXPECT_THROW(parse_metrics("step,x\n1,1,2\n"), SchemaError);
}

TEST(Svg, CurvePlotIsWellFormedWithOneLinePerAgent) {
    Curve a{"GA-4 <&>", {0, 1, 2}, {0.1, 0.5, 0.9}, {0.05, 0.05, 0.0}};
    Curve b{"GA-1", {0, 1, 2}, {0.0, std::nan(""), 0.3}, {0.0, 0.0, 0.0}};
    for (const auto& metric : {"episode_return", "eval_success"}) {
        const std::string svg = curve_plot(metric, "steps", {a, b});
        EXPECT_EQ(parse_xml(svg), "svg");
        EXPECT_EQ(count(svg, "class=\"mean\""), 2u);
        EXPECT_EQ(count(svg, "class=\"band\""), 2u);
    }
}

TEST(Svg, HistogramAndTrajectoryGridAreWellFormed) {
    EXPECT_EQ(parse_xml(histogram("delta", {-1.0, 0.0, 0.5, 2.0}, 10, head_color(1))), "svg");
    EXPECT_EQ(parse_xml(histogram("empty", {}, 10, head_color(0))), "svg");
    Panel p;
    p.title = "start 0";
    p.paths.push_back({{{0.1, 0.1}, {0.2, 0.3}}, 0});
    p.markers.push_back({{0.5, 0.5}, "A"});
    EXPECT_EQ(parse_xml(trajectory_grid({p, p}, 3, 0.0, 1.0, 2)), "svg");
}

TEST(Svg, HeadColorsAreStable) {
    EXPECT_EQ(head_color(0), "#1f77b4");
    EXPECT_EQ(head_color(1), "#d62728");
    EXPECT_EQ(head_color(8), head_color(0));
}

TEST(Visualize, ThreeStatesTimesThreeHeadsGiveNineTrajectories) {
    train::Trainer t(tiny(3), 1);
    const auto r = rollout_heads(t, parse_grid("3x1"), Layout::fixed_objects, 4);
    ASSERT_EQ(r.starts.size(), 3u);
    std::set<std::pair<std::size_t, std::size_t>> trajectories;
    for (const auto& rec : r.records) trajectories.insert({rec.episode, rec.head});
    EXPECT_EQ(trajectories.size(), 9u);
    for (const auto& rec : r.records) EXPECT_EQ(rec.state.size(), 2u);
    EXPECT_EQ(trajectory_header(false), "episode,step,head_index,x,y,reward,event");
}

TEST(Visualize, PointMassDumpCarriesVelocities) {
    train::Trainer t(tiny(2, "point_mass"), 1);
    const auto r = rollout_heads(t, parse_grid("2x2"), Layout::fixed_objects, 4);
    EXPECT_EQ(r.starts.size(), 4u);
    for (const auto& rec : r.records) EXPECT_EQ(rec.state.size(), 4u);
    EXPECT_EQ(trajectory_header(true), "episode,step,head_index,x,y,u,v,reward,event");
}

TEST(Visualize, VariedLayoutChangesObjects) {
    train::Trainer t(tiny(2), 1);
    const auto r = rollout_heads(t, parse_grid("2x1"), Layout::varied_objects, 4);
    EXPECT_NE(r.starts[0].landmarks, r.starts[1].landmarks);
    const auto f = rollout_heads(t, parse_grid("2x1"), Layout::fixed_objects, 4);
    EXPECT_EQ(f.starts[0].landmarks, f.starts[1].landmarks);
}

TEST(Visualize, RejectsPrimitiveEnvironmentAndBadGrid) {
    train::Trainer t(tiny(2, "reach_goal"), 1);
    EXPECT_THROW(rollout_heads(t, parse_grid("3x3"), Layout::fixed_objects, 0), std::invalid_argument);
    EXPECT_THROW(parse_grid("3by3"), std::invalid_argument);
    EXPECT_THROW(parse_grid("0x3"), std::invalid_argument);
}

TEST(Switch, SelfComparisonGivesZeroDeltas) {
    train::Trainer t(tiny(2), 3);
    Policy head0 = [&](const std::vector<double>& o, const std::vector<double>& g, train::Rng&) {
        return t.head_action(o, g, 0);
    };
    const auto returns = paired_returns([&] { return t.make_env(); }, {head0, head0}, 20, 9);
    const auto r = summarize_switch(returns[0], {returns[1]});
    for (double d : r.deltas[0]) EXPECT_EQ(d, 0.0);
    EXPECT_EQ(r.summary[0].skew, 0.0);
    EXPECT_EQ(r.summary[0].frac_positive, 0.0);
}

TEST(Switch, ConfigurationsAreSharedAcrossPolicies) {
    // Each policy records the first observation it is shown; configuration j
    // must look identical to every policy.
    train::Trainer t(tiny(2), 3);
    std::vector<std::vector<std::vector<double>>> seen(3);
    std::vector<Policy> policies;
    for (std::size_t p = 0; p < 3; ++p) {
        policies.push_back([&, p](const std::vector<double>& o, const std::vector<double>& g, train::Rng& rng) {
            if (seen[p].empty() || seen[p].back() != o) seen[p].push_back(o);
            (void)g;
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            return std::vector<double>{u(rng), u(rng)};
        });
    }
    const auto returns = paired_returns([&] { return t.make_env(); }, policies, 15, 21);
    // identical policy randomness per configuration makes the rollouts identical too
    EXPECT_EQ(returns[0], returns[1]);
    EXPECT_EQ(returns[1], returns[2]);
    EXPECT_EQ(seen[0], seen[1]);
    EXPECT_EQ(seen[1], seen[2]);
}

TEST(Switch, DuplicatedHeadsGiveIdenticalDistributions) {
    train::Trainer t(tiny(3), 5);
    // copy head 0's weights into every other head
    auto params = t.affordances().parameters();
    auto find = [&](const std::string& name) {
        for (auto* p : params) {
            if (p->name == name) return p;
        }
        throw std::runtime_error("missing " + name);
    };
    for (std::size_t k = 1; k < 3; ++k) {
        for (const std::string suffix : {".w", ".b"}) {
            find("affordance.head" + std::to_string(k) + suffix)->value = find("affordance.head0" + suffix)->value;
        }
    }
    const auto r = switch_analysis(t, 12, 3);
    ASSERT_EQ(r.deltas.size(), 3u);
    EXPECT_EQ(r.deltas[0], r.deltas[1]);
    EXPECT_EQ(r.deltas[1], r.deltas[2]);
}

TEST(Switch, SingleHeadIsRejected) {
    train::Trainer t(tiny(1), 1);
    EXPECT_THROW(switch_analysis(t, 5, 0), std::invalid_argument);
}

TEST(Switch, SkewnessOfKnownSample) {
    // {0, 0, 0, 3}: mean 0.75, m2 = 1.6875, m3 = 2.53125 -> 2 / sqrt(3)
    EXPECT_NEAR(skewness({0, 0, 0, 3}), 2.0 / std::sqrt(3.0), 1e-14);
    EXPECT_EQ(skewness({2, 2, 2}), 0.0);
}

TEST(GradcheckSuite, EveryEntryPasses) {
    const auto entries = run_gradcheck_suite(0);
    std::set<std::string> groups;
    for (const auto& e : entries) {
        groups.insert(e.group);
        EXPECT_TRUE(e.pass()) << e.group << "/" << e.name << " rel " << e.max_rel_error << " at " << e.worst;
    }
    EXPECT_EQ(groups, (std::set<std::string>{"op", "network", "planner"}));
}
