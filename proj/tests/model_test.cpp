#include "grasp/autodiff/gradcheck.hpp"
#include "grasp/model/training.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace grasp;
using namespace grasp::model;

namespace {

ModelConfig tiny_config(bool option_mode = false, std::size_t goal_dim = 0, bool passthrough = false) {
    ModelConfig c;
    c.observation_dim = 3;
    c.goal_dim = goal_dim;
    c.action_dim = 2;
    c.state_dim = 4;
    c.hidden = 8;
    c.option_mode = option_mode;
    c.goal_passthrough = passthrough;
    c.gamma = 0.9;
    return c;
}

std::vector<double> random_vector(std::size_t n, ad::Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    return v;
}

EpisodeSegment random_segment(const ModelConfig& c, std::size_t n, ad::Rng& rng) {
    EpisodeSegment s;
    for (std::size_t i = 0; i <= n; ++i) s.observations.push_back(random_vector(c.observation_dim, rng));
    s.goal = random_vector(c.goal_dim, rng);
    for (std::size_t i = 0; i < n; ++i) {
        s.actions.push_back(random_vector(c.action_dim, rng));
        s.rewards.push_back(random_vector(1, rng)[0]);
        s.durations.push_back(1);
        s.terminals.push_back(false);
    }
    return s;
}

// Forward-sum oracle: v_j = sum_k gamma^{D_jk} r_k + gamma^{D_jn} boot, with
// the bootstrap dropped when a terminal occurs at or after j.
std::vector<double> forward_oracle(const EpisodeSegment& s, double boot, double gamma) {
    const std::size_t n = s.length();
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        double total = 0.0;
        int elapsed = 0;
        bool ended = false;
        for (std::size_t k = j; k < n; ++k) {
            double w = 1.0;
            for (int e = 0; e < elapsed; ++e) w *= gamma;
            total += w * s.rewards[k];
            elapsed += s.durations[k];
            if (s.terminals[k]) {
                ended = true;
                break;
            }
        }
        if (!ended) {
            double w = 1.0;
            for (int e = 0; e < elapsed; ++e) w *= gamma;
            total += w * boot;
        }
        out[j] = total;
    }
    return out;
}

Var obs_row(Graph& g, const std::vector<double>& v) { return constant_rows(g, 1, v.size(), v); }

}  // namespace

TEST(Encode, SameInputSameState) {
    ad::Rng rng(1);
    ValueModel m(tiny_config(false, 2), rng);
    Graph g;
    Var x = obs_row(g, {0.1, 0.2, 0.3});
    Var goal = obs_row(g, {1.0, 0.0});
    const ad::Tensor a = m.encode(g, x, goal).value();
    Var b = m.encode(g, x, goal);
    EXPECT_EQ(a, b.value());
    EXPECT_EQ(b.cols(), 4u);
}

TEST(Encode, DimensionMismatchRejected) {
    ad::Rng rng(1);
    ValueModel m(tiny_config(false, 2), rng);
    Graph g;
    EXPECT_THROW(m.encode(g, obs_row(g, {0.1, 0.2}), obs_row(g, {1.0, 0.0})), ad::ShapeError);
    EXPECT_THROW(m.encode(g, obs_row(g, {0.1, 0.2, 0.3}), std::nullopt), ad::ShapeError);
    EXPECT_THROW(m.encode(g, obs_row(g, {0.1, 0.2, 0.3}), obs_row(g, {1.0})), ad::ShapeError);
}

TEST(Encode, GoalPassthroughAppendsGoal) {
    ad::Rng rng(2);
    ValueModel m(tiny_config(false, 2, true), rng);
    Graph g;
    Var s = m.encode(g, obs_row(g, {0.1, 0.2, 0.3}), obs_row(g, {0.0, 1.0}));
    ASSERT_EQ(s.cols(), 6u);
    EXPECT_EQ(s.value().at(0, 4), 0.0);
    EXPECT_EQ(s.value().at(0, 5), 1.0);
    EXPECT_EQ(m.affordance_input(s).cols(), 4u);
    auto t = m.transition(g, s, obs_row(g, {0.5, -0.5}));
    EXPECT_EQ(t.next_state.value().at(0, 4), 0.0);
    EXPECT_EQ(t.next_state.value().at(0, 5), 1.0);
}

TEST(Encode, GradientMatchesFiniteDifferences) {
    ad::Rng rng(3);
    ValueModel m(tiny_config(false, 2), rng);
    auto r = ad::check_gradients(m.encoder_parameters(), [&](Graph& g) {
        Var s = m.encode(g, obs_row(g, {0.3, -0.2, 0.7}), obs_row(g, {0.0, 1.0}));
        return ad::sum(ad::mul(s, obs_row(g, {1.0, -2.0, 0.5, 3.0})));
    });
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_param << "[" << r.worst_index << "]";
}

TEST(Unroll, EmptyReturnsOnlyFirstValue) {
    ad::Rng rng(4);
    ValueModel m(tiny_config(), rng);
    Graph g;
    Var s = m.encode(g, obs_row(g, {0.1, 0.2, 0.3}), std::nullopt);
    auto u = m.unroll(g, s, {});
    EXPECT_EQ(u.values.size(), 1u);
    EXPECT_TRUE(u.rewards.empty());
    const ad::Tensor v0 = u.values[0].value();
    EXPECT_EQ(v0, m.value(g, s).value());
}

TEST(Unroll, LengthTwoEqualsChainedLengthOne) {
    ad::Rng rng(5);
    ValueModel m(tiny_config(true), rng);
    Graph g;
    Var s = m.encode(g, obs_row(g, {0.1, 0.2, 0.3}), std::nullopt);
    std::vector<Var> acts{obs_row(g, {0.5, -0.1}), obs_row(g, {-0.7, 0.9})};
    auto both = m.unroll(g, s, acts);
    auto first = m.unroll(g, s, std::span<const Var>(acts.data(), 1));
    auto second = m.unroll(g, first.states.back(), std::span<const Var>(acts.data() + 1, 1));
    EXPECT_EQ(both.states[2].value(), second.states[1].value());
    EXPECT_EQ(both.rewards[1].value(), second.rewards[0].value());
    EXPECT_EQ(both.durations[1].value(), second.durations[0].value());
    EXPECT_EQ(both.values[2].value(), second.values[1].value());
}

TEST(Transition, DurationPositiveInOptionMode) {
    ad::Rng rng(6);
    ValueModel m(tiny_config(true), rng);
    Graph g;
    for (int i = 0; i < 100; ++i) {
        auto t = m.transition(g, obs_row(g, random_vector(4, rng, -20, 20)), obs_row(g, random_vector(2, rng)));
        EXPECT_GT(t.duration.item(), 0.0);
    }
}

TEST(Transition, PrimitiveModeDurationIsOne) {
    ad::Rng rng(6);
    ValueModel m(tiny_config(false), rng);
    Graph g;
    auto t = m.transition(g, obs_row(g, random_vector(4, rng)), obs_row(g, random_vector(2, rng)));
    EXPECT_EQ(t.duration.item(), 1.0);
    EXPECT_NEAR(m.discount(t.duration).item(), 0.9, 1e-15);
}

TEST(ValueTargets, TwoStepExample) {
    EpisodeSegment s;
    s.observations = {{0}, {0}, {0}};
    s.actions = {{0}, {0}};
    s.rewards = {1.0, 0.0};
    s.durations = {1, 1};
    s.terminals = {false, false};
    EXPECT_EQ(value_targets(s, 2.0, 0.5)[0], 1.5);
}

TEST(ValueTargets, TerminalDropsBootstrap) {
    EpisodeSegment s;
    s.observations = {{0}, {0}};
    s.actions = {{0}};
    s.rewards = {0.7};
    s.durations = {1};
    s.terminals = {true};
    EXPECT_EQ(value_targets(s, 100.0, 0.99)[0], 0.7);
}

TEST(ValueTargets, OptionDurationsDiscount) {
    EpisodeSegment s;
    s.observations = {{0}, {0}, {0}};
    s.actions = {{0}, {0}};
    s.rewards = {0.3, 0.5};
    s.durations = {3, 2};
    s.terminals = {false, false};
    const double boot = 2.0;
    const double expect = 0.3 + 0.970299 * 0.5 + std::pow(0.99, 5) * boot;
    EXPECT_NEAR(value_targets(s, boot, 0.99)[0], expect, 1e-12);
    EXPECT_NEAR(value_targets(s, boot, 0.99)[1], 0.5 + 0.9801 * boot, 1e-12);
}

TEST(ValueTargets, PrimitiveModeIsNStepReturn) {
    ad::Rng rng(7);
    std::uniform_int_distribution<int> len(1, 8), rew(-4, 4), gi(0, 2);
    const double gammas[] = {0.5, 0.25, 0.75};
    for (int trial = 0; trial < 1000; ++trial) {
        EpisodeSegment s;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) {
            s.actions.push_back({0.0});
            s.rewards.push_back(rew(rng));
            s.durations.push_back(1);
            s.terminals.push_back(i + 1 == n && trial % 3 == 0);
        }
        s.observations.assign(n + 1, {0.0});
        const double boot = rew(rng);
        const double gamma = gammas[gi(rng)];
        EXPECT_EQ(value_targets(s, boot, gamma), forward_oracle(s, boot, gamma)) << "trial " << trial;
    }
}

TEST(ValueTargets, OptionModeMatchesHandAccumulation) {
    ad::Rng rng(8);
    std::uniform_int_distribution<int> len(1, 6), dur(1, 12);
    std::uniform_real_distribution<double> rew(-1, 1);
    for (int trial = 0; trial < 1000; ++trial) {
        EpisodeSegment s;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) {
            s.actions.push_back({0.0});
            s.rewards.push_back(rew(rng));
            s.durations.push_back(dur(rng));
            s.terminals.push_back(i + 1 == n && trial % 4 == 0);
        }
        s.observations.assign(n + 1, {0.0});
        const double boot = rew(rng);
        auto got = value_targets(s, boot, 0.99);
        auto want = forward_oracle(s, boot, 0.99);
        for (int j = 0; j < n; ++j) EXPECT_NEAR(got[j], want[j], 1e-12);
    }
}

TEST(Segment, ValidationRejectsBadFields) {
    EpisodeSegment s;
    s.observations = {{0}, {0}, {0}};
    s.actions = {{0}, {0}};
    s.rewards = {1.0, 0.0};
    s.durations = {1, 0};
    s.terminals = {false, false};
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s.durations = {1, 1};
    s.terminals = {true, false};
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s.terminals = {false, true};
    EXPECT_NO_THROW(s.validate());
    s.rewards[0] = std::nan("");
    EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(ModelLoss, PerfectPredictionsGiveZero) {
    ad::Rng rng(9);
    ModelConfig c = tiny_config();
    ValueModel m(c, rng);
    EpisodeSegment s = random_segment(c, 3, rng);
    Graph g;
    Var s0 = m.encode(g, obs_row(g, s.observations[0]), std::nullopt);
    std::vector<Var> acts;
    for (auto& a : s.actions) acts.push_back(obs_row(g, a));
    auto u = m.unroll(g, s0, acts);
    std::vector<double> targets;
    for (std::size_t i = 0; i < 3; ++i) {
        s.rewards[i] = u.rewards[i].item();
        targets.push_back(u.values[i].item());
    }
    Graph g2;
    auto loss = model_loss(g2, m, {s}, {targets});
    EXPECT_NEAR(loss.total.item(), 0.0, 1e-24);
}

TEST(ModelLoss, RewardOffByTwoValueOffByOne) {
    ad::Rng rng(10);
    ModelConfig c = tiny_config();
    ValueModel m(c, rng);
    EpisodeSegment s = random_segment(c, 1, rng);
    Graph g;
    Var s0 = m.encode(g, obs_row(g, s.observations[0]), std::nullopt);
    auto t = m.transition(g, s0, obs_row(g, s.actions[0]));
    s.rewards[0] = t.reward.item() + 2.0;
    const double target = m.value(g, s0).item() - 1.0;
    Graph g2;
    auto loss = model_loss(g2, m, {s}, {{target}});
    EXPECT_NEAR(loss.total.item(), 5.0, 1e-12);
    EXPECT_NEAR(loss.reward.item(), 4.0, 1e-12);
    EXPECT_NEAR(loss.value.item(), 1.0, 1e-12);
}

TEST(ModelLoss, ShortTerminalSegmentsAreMasked) {
    ad::Rng rng(11);
    ModelConfig c = tiny_config(true);
    ValueModel m(c, rng);
    EpisodeSegment a = random_segment(c, 3, rng);
    EpisodeSegment b = random_segment(c, 1, rng);
    b.terminals.back() = true;
    std::vector<double> ta{0.1, 0.2, 0.3}, tb{0.4};
    Graph g;
    const double joint = model_loss(g, m, {a, b}, {ta, tb}).total.item();
    Graph ga, gb;
    const double sa = model_loss(ga, m, {a}, {ta}).total.item();
    const double sb = model_loss(gb, m, {b}, {tb}).total.item();
    EXPECT_NEAR(joint, 0.5 * (sa + sb), 1e-12);
}

TEST(ModelLoss, NoGradientIntoAffordancesOrTarget) {
    ad::Rng rng(12);
    ModelConfig c = tiny_config(true, 2);
    ValueModel m(c, rng);
    auto aff = affordance::make_variant(affordance::Variant::goal_state, 3, c.state_dim, c.action_dim, 8, 5, false);
    TargetModel target = make_target(m, aff);
    EpisodeSegment s = random_segment(c, 4, rng);
    auto targets = value_targets(s, target, c.gamma);
    for (auto* p : aff.parameters()) p->grad.fill(0.0);
    for (auto* p : target.parameters()) p->grad.fill(0.0);
    Graph g;
    auto loss = model_loss(g, m, {s}, {targets});
    g.backward(loss.total);
    for (auto* p : aff.parameters()) {
        for (double x : p->grad.data()) EXPECT_EQ(x, 0.0) << p->name;
    }
    for (auto* p : target.parameters()) {
        for (double x : p->grad.data()) EXPECT_EQ(x, 0.0) << p->name;
    }
    double norm = 0.0;
    for (auto* p : m.parameters()) {
        for (double x : p->grad.data()) norm += x * x;
    }
    EXPECT_GT(norm, 0.0);
}

TEST(ModelLoss, GradientMatchesFiniteDifferences) {
    ad::Rng rng(13);
    for (bool option_mode : {false, true}) {
        ModelConfig c = tiny_config(option_mode, 2);
        ValueModel m(c, rng);
        EpisodeSegment s1 = random_segment(c, 3, rng), s2 = random_segment(c, 2, rng);
        s2.terminals.back() = true;
        if (option_mode) s1.durations = {2, 5, 1};
        std::vector<std::vector<double>> targets{{0.5, -0.2, 0.1}, {0.3, 0.9}};
        auto r = ad::check_gradients(m.parameters(), [&](Graph& g) { return model_loss(g, m, {s1, s2}, targets).total; },
                                     {1e-5, 1e-7, 12});
        EXPECT_LT(r.max_rel_error, 1e-4) << "option=" << option_mode << " " << r.worst_param;
    }
}

TEST(Target, SyncMakesForwardPassesEqual) {
    ad::Rng rng(14);
    ModelConfig c = tiny_config(false, 2);
    ValueModel m(c, rng);
    auto aff = affordance::make_variant(affordance::Variant::goal_state, 2, c.state_dim, c.action_dim, 8, 5, false);
    TargetModel target = make_target(m, aff);
    for (auto* p : m.parameters()) {
        for (double& x : p->value.data()) x += 0.01;
    }
    EXPECT_NE(ad::parameter_hash(m.parameters()), ad::parameter_hash(target.model.parameters()));
    target.updates_since_sync = 17;
    sync_target(m, aff, target);
    EXPECT_EQ(target.updates_since_sync, 0);
    EXPECT_EQ(ad::parameter_hash(m.parameters()), ad::parameter_hash(target.model.parameters()));
    Graph g;
    auto x = obs_row(g, {0.1, 0.2, 0.3});
    auto goal = obs_row(g, {0.0, 1.0});
    const ad::Tensor online = m.encode(g, x, goal).value();
    EXPECT_EQ(online, target.model.encode(g, x, goal).value());
}

TEST(Target, MaxOneStepQMatchesPerHeadLoop) {
    ad::Rng rng(15);
    ModelConfig c = tiny_config(true);
    ValueModel m(c, rng);
    auto aff = affordance::make_variant(affordance::Variant::goal_state, 4, c.state_dim, c.action_dim, 8, 6, false);
    Graph g;
    Var states = constant_rows(g, 3, 4, random_vector(12, rng));
    Var q = max_one_step_q(g, m, aff, states);
    ASSERT_EQ(q.rows(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        Var s = ad::gather_rows(states, {i});
        Var heads = aff.afford(g, s);
        double best = -1e300;
        for (std::size_t k = 0; k < 4; ++k) {
            auto t = m.transition(g, s, ad::slice(heads, 2 * k, 2 * k + 2));
            const double qk = t.reward.item() + std::pow(0.9, t.duration.item()) * m.value(g, t.next_state).item();
            best = std::max(best, qk);
        }
        EXPECT_NEAR(q.value().at(i, 0), best, 1e-12);
    }
}
