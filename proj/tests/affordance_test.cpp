#include "grasp/affordance/affordance.hpp"
#include "grasp/autodiff/adam.hpp"
#include "grasp/autodiff/gradcheck.hpp"

#include <gtest/gtest.h>

using namespace grasp;
using namespace grasp::affordance;

namespace {

Var random_rows(Graph& g, std::size_t rows, std::size_t cols, ad::Rng& rng, double scale) {
    std::uniform_real_distribution<double> d(-scale, scale);
    ad::Tensor t(ad::Shape{rows, cols});
    for (double& x : t.data()) x = d(rng);
    return g.constant(t);
}

}  // namespace

TEST(Affordance, OutputsAreBounded) {
    ad::Rng rng(1);
    for (Variant v : {Variant::goal_state, Variant::state, Variant::unconditioned}) {
        auto m = make_variant(v, 4, 6, 3, 16, 2, false);
        Graph g;
        Var out = m.afford(g, random_rows(g, 200, 6, rng, 50.0));
        ASSERT_EQ(out.rows(), 200u);
        ASSERT_EQ(out.cols(), 12u);
        for (double x : out.value().data()) {
            EXPECT_LE(std::abs(x), 1.0);
        }
    }
}

TEST(Affordance, UnconditionedIgnoresState) {
    ad::Rng rng(2);
    auto m = make_variant(Variant::unconditioned, 8, 6, 2, 16, 3, false);
    Graph g;
    Var out = m.afford(g, random_rows(g, 5, 6, rng, 1.0));
    for (std::size_t r = 1; r < 5; ++r) {
        for (std::size_t c = 0; c < 16; ++c) EXPECT_EQ(out.value().at(r, c), out.value().at(0, c));
    }
}

TEST(Affordance, SameSeedSameHeads) {
    auto a = make_variant(Variant::goal_state, 4, 6, 3, 16, 42, false);
    auto b = make_variant(Variant::goal_state, 4, 6, 3, 16, 42, false);
    auto c = make_variant(Variant::goal_state, 4, 6, 3, 16, 43, false);
    EXPECT_EQ(ad::parameter_hash(a.parameters()), ad::parameter_hash(b.parameters()));
    EXPECT_NE(ad::parameter_hash(a.parameters()), ad::parameter_hash(c.parameters()));
}

TEST(Affordance, ZeroHeadsRejected) {
    EXPECT_THROW(make_variant(Variant::goal_state, 0, 6, 3, 16, 1, false), std::invalid_argument);
    EXPECT_THROW(make_variant(Variant::unconditioned, 0, 6, 3, 16, 1, false), std::invalid_argument);
}

TEST(Affordance, InputWidthChecked) {
    ad::Rng rng(3);
    auto m = make_variant(Variant::state, 2, 6, 3, 16, 1, false);
    Graph g;
    EXPECT_THROW(m.afford(g, random_rows(g, 1, 5, rng, 1.0)), ad::ShapeError);
}

TEST(Affordance, SingleHeadIsOneVector) {
    ad::Rng rng(4);
    auto m = make_variant(Variant::goal_state, 1, 6, 3, 16, 1, false);
    Graph g;
    EXPECT_EQ(m.afford(g, random_rows(g, 2, 6, rng, 1.0)).cols(), 3u);
}

TEST(Affordance, FrozenModuleHasNothingToTrain) {
    auto m = make_variant(Variant::goal_state, 4, 6, 3, 16, 1, true);
    EXPECT_TRUE(m.trainable_parameters().empty());
    EXPECT_FALSE(m.parameters().empty());
    const auto before = ad::parameter_hash(m.parameters());
    ad::Adam opt(m.trainable_parameters(), {});
    for (auto* p : m.parameters()) p->grad.fill(1.0);
    opt.step();
    EXPECT_EQ(ad::parameter_hash(m.parameters()), before);
}

TEST(Affordance, HeadGradientsMatchFiniteDifferences) {
    ad::Rng rng(5);
    for (Variant v : {Variant::goal_state, Variant::unconditioned}) {
        auto m = make_variant(v, 3, 4, 2, 8, 7, false);
        ad::Tensor x(ad::Shape{2, 4});
        std::uniform_real_distribution<double> d(-1, 1);
        for (double& e : x.data()) e = d(rng);
        ad::Tensor w(ad::Shape{2, 6});
        for (double& e : w.data()) e = d(rng);
        auto r = ad::check_gradients(m.parameters(), [&](Graph& g) {
            return ad::sum(ad::mul(m.afford(g, g.constant(x)), g.constant(w)));
        });
        EXPECT_LT(r.max_rel_error, 1e-4) << variant_name(v) << " " << r.worst_param;
    }
}

TEST(Affordance, VariantNamesRoundTrip) {
    for (Variant v : {Variant::goal_state, Variant::state, Variant::unconditioned}) {
        EXPECT_EQ(parse_variant(variant_name(v)), v);
    }
    EXPECT_THROW(parse_variant("XA"), std::invalid_argument);
}
