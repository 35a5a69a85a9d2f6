#include "grasp/report/gradcheck_suite.hpp"

#include "grasp/autodiff/gradcheck.hpp"
#include "grasp/model/training.hpp"
#include "grasp/planner/planner.hpp"

#include <functional>

namespace grasp::report {

namespace {

using ad::Graph;
using ad::Parameter;
using ad::Rng;
using ad::Shape;
using ad::Tensor;
using ad::Var;

constexpr double op_tol = 1e-4;
constexpr double planner_tol = 1e-3;
constexpr int op_trials = 5;

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> d(lo, hi);
    for (double& x : t.data()) x = d(rng);
    return t;
}

// Weighted sum so every output element gets its own upstream gradient.
Var weighted(Graph& g, Var y, const Tensor& w) { return ad::sum(ad::mul(y, g.constant(w))); }

SuiteEntry entry(std::string group, std::string name, double tol) { return {std::move(group), std::move(name), 0.0, tol, 0, {}}; }

void absorb(SuiteEntry& e, const ad::GradCheckResult& r) {
    if (r.max_rel_error >= e.max_rel_error) {
        e.worst = r.worst_param + "[" + std::to_string(r.worst_index) + "] " + std::to_string(r.analytic_at_worst) +
                  " vs " + std::to_string(r.numeric_at_worst);
    }
    e.max_rel_error = std::max(e.max_rel_error, r.max_rel_error);
    e.entries += r.entries_checked;
}

SuiteEntry check_op(const std::string& name, const std::function<Var(Var, Rng&)>& op, Rng& rng, double lo = -1.5,
                    double hi = 1.5) {
    SuiteEntry e = entry("op", name, op_tol);
    for (int t = 0; t < op_trials; ++t) {
        Parameter x("x", random_tensor({3, 4}, rng, lo, hi));
        // operands drawn once per trial so that every loss evaluation sees the same ones
        Rng operand_rng(rng());
        Graph probe;
        Rng probe_rng = operand_rng;
        Tensor w = random_tensor(op(probe.param(x), probe_rng).value().shape(), rng);
        absorb(e, ad::check_gradients({&x}, [&](Graph& g) {
                   Rng r = operand_rng;
                   return weighted(g, op(g.param(x), r), w);
               }));
    }
    return e;
}

model::ModelConfig small_model(bool options, std::size_t goal_dim, bool passthrough) {
    model::ModelConfig c;
    c.observation_dim = 3;
    c.goal_dim = goal_dim;
    c.action_dim = 2;
    c.state_dim = 4;
    c.hidden = 6;
    c.option_mode = options;
    c.goal_passthrough = passthrough;
    c.gamma = 0.9;
    return c;
}

}  // namespace

std::vector<SuiteEntry> run_gradcheck_suite(std::uint64_t seed) {
    std::vector<SuiteEntry> out;
    Rng rng(seed * 7919 + 17);

    auto constant = [](Var x, const Tensor& t) { return x.graph().constant(t); };
    const std::vector<std::pair<std::string, std::function<Var(Var, Rng&)>>> unary = {
        {"add", [&](Var x, Rng& r) { return ad::add(x, constant(x, random_tensor({3, 4}, r))); }},
        {"add_broadcast_row", [&](Var x, Rng& r) { return ad::add(x, constant(x, random_tensor({4}, r))); }},
        {"add_broadcast_col", [&](Var x, Rng& r) { return ad::add(x, constant(x, random_tensor({3, 1}, r))); }},
        {"sub", [&](Var x, Rng& r) { return ad::sub(constant(x, random_tensor({3, 4}, r)), x); }},
        {"mul", [&](Var x, Rng& r) { return ad::mul(x, constant(x, random_tensor({3, 4}, r))); }},
        {"mul_self", [](Var x, Rng&) { return ad::mul(x, x); }},
        {"matmul_left", [&](Var x, Rng& r) { return ad::matmul(x, constant(x, random_tensor({4, 5}, r))); }},
        {"matmul_right", [&](Var x, Rng& r) { return ad::matmul(constant(x, random_tensor({2, 3}, r)), x); }},
        {"scale", [](Var x, Rng&) { return ad::scale(x, -1.7); }},
        {"add_scalar", [](Var x, Rng&) { return ad::add_scalar(x, 0.4); }},
        {"sum", [](Var x, Rng&) { return ad::sum(x); }},
        {"mean", [](Var x, Rng&) { return ad::mean(x); }},
        {"row_sum", [](Var x, Rng&) { return ad::row_sum(x); }},
        {"square", [](Var x, Rng&) { return ad::square(x); }},
        {"elu", [](Var x, Rng&) { return ad::elu(x); }},
        {"tanh", [](Var x, Rng&) { return ad::tanh(x); }},
        {"softplus", [](Var x, Rng&) { return ad::softplus(x); }},
        {"softmax", [](Var x, Rng&) { return ad::softmax(x, 1.0); }},
        {"softmax_tau", [](Var x, Rng&) { return ad::softmax(x, 0.35); }},
        {"exp", [](Var x, Rng&) { return ad::exp(x); }},
        {"concat", [](Var x, Rng&) { return ad::concat(x, ad::square(x)); }},
        {"slice", [](Var x, Rng&) { return ad::slice(x, 1, 3); }},
        {"gather_rows", [](Var x, Rng&) { return ad::gather_rows(x, {2, 0, 2, 1}); }},
        {"reshape", [](Var x, Rng&) { return ad::reshape(x, {2, 6}); }},
    };
    for (const auto& [name, op] : unary) out.push_back(check_op(name, op, rng));
    out.push_back(check_op("log", [](Var x, Rng&) { return ad::log(x); }, rng, 0.2, 3.0));

    // networks
    {
        SuiteEntry e = entry("network", "mlp_elu_tanh", op_tol);
        for (int t = 0; t < op_trials; ++t) {
            ad::Mlp mlp("mlp", {3, 6, 6, 2}, ad::Activation::elu, ad::Activation::tanh, rng);
            Tensor x = random_tensor({4, 3}, rng);
            Tensor w = random_tensor({4, 2}, rng);
            absorb(e, ad::check_gradients(mlp.parameters(),
                                          [&](Graph& g) { return weighted(g, mlp.apply(g, g.constant(x)), w); }));
        }
        out.push_back(e);
    }
    for (bool options : {false, true}) {
        const std::string tag = options ? "_options" : "_primitive";
        model::ValueModel m(small_model(options, 2, false), rng);
        Tensor obs = random_tensor({3, 3}, rng);
        Tensor goal = random_tensor({3, 2}, rng);
        Tensor act = random_tensor({3, 2}, rng, -0.9, 0.9);
        const std::size_t w = m.state_width();
        Tensor states = random_tensor({3, w}, rng);
        Tensor ws = random_tensor({3, w}, rng);
        Tensor w1 = random_tensor({3, 1}, rng);

        SuiteEntry enc = entry("network", "encoder" + tag, op_tol);
        absorb(enc, ad::check_gradients(m.encoder_parameters(), [&](Graph& g) {
                   return weighted(g, m.encode(g, g.constant(obs), g.constant(goal)), ws);
               }));
        out.push_back(enc);

        SuiteEntry tr = entry("network", "transition" + tag, op_tol);
        absorb(tr, ad::check_gradients(m.parameters(), [&](Graph& g) {
                   auto o = m.transition(g, g.constant(states), g.constant(act));
                   return ad::add(ad::add(weighted(g, o.next_state, ws), weighted(g, o.reward, w1)),
                                  weighted(g, o.duration, w1));
               }));
        out.push_back(tr);

        SuiteEntry val = entry("network", "value" + tag, op_tol);
        absorb(val, ad::check_gradients(m.value_parameters(), [&](Graph& g) {
                   return weighted(g, m.value(g, g.constant(states)), w1);
               }));
        out.push_back(val);

        model::EpisodeSegment s1, s2;
        s1.observations = {{0.1, 0.2, 0.3}, {0.2, 0.1, -0.4}, {-0.3, 0.5, 0.0}, {0.6, -0.1, 0.2}};
        s1.goal = {1.0, 0.0};
        s1.actions = {{0.1, -0.2}, {0.5, 0.4}, {-0.6, 0.3}};
        s1.rewards = {0.5, 0.0, 1.0};
        s1.durations = options ? std::vector<int>{2, 5, 1} : std::vector<int>{1, 1, 1};
        s1.terminals = {false, false, false};
        s2.observations = {{-0.5, 0.2, 0.1}, {0.0, 0.3, 0.3}, {0.4, 0.4, -0.2}};
        s2.goal = {0.0, 1.0};
        s2.actions = {{0.7, -0.7}, {-0.1, 0.2}};
        s2.rewards = {0.0, 0.25};
        s2.durations = options ? std::vector<int>{3, 1} : std::vector<int>{1, 1};
        s2.terminals = {false, true};
        const std::vector<std::vector<double>> targets{{0.5, -0.2, 0.1}, {0.3, 0.9}};
        SuiteEntry loss = entry("network", "model_loss" + tag, op_tol);
        absorb(loss, ad::check_gradients(
                         m.parameters(), [&](Graph& g) { return model::model_loss(g, m, {s1, s2}, targets).total; },
                         {1e-5, 1e-7, 12}));
        out.push_back(loss);
    }
    for (auto v : {affordance::Variant::goal_state, affordance::Variant::state, affordance::Variant::unconditioned}) {
        auto aff = affordance::make_variant(v, 3, 4, 2, 6, rng(), false);
        Tensor in = random_tensor({3, 4}, rng);
        Tensor w = random_tensor({3, 6}, rng);
        SuiteEntry e = entry("network", "affordance_" + affordance::variant_name(v), op_tol);
        absorb(e, ad::check_gradients(aff.parameters(),
                                      [&](Graph& g) { return weighted(g, aff.afford(g, g.constant(in)), w); }));
        out.push_back(e);
    }

    // planner objective, softmax backup
    for (bool options : {false, true}) {
        for (std::size_t k = 1; k <= 3; ++k) {
            for (std::size_t depth = 1; depth <= 2; ++depth) {
                const std::uint64_t case_seed = rng();
                Rng init(case_seed);
                model::ValueModel m(small_model(options, 0, false), init);
                auto aff = affordance::make_variant(affordance::Variant::goal_state, k, 4, 2, 6, case_seed + 1, false);
                Tensor roots = random_tensor({3, 4}, init);
                planner::PlannerConfig pc;
                pc.mode = planner::Mode::complete;
                pc.depth = depth;
                pc.gamma = 0.9;
                pc.backup = planner::BackupMode::softmax;
                SuiteEntry e = entry("planner",
                                     "objective_K" + std::to_string(k) + "_D" + std::to_string(depth) +
                                         (options ? "_options" : "_primitive"),
                                     planner_tol);
                absorb(e, ad::check_gradients(aff.parameters(), [&](Graph& g) {
                           Rng r(case_seed);
                           return planner::affordance_objective(g, g.constant(roots), m, aff, pc, r);
                       }));
                // the same objective differentiated with respect to the root states
                Parameter root("roots", roots);
                absorb(e, ad::check_gradients({&root}, [&](Graph& g) {
                           Rng r(case_seed);
                           return planner::affordance_objective(g, g.param(root), m, aff, pc, r);
                       }));
                out.push_back(e);
            }
        }
    }
    return out;
}

}  // namespace grasp::report
