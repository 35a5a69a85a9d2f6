#include "grasp/report/analysis.hpp"

#include "grasp/env/collect.hpp"
#include "grasp/env/point_mass.hpp"
#include "grasp/report/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace grasp::report {

std::string trajectory_header(bool velocities) {
    return velocities ? "episode,step,head_index,x,y,u,v,reward,event" : "episode,step,head_index,x,y,reward,event";
}

std::string format_record(const TrajectoryRecord& r) {
    std::string s = std::to_string(r.episode) + "," + std::to_string(r.step) + "," + std::to_string(r.head);
    for (double x : r.state) s += "," + format_number(x);
    return s + "," + format_number(r.reward) + "," + r.event;
}

Layout parse_layout(const std::string& name) {
    if (name == "fixed") return Layout::fixed_objects;
    if (name == "varied") return Layout::varied_objects;
    throw std::invalid_argument("unknown layout '" + name + "' (expected fixed or varied)");
}

GridSpec parse_grid(const std::string& spec) {
    const auto x = spec.find('x');
    GridSpec g;
    try {
        if (x == std::string::npos) throw std::invalid_argument("no x");
        std::size_t a = 0, b = 0;
        g.columns = std::stoul(spec.substr(0, x), &a);
        g.rows = std::stoul(spec.substr(x + 1), &b);
        if (a != x || b != spec.size() - x - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw std::invalid_argument("grid spec '" + spec + "' is not of the form COLSxROWS");
    }
    if (g.columns == 0 || g.rows == 0) throw std::invalid_argument("grid spec needs at least one start");
    return g;
}

namespace {

bool assign_injective(const std::vector<std::array<double, 2>>& endpoints,
                      const std::vector<std::array<double, 2>>& landmarks, double delta) {
    std::set<std::size_t> used;
    for (const auto& e : endpoints) {
        std::ptrdiff_t best = -1;
        double best_d = delta;
        for (std::size_t j = 0; j < landmarks.size(); ++j) {
            const double d = std::hypot(e[0] - landmarks[j][0], e[1] - landmarks[j][1]);
            if (d <= best_d) {
                best_d = d;
                best = static_cast<std::ptrdiff_t>(j);
            }
        }
        if (best < 0 || !used.insert(static_cast<std::size_t>(best)).second) return false;
    }
    return true;
}

double lattice(std::size_t i, std::size_t n, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
}

}  // namespace

AffordanceRollouts rollout_heads(train::Trainer& trainer, const GridSpec& grid, Layout layout, std::uint64_t seed,
                                 double delta) {
    const auto& cfg = trainer.config();
    if (cfg.env != "collect" && cfg.env != "point_mass") {
        throw std::invalid_argument("visualize-affordances needs an option environment (collect or point_mass), got " +
                                    cfg.env);
    }
    AffordanceRollouts out;
    out.env = cfg.env;
    out.heads = cfg.heads;
    const bool collect = cfg.env == "collect";
    train::Rng rng(train::derive_seed(seed, 0x7a11));
    auto base = trainer.make_env();
    base->reset(rng);
    std::size_t injective = 0;
    const std::size_t total = grid.columns * grid.rows;
    for (std::size_t idx = 0; idx < total; ++idx) {
        const std::size_t gx = idx % grid.columns, gy = idx / grid.columns;
        StartRollout sr;
        auto e = base->clone();
        if (layout == Layout::varied_objects) e->reset(rng);
        // start state and landmarks for this panel
        std::array<std::array<double, 2>, 3> objects{};
        std::size_t goal_index = 0;
        std::array<double, 4> pm_state{};
        if (collect) {
            auto* c = dynamic_cast<env::CollectWorld*>(e.get());
            const auto& cc = c->config();
            sr.start = {lattice(gx, grid.columns, cc.spawn_lo, cc.spawn_hi),
                        lattice(gy, grid.rows, cc.spawn_lo, cc.spawn_hi)};
            objects = c->objects();
            goal_index = c->goal_index();
        } else {
            auto* p = dynamic_cast<env::PointMassWorld*>(e.get());
            const double b = p->config().position_bound;
            sr.start = {lattice(gx, grid.columns, -b, b), lattice(gy, grid.rows, -b, b)};
            pm_state = {sr.start[0], sr.start[1], 0.0, 0.0};
            objects = p->config().waypoints;
            goal_index = p->goal_index();
        }
        for (const auto& o : objects) sr.landmarks.push_back(o);
        for (std::size_t k = 0; k < cfg.heads; ++k) {
            auto run = base->clone();
            std::vector<double> obs, goal;
            if (collect) {
                auto* c = dynamic_cast<env::CollectWorld*>(run.get());
                c->set_state(sr.start, objects, goal_index);
                obs = c->observation();
                goal = c->goal();
            } else {
                auto* p = dynamic_cast<env::PointMassWorld*>(run.get());
                p->set_state(pm_state, goal_index);
                obs = p->observation();
                goal = p->goal();
            }
            const std::vector<double> action = trainer.head_action(obs, goal, k);
            run->step(action);
            std::vector<std::array<double, 2>> path;
            std::size_t step = 0;
            for (const auto& tp : run->last_trace()) {
                out.records.push_back({idx, step++, k, tp.state, tp.reward, tp.event});
                path.push_back({tp.state[0], tp.state[1]});
            }
            sr.endpoints.push_back(path.empty() ? sr.start : path.back());
            sr.paths.push_back(std::move(path));
        }
        sr.injective = assign_injective(sr.endpoints, sr.landmarks, delta);
        injective += sr.injective;
        out.starts.push_back(std::move(sr));
    }
    out.injective_fraction = static_cast<double>(injective) / static_cast<double>(total);
    return out;
}

std::vector<std::vector<double>> paired_returns(const std::function<std::unique_ptr<env::Environment>()>& make_env,
                                                const std::vector<Policy>& policies, std::size_t configs,
                                                std::uint64_t seed) {
    std::vector<std::vector<double>> out(policies.size(), std::vector<double>(configs, 0.0));
    for (std::size_t j = 0; j < configs; ++j) {
        for (std::size_t p = 0; p < policies.size(); ++p) {
            train::Rng env_rng(train::derive_seed(seed, 2 * j));
            train::Rng policy_rng(train::derive_seed(seed, 2 * j + 1));
            auto e = make_env();
            auto r = e->reset(env_rng);
            std::vector<double> obs = r.observation;
            double total = 0.0;
            while (!e->done()) {
                auto s = e->step(policies[p](obs, r.goal, policy_rng));
                total += s.reward;
                obs = std::move(s.observation);
            }
            out[p][j] = total;
        }
    }
    return out;
}

SwitchReport summarize_switch(std::vector<double> plan_returns, std::vector<std::vector<double>> head_returns) {
    SwitchReport r;
    r.heads = head_returns.size();
    r.configs = plan_returns.size();
    r.plan_returns = std::move(plan_returns);
    r.head_returns = std::move(head_returns);
    for (const auto& h : r.head_returns) {
        if (h.size() != r.configs) throw std::invalid_argument("switch analysis: unpaired return arrays");
        std::vector<double> d(r.configs);
        std::size_t positive = 0;
        for (std::size_t j = 0; j < r.configs; ++j) {
            d[j] = r.plan_returns[j] - h[j];
            positive += d[j] > 0.0;
        }
        HeadSummary s;
        s.mean = mean_stderr(d).mean;
        s.skew = skewness(d);
        s.frac_positive = r.configs ? static_cast<double>(positive) / static_cast<double>(r.configs) : 0.0;
        r.summary.push_back(s);
        r.deltas.push_back(std::move(d));
    }
    return r;
}

SwitchReport switch_analysis(train::Trainer& trainer, std::size_t configs, std::uint64_t seed) {
    const std::size_t k = trainer.config().heads;
    if (k < 2) throw std::invalid_argument("switch-analysis needs at least 2 affordance heads (K = 1 has nothing to compare)");
    std::vector<Policy> policies;
    policies.push_back([&](const std::vector<double>& obs, const std::vector<double>& goal, train::Rng& rng) {
        return trainer.act(obs, goal, true, rng).action;
    });
    for (std::size_t h = 0; h < k; ++h) {
        policies.push_back([&trainer, h](const std::vector<double>& obs, const std::vector<double>& goal, train::Rng&) {
            return trainer.head_action(obs, goal, h);
        });
    }
    auto returns = paired_returns([&] { return trainer.make_env(); }, policies, configs, seed);
    std::vector<double> plan = std::move(returns.front());
    returns.erase(returns.begin());
    return summarize_switch(std::move(plan), std::move(returns));
}

}  // namespace grasp::report
