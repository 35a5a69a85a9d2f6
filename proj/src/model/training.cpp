#include "grasp/model/training.hpp"

#include <cmath>

namespace grasp::model {

void EpisodeSegment::validate() const {
    const std::size_t n = actions.size();
    if (n == 0) throw std::invalid_argument("segment: length must be >= 1");
    if (observations.size() != n + 1 || rewards.size() != n || durations.size() != n || terminals.size() != n) {
        throw std::invalid_argument("segment: inconsistent field lengths");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (durations[i] < 1) throw std::invalid_argument("segment: durations must be >= 1");
        if (!std::isfinite(rewards[i])) throw std::invalid_argument("segment: non-finite reward");
        if (terminals[i] && i + 1 != n) throw std::invalid_argument("segment: terminal before the last transition");
    }
}

ParamList TargetModel::parameters() {
    ParamList p = model.parameters();
    for (auto* x : affordances.parameters()) p.push_back(x);
    return p;
}

TargetModel make_target(ValueModel& model, affordance::AffordanceModule& affordances) {
    TargetModel t{model, affordances, 0, 0};
    t.syncs = 1;
    return t;
}

void sync_target(ValueModel& model, affordance::AffordanceModule& affordances, TargetModel& target) {
    ad::copy_values(model.parameters(), target.model.parameters());
    ad::copy_values(affordances.parameters(), target.affordances.parameters());
    target.syncs += 1;
    target.updates_since_sync = 0;
}

Var max_one_step_q(Graph& g, ValueModel& model, affordance::AffordanceModule& affordances, Var states) {
    const std::size_t n = states.rows();
    const std::size_t k = affordances.heads();
    const std::size_t adim = affordances.action_dim();
    Var acts = ad::reshape(affordances.afford(g, model.affordance_input(states)), {n * k, adim});
    std::vector<std::size_t> rep(n * k);
    for (std::size_t i = 0; i < n * k; ++i) rep[i] = i / k;
    TransitionOutput t = model.transition(g, ad::gather_rows(states, std::move(rep)), acts);
    Var q = ad::add(t.reward, ad::mul(model.discount(t.duration), model.value(g, t.next_state)));
    auto best = ad::max_index(ad::reshape(q, {n, k}));
    std::vector<std::size_t> pick(n);
    for (std::size_t i = 0; i < n; ++i) pick[i] = i * k + best[i];
    return ad::gather_rows(q, std::move(pick));
}

std::vector<double> bootstrap_values(TargetModel& target, const std::vector<EpisodeSegment>& segments) {
    const ModelConfig& cfg = target.model.config();
    const std::size_t b = segments.size();
    std::vector<double> obs, goals;
    for (const auto& s : segments) {
        const auto& last = s.observations.back();
        obs.insert(obs.end(), last.begin(), last.end());
        goals.insert(goals.end(), s.goal.begin(), s.goal.end());
    }
    Graph g;
    g.freeze(target.parameters());
    std::optional<Var> goal;
    if (cfg.goal_dim > 0) goal = constant_rows(g, b, cfg.goal_dim, std::move(goals));
    Var states = target.model.encode(g, constant_rows(g, b, cfg.observation_dim, std::move(obs)), goal);
    Var q = max_one_step_q(g, target.model, target.affordances, states);
    return q.value().data();
}

std::vector<double> value_targets(const EpisodeSegment& segment, double bootstrap, double gamma) {
    const std::size_t n = segment.length();
    std::vector<double> out(n);
    double next = bootstrap;
    for (std::size_t j = n; j-- > 0;) {
        if (segment.terminals[j]) next = 0.0;
        const double disc = segment.durations[j] == 1 ? gamma : std::pow(gamma, segment.durations[j]);
        out[j] = segment.rewards[j] + disc * next;
        next = out[j];
    }
    return out;
}

std::vector<double> value_targets(const EpisodeSegment& segment, TargetModel& target, double gamma) {
    return value_targets(segment, bootstrap_values(target, {segment})[0], gamma);
}

ModelLoss model_loss(Graph& g, ValueModel& model, const std::vector<EpisodeSegment>& segments,
                     const std::vector<std::vector<double>>& targets) {
    const ModelConfig& cfg = model.config();
    const std::size_t b = segments.size();
    if (b == 0 || targets.size() != b) throw std::invalid_argument("model_loss: need one target vector per segment");
    std::size_t horizon = 0;
    for (std::size_t i = 0; i < b; ++i) {
        if (targets[i].size() != segments[i].length()) {
            throw std::invalid_argument("model_loss: target length differs from segment length");
        }
        horizon = std::max(horizon, segments[i].length());
    }

    std::vector<double> obs, goals;
    for (const auto& s : segments) {
        obs.insert(obs.end(), s.observations.front().begin(), s.observations.front().end());
        goals.insert(goals.end(), s.goal.begin(), s.goal.end());
    }
    std::optional<Var> goal;
    if (cfg.goal_dim > 0) goal = constant_rows(g, b, cfg.goal_dim, std::move(goals));
    Var state = model.encode(g, constant_rows(g, b, cfg.observation_dim, std::move(obs)), goal);

    std::vector<Var> reward_terms, value_terms, duration_terms;
    for (std::size_t i = 0; i < horizon; ++i) {
        std::vector<double> act(b * cfg.action_dim, 0.0), r(b, 0.0), v(b, 0.0), n(b, 0.0), mask(b, 0.0);
        for (std::size_t k = 0; k < b; ++k) {
            if (i >= segments[k].length()) continue;
            std::copy(segments[k].actions[i].begin(), segments[k].actions[i].end(), act.begin() + k * cfg.action_dim);
            r[k] = segments[k].rewards[i];
            v[k] = targets[k][i];
            n[k] = segments[k].durations[i];
            mask[k] = 1.0;
        }
        Var m = constant_rows(g, b, 1, std::move(mask));
        Var value_pred = model.value(g, state);
        value_terms.push_back(ad::mul(ad::square(ad::sub(constant_rows(g, b, 1, std::move(v)), value_pred)), m));
        TransitionOutput t = model.transition(g, state, constant_rows(g, b, cfg.action_dim, std::move(act)));
        reward_terms.push_back(ad::mul(ad::square(ad::sub(constant_rows(g, b, 1, std::move(r)), t.reward)), m));
        if (cfg.option_mode) {
            duration_terms.push_back(
                ad::mul(ad::square(ad::sub(constant_rows(g, b, 1, std::move(n)), t.duration)), m));
        }
        state = t.next_state;
    }
    const double inv_b = 1.0 / static_cast<double>(b);
    auto total_of = [&](const std::vector<Var>& terms) {
        Var acc = terms.size() == 1 ? terms[0] : ad::concat(std::span<const Var>(terms));
        return ad::scale(ad::sum(acc), inv_b);
    };
    ModelLoss out;
    out.reward = total_of(reward_terms);
    out.value = total_of(value_terms);
    out.total = ad::add(out.reward, out.value);
    if (cfg.option_mode) {
        out.duration = total_of(duration_terms);
        out.total = ad::add(out.total, out.duration);
    }
    return out;
}

}  // namespace grasp::model
