#include "grasp/model/value_model.hpp"

#include <cmath>

namespace grasp::model {

using ad::Activation;
using ad::Mlp;

Var constant_rows(Graph& g, std::size_t rows, std::size_t cols, std::vector<double> values) {
    return g.constant(Tensor(ad::Shape{rows, cols}, std::move(values)));
}

ValueModel::ValueModel(const ModelConfig& config, Rng& rng) : config_(config) {
    if (config.observation_dim == 0 || config.action_dim == 0 || config.state_dim == 0 || config.hidden == 0) {
        throw std::invalid_argument("value model: dimensions must be positive");
    }
    const std::size_t h = config.hidden;
    const std::size_t enc_in = config.observation_dim + (config.goal_passthrough ? 0 : config.goal_dim);
    encoder_ = Mlp("model.encoder", {enc_in, h, h, config.state_dim}, Activation::elu, Activation::elu, rng);
    embed_ = Mlp("model.embed", {state_width() + config.action_dim, h, h}, Activation::elu, Activation::elu, rng);
    dynamics_ = Mlp("model.dynamics", {h, h, config.state_dim}, Activation::elu, Activation::elu, rng);
    reward_ = Mlp("model.reward", {h, h, 1}, Activation::elu, Activation::none, rng);
    if (config.option_mode) {
        duration_ = Mlp("model.duration", {h, h, 1}, Activation::elu, Activation::softplus, rng);
    }
    value_ = Mlp("model.value", {state_width(), h, h, 1}, Activation::elu, Activation::none, rng);
}

std::size_t ValueModel::state_width() const {
    return config_.state_dim + (config_.goal_passthrough ? config_.goal_dim : 0);
}

Var ValueModel::encode(Graph& g, Var obs, std::optional<Var> goal) {
    if (obs.cols() != config_.observation_dim) {
        throw ad::ShapeError("encode: observation width " + std::to_string(obs.cols()) + " != " +
                             std::to_string(config_.observation_dim));
    }
    if (config_.goal_dim > 0) {
        if (!goal) throw ad::ShapeError("encode: this model is goal-conditioned but no goal was given");
        if (goal->cols() != config_.goal_dim) {
            throw ad::ShapeError("encode: goal width " + std::to_string(goal->cols()) + " != " +
                                 std::to_string(config_.goal_dim));
        }
        if (config_.goal_passthrough) return ad::concat(encoder_.apply(g, obs), *goal);
        return encoder_.apply(g, ad::concat(obs, *goal));
    }
    if (goal && goal->cols() > 0) throw ad::ShapeError("encode: goal given to a goal-free model");
    return encoder_.apply(g, obs);
}

TransitionOutput ValueModel::transition(Graph& g, Var state, Var action) {
    if (action.cols() != config_.action_dim) {
        throw ad::ShapeError("transition: action width " + std::to_string(action.cols()) + " != " +
                             std::to_string(config_.action_dim));
    }
    Var e = embed_.apply(g, ad::concat(state, action));
    TransitionOutput out;
    out.reward = reward_.apply(g, e);
    Var next = dynamics_.apply(g, e);
    if (config_.goal_passthrough && config_.goal_dim > 0) {
        next = ad::concat(next, ad::slice(state, config_.state_dim, state_width()));
    }
    out.next_state = next;
    if (config_.option_mode) {
        out.duration = duration_.apply(g, e);
    } else {
        out.duration = g.constant(Tensor(ad::Shape{state.rows(), 1}, 1.0));
    }
    return out;
}

Var ValueModel::value(Graph& g, Var state) { return value_.apply(g, state); }

Var ValueModel::discount(Var duration) const { return ad::exp(ad::scale(duration, std::log(config_.gamma))); }

Var ValueModel::affordance_input(Var state) const {
    if (config_.goal_passthrough && config_.goal_dim > 0) return ad::slice(state, 0, config_.state_dim);
    return state;
}

UnrollOutput ValueModel::unroll(Graph& g, Var first_state, std::span<const Var> actions) {
    UnrollOutput out;
    out.states.push_back(first_state);
    out.values.push_back(value(g, first_state));
    for (const Var& a : actions) {
        TransitionOutput t = transition(g, out.states.back(), a);
        out.rewards.push_back(t.reward);
        out.durations.push_back(t.duration);
        out.states.push_back(t.next_state);
        out.values.push_back(value(g, t.next_state));
    }
    return out;
}

ParamList ValueModel::dynamics_parameters() {
    ParamList p = embed_.parameters();
    for (auto* x : dynamics_.parameters()) p.push_back(x);
    return p;
}

ParamList ValueModel::reward_parameters() {
    ParamList p = reward_.parameters();
    if (config_.option_mode) {
        for (auto* x : duration_.parameters()) p.push_back(x);
    }
    return p;
}

ParamList ValueModel::parameters() {
    ParamList p = encoder_parameters();
    for (auto* x : dynamics_parameters()) p.push_back(x);
    for (auto* x : reward_parameters()) p.push_back(x);
    for (auto* x : value_parameters()) p.push_back(x);
    return p;
}

}  // namespace grasp::model
