#pragma once

#include "grasp/autodiff/nn.hpp"

#include <optional>
#include <span>

namespace grasp::model {

using ad::Graph;
using ad::ParamList;
using ad::Rng;
using ad::Tensor;
using ad::Var;

struct ModelConfig {
    std::size_t observation_dim = 0;
    std::size_t goal_dim = 0;
    std::size_t action_dim = 0;
    std::size_t state_dim = 64;
    std::size_t hidden = 512;
    bool option_mode = false;
    // When set, the encoder sees only the observation and the goal is appended
    // to the abstract state unchanged (dynamics carries it through). This lets
    // the affordance module read a goal-free slice while the model stays
    // goal-aware.
    bool goal_passthrough = false;
    double gamma = 0.99;
};

// Predictions for a batch of (state, action) rows.
struct TransitionOutput {
    Var reward;      // (N, 1)
    Var duration;    // (N, 1); constant ones in primitive mode
    Var next_state;  // (N, state_width)
};

struct UnrollOutput {
    std::vector<Var> states;     // s_1 .. s_{n+1}
    std::vector<Var> rewards;    // r̂_1 .. r̂_n
    std::vector<Var> durations;  // n̂_1 .. n̂_n
    std::vector<Var> values;     // v̂_1 .. v̂_{n+1}
};

// Encoder, transition (dynamics + reward + duration) and value networks.
class ValueModel {
public:
    ValueModel() = default;
    ValueModel(const ModelConfig& config, Rng& rng);

    const ModelConfig& config() const { return config_; }
    // Width of the abstract state as seen by the planner.
    std::size_t state_width() const;
    // Width of the part of the state the affordance module reads.
    std::size_t affordance_input_width() const { return config_.state_dim; }

    // obs is (B, observation_dim); goal is (B, goal_dim) and must be given
    // iff goal_dim > 0.
    Var encode(Graph& g, Var obs, std::optional<Var> goal);
    TransitionOutput transition(Graph& g, Var state, Var action);
    Var value(Graph& g, Var state);
    // gamma^duration, elementwise.
    Var discount(Var duration) const;
    Var affordance_input(Var state) const;

    UnrollOutput unroll(Graph& g, Var first_state, std::span<const Var> actions);

    ParamList parameters();
    ParamList encoder_parameters() { return encoder_.parameters(); }
    ParamList dynamics_parameters();
    ParamList reward_parameters();
    ParamList value_parameters() { return value_.parameters(); }

private:
    ModelConfig config_;
    ad::Mlp encoder_;
    ad::Mlp embed_;
    ad::Mlp dynamics_;
    ad::Mlp reward_;
    ad::Mlp duration_;
    ad::Mlp value_;
};

// Builds a (rows, cols) constant from row-major values.
Var constant_rows(Graph& g, std::size_t rows, std::size_t cols, std::vector<double> values);

}  // namespace grasp::model
