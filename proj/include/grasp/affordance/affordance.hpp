#pragma once

#include "grasp/autodiff/nn.hpp"

#include <string>

namespace grasp::affordance {

using ad::Graph;
using ad::ParamList;
using ad::Var;

// GA: goal-conditioned (reads a goal-aware abstract state)
// SA: state-conditioned (reads a goal-free abstract state)
// A:  unconditioned, K free vectors shared by every state
enum class Variant { goal_state, state, unconditioned };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

struct AffordanceConfig {
    Variant variant = Variant::goal_state;
    std::size_t heads = 4;
    std::size_t input_dim = 0;
    std::size_t action_dim = 0;
    std::size_t hidden = 512;
    bool frozen = false;
};

// K-head affordance mapping. Every head is tanh-bounded to [-1, 1]^action_dim.
class AffordanceModule {
public:
    AffordanceModule() = default;
    AffordanceModule(const AffordanceConfig& config, ad::Rng& rng);

    const AffordanceConfig& config() const { return config_; }
    std::size_t heads() const { return config_.heads; }
    std::size_t action_dim() const { return config_.action_dim; }
    bool frozen() const { return config_.frozen; }

    // input is (N, input_dim); returns (N, K * action_dim), head k occupying
    // columns [k * action_dim, (k + 1) * action_dim).
    Var afford(Graph& g, Var input);

    ParamList parameters();
    // Parameters an optimizer may update: empty when frozen.
    ParamList trainable_parameters() { return config_.frozen ? ParamList{} : parameters(); }

private:
    AffordanceConfig config_;
    ad::Mlp trunk_;
    std::vector<ad::Parameter> head_weights_;
    std::vector<ad::Parameter> head_biases_;
    ad::Parameter free_actions_;
};

AffordanceModule make_variant(Variant variant, std::size_t heads, std::size_t input_dim, std::size_t action_dim,
                              std::size_t hidden, std::uint64_t seed, bool frozen);

}  // namespace grasp::affordance
