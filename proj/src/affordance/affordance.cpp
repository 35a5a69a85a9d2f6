#include "grasp/affordance/affordance.hpp"

namespace grasp::affordance {

Variant parse_variant(const std::string& name) {
    if (name == "GA" || name == "ga") return Variant::goal_state;
    if (name == "SA" || name == "sa") return Variant::state;
    if (name == "A" || name == "a") return Variant::unconditioned;
    throw std::invalid_argument("unknown affordance variant '" + name + "' (expected GA, SA or A)");
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::goal_state: return "GA";
        case Variant::state: return "SA";
        case Variant::unconditioned: return "A";
    }
    return "?";
}

AffordanceModule::AffordanceModule(const AffordanceConfig& config, ad::Rng& rng) : config_(config) {
    if (config.heads == 0) throw std::invalid_argument("affordance module needs K >= 1 heads");
    if (config.action_dim == 0) throw std::invalid_argument("affordance module needs a positive action dimension");
    if (config.variant == Variant::unconditioned) {
        // pre-tanh values uniform in [-1, 1]
        free_actions_ = ad::Parameter("affordance.free",
                                      ad::uniform_fan_in(1, config.heads * config.action_dim, rng)
                                          .reshaped({1, config.heads * config.action_dim}));
        return;
    }
    if (config.input_dim == 0) throw std::invalid_argument("conditioned affordance module needs an input dimension");
    const std::size_t h = config.hidden;
    trunk_ = ad::Mlp("affordance.trunk", {config.input_dim, h, h}, ad::Activation::elu, ad::Activation::elu, rng);
    for (std::size_t k = 0; k < config.heads; ++k) {
        const std::string name = "affordance.head" + std::to_string(k);
        head_weights_.emplace_back(name + ".w", ad::uniform_fan_in(h, config.action_dim, rng));
        head_biases_.emplace_back(name + ".b", ad::Tensor(ad::Shape{config.action_dim}));
    }
}

Var AffordanceModule::afford(Graph& g, Var input) {
    if (config_.variant == Variant::unconditioned) {
        std::vector<std::size_t> rows(input.rows(), 0);
        return ad::tanh(ad::gather_rows(g.param(free_actions_), std::move(rows)));
    }
    if (input.cols() != config_.input_dim) {
        throw ad::ShapeError("afford: input width " + std::to_string(input.cols()) + " != " +
                             std::to_string(config_.input_dim));
    }
    Var features = trunk_.apply(g, input);
    std::vector<Var> heads;
    heads.reserve(config_.heads);
    for (std::size_t k = 0; k < config_.heads; ++k) {
        heads.push_back(ad::add(ad::matmul(features, g.param(head_weights_[k])), g.param(head_biases_[k])));
    }
    Var raw = heads.size() == 1 ? heads[0] : ad::concat(std::span<const Var>(heads));
    return ad::tanh(raw);
}

ParamList AffordanceModule::parameters() {
    if (config_.variant == Variant::unconditioned) return {&free_actions_};
    ParamList p = trunk_.parameters();
    for (std::size_t k = 0; k < head_weights_.size(); ++k) {
        p.push_back(&head_weights_[k]);
        p.push_back(&head_biases_[k]);
    }
    return p;
}

AffordanceModule make_variant(Variant variant, std::size_t heads, std::size_t input_dim, std::size_t action_dim,
                              std::size_t hidden, std::uint64_t seed, bool frozen) {
    ad::Rng rng(seed);
    return AffordanceModule({variant, heads, input_dim, action_dim, hidden, frozen}, rng);
}

}  // namespace grasp::affordance
