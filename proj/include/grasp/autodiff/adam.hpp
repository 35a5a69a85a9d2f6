#pragma once

#include "grasp/autodiff/nn.hpp"

#include <span>

namespace grasp::ad {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    long step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;
};

AdamState make_adam_state(std::span<Parameter* const> params, AdamConfig config = {});

// Bias-corrected Adam update in place. Rejects the whole step, leaving
// parameters and moments untouched, if any gradient is non-finite.
void adam_step(std::span<Parameter* const> params, AdamState& state);

class Adam {
public:
    Adam() = default;
    Adam(ParamList params, AdamConfig config) : params_(std::move(params)), state_(make_adam_state(params_, config)) {}

    void step() { adam_step(params_, state_); }
    const AdamState& state() const { return state_; }
    AdamState& state() { return state_; }
    const ParamList& parameters() const { return params_; }

private:
    ParamList params_;
    AdamState state_;
};

}  // namespace grasp::ad
