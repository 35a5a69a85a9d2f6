#include "grasp/autodiff/adam.hpp"

#include <cmath>

namespace grasp::ad {

AdamState make_adam_state(std::span<Parameter* const> params, AdamConfig config) {
    AdamState s;
    s.config = config;
    for (const Parameter* p : params) {
        s.m.emplace_back(p->value.shape());
        s.v.emplace_back(p->value.shape());
    }
    return s;
}

void adam_step(std::span<Parameter* const> params, AdamState& state) {
    if (params.size() != state.m.size()) throw std::invalid_argument("adam_step: state tracks a different parameter set");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Parameter& p = *params[i];
        if (p.grad.size() != p.value.size() || state.m[i].size() != p.value.size()) {
            throw ShapeError("adam_step: shape mismatch for parameter " + p.name);
        }
        if (!p.grad.all_finite()) throw NumericalError("adam_step: non-finite gradient in parameter " + p.name);
    }
    const AdamConfig& c = state.config;
    state.step += 1;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& w = params[i]->value.data();
        const auto& g = params[i]->grad.data();
        auto& m = state.m[i].data();
        auto& v = state.v[i].data();
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
            v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            w[k] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
        }
    }
}

}  // namespace grasp::ad
