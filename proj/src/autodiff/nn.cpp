#include "grasp/autodiff/nn.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace grasp::ad {

Activation parse_activation(const std::string& name) {
    if (name == "elu") return Activation::elu;
    if (name == "tanh") return Activation::tanh;
    if (name == "softplus") return Activation::softplus;
    if (name == "none" || name == "linear") return Activation::none;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

Var activate(Var x, Activation act) {
    switch (act) {
        case Activation::elu: return elu(x);
        case Activation::tanh: return tanh(x);
        case Activation::softplus: return softplus(x);
        case Activation::none: return x;
    }
    return x;
}

Tensor uniform_fan_in(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor w = Tensor::matrix(fan_in, fan_out);
    for (double& x : w.data()) x = dist(rng);
    return w;
}

Mlp::Mlp(const std::string& name, std::vector<std::size_t> sizes, Activation hidden, Activation output, Rng& rng)
    : sizes_(std::move(sizes)), hidden_(hidden), output_(output) {
    if (sizes_.size() < 2) throw std::invalid_argument("mlp '" + name + "' needs an input width and >= 1 layer");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const std::string prefix = name + ".l" + std::to_string(l);
        weights_.emplace_back(prefix + ".w", uniform_fan_in(sizes_[l], sizes_[l + 1], rng));
        biases_.emplace_back(prefix + ".b", Tensor(Shape{sizes_[l + 1]}));
    }
}

Var Mlp::apply(Graph& g, Var x) {
    if (x.cols() != in_dim()) {
        throw ShapeError("mlp input width " + std::to_string(x.cols()) + " != expected " + std::to_string(in_dim()));
    }
    Var h = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        h = add(matmul(h, g.param(weights_[l])), g.param(biases_[l]));
        h = activate(h, l + 1 == weights_.size() ? output_ : hidden_);
    }
    return h;
}

ParamList Mlp::parameters() {
    ParamList out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.push_back(&weights_[l]);
        out.push_back(&biases_[l]);
    }
    return out;
}

void Mlp::zero_output_layer() {
    weights_.back().value.fill(0.0);
    biases_.back().value.fill(0.0);
}

void zero_grads(const ParamList& params) {
    for (Parameter* p : params) p->zero_grad();
}

void copy_values(const ParamList& from, const ParamList& to) {
    if (from.size() != to.size()) throw std::invalid_argument("copy_values: parameter lists differ in length");
    for (std::size_t i = 0; i < from.size(); ++i) {
        if (from[i]->value.shape() != to[i]->value.shape()) {
            throw ShapeError("copy_values: shape mismatch for " + from[i]->name);
        }
        to[i]->value = from[i]->value;
    }
}

std::uint64_t parameter_hash(const ParamList& params) {
    // FNV-1a over the raw bit patterns.
    std::uint64_t h = 1469598103934665603ull;
    for (const Parameter* p : params) {
        for (double x : p->value.data()) {
            std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
            for (int i = 0; i < 8; ++i) {
                h ^= (bits >> (8 * i)) & 0xffu;
                h *= 1099511628211ull;
            }
        }
    }
    return h;
}

std::size_t parameter_count(const ParamList& params) {
    std::size_t n = 0;
    for (const Parameter* p : params) n += p->value.size();
    return n;
}

bool grads_finite(const ParamList& params, std::string* offender) {
    for (const Parameter* p : params) {
        if (!p->grad.all_finite()) {
            if (offender) *offender = p->name;
            return false;
        }
    }
    return true;
}

}  // namespace grasp::ad
