#pragma once

#include "grasp/autodiff/graph.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace grasp::ad {

using Rng = std::mt19937_64;
using ParamList = std::vector<Parameter*>;

enum class Activation { none, elu, tanh, softplus };

Activation parse_activation(const std::string& name);
Var activate(Var x, Activation act);

// Weight matrices initialised uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)],
// biases at zero.
Tensor uniform_fan_in(std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Dense feed-forward stack. `sizes` lists the input width followed by the
// width of every layer, so sizes {4, 512, 512, 512} has three layers.
class Mlp {
public:
    Mlp() = default;
    Mlp(const std::string& name, std::vector<std::size_t> sizes, Activation hidden, Activation output, Rng& rng);

    Var apply(Graph& g, Var x);

    std::size_t in_dim() const { return sizes_.front(); }
    std::size_t out_dim() const { return sizes_.back(); }
    std::size_t layer_count() const { return weights_.size(); }
    const std::vector<std::size_t>& sizes() const { return sizes_; }

    ParamList parameters();
    void zero_output_layer();

private:
    std::vector<std::size_t> sizes_;
    Activation hidden_ = Activation::elu;
    Activation output_ = Activation::none;
    std::vector<Parameter> weights_;
    std::vector<Parameter> biases_;
};

void zero_grads(const ParamList& params);
void copy_values(const ParamList& from, const ParamList& to);
std::uint64_t parameter_hash(const ParamList& params);
std::size_t parameter_count(const ParamList& params);
bool grads_finite(const ParamList& params, std::string* offender = nullptr);

}  // namespace grasp::ad
