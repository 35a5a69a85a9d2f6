#pragma once

#include "grasp/autodiff/tensor.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace grasp::ad {

enum class OpKind : std::uint8_t {
    constant,
    parameter,
    matmul,
    add,
    sub,
    mul,
    scale,
    add_scalar,
    sum,
    mean,
    row_sum,
    square,
    elu,
    tanh,
    softplus,
    softmax,
    exp,
    log,
    concat,
    slice,
    gather_rows,
    reshape,
    stop_gradient,
};

const char* op_name(OpKind kind);

class Graph;

// Handle to a node in a Graph. Cheap to copy; only valid while its graph lives.
class Var {
public:
    Var() = default;
    Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

    bool valid() const { return graph_ != nullptr; }
    Graph& graph() const { return *graph_; }
    std::size_t id() const { return id_; }

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    double item() const { return value().item(); }

private:
    Graph* graph_ = nullptr;
    std::size_t id_ = 0;
};

// Append-only reverse-mode tape. Inputs of a node always precede it, so the
// backward sweep is a single reverse walk over the node list.
class Graph {
public:
    using BackwardFn = std::function<void(Graph&, std::size_t self)>;

    struct Node {
        OpKind kind;
        std::vector<std::size_t> inputs;
        Tensor value;
        Tensor grad;
        BackwardFn backward;
        Parameter* param = nullptr;
        // False for constants and for nodes computed only from constants.
        bool needs_grad = true;
    };

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var constant(Tensor value);
    Var param(Parameter& p);
    // Parameters bound after this call enter the graph as constants: no
    // gradient is computed for them and their grad fields are left alone.
    void freeze(const std::vector<Parameter*>& params);

    Var record(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward);

    const Node& node(std::size_t id) const { return nodes_[id]; }
    std::size_t size() const { return nodes_.size(); }

    // Adds `g` into the gradient accumulator of node `id`.
    void accumulate(std::size_t id, const Tensor& g);
    Tensor& grad_slot(std::size_t id);

    // Reverse sweep from a scalar root. Every parameter referenced by this
    // graph has its grad overwritten with d(root)/d(param); parameters that
    // do not influence the root end up with zero grad.
    void backward(Var root);

    const Tensor& grad_of(Var v) const { return nodes_[v.id()].grad; }

private:
    std::vector<Node> nodes_;
    std::vector<const Parameter*> frozen_;
};

// Primitive ops. All operate on rank <= 2 tensors, rank 1 counting as a
// single row. Shape mismatches throw ShapeError.
Var matmul(Var a, Var b);
// b may match a exactly, be a single row broadcast over a's rows, a single
// column broadcast over a's columns, or a scalar.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var sum(Var a);
Var mean(Var a);
Var row_sum(Var a);
Var square(Var a);
Var elu(Var a, double alpha = 1.0);
Var tanh(Var a);
Var softplus(Var a);
Var softmax(Var a, double temperature = 1.0);
Var exp(Var a);
Var log(Var a);
Var concat(Var a, Var b);
Var concat(std::span<const Var> parts);
Var slice(Var a, std::size_t col_begin, std::size_t col_end);
Var gather_rows(Var a, std::vector<std::size_t> rows);
Var reshape(Var a, Shape shape);
Var stop_gradient(Var a);
// Row-wise argmax (ties to the lowest index). Not differentiable.
std::vector<std::size_t> max_index(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double c, Var a) { return scale(a, c); }

}  // namespace grasp::ad
