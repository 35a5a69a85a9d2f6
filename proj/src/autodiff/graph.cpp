#include "grasp/autodiff/graph.hpp"

#include <algorithm>
#include <cmath>

namespace grasp::ad {

const char* op_name(OpKind kind) {
    switch (kind) {
        case OpKind::constant: return "constant";
        case OpKind::parameter: return "parameter";
        case OpKind::matmul: return "matmul";
        case OpKind::add: return "add";
        case OpKind::sub: return "sub";
        case OpKind::mul: return "mul";
        case OpKind::scale: return "scale";
        case OpKind::add_scalar: return "add_scalar";
        case OpKind::sum: return "sum";
        case OpKind::mean: return "mean";
        case OpKind::row_sum: return "row_sum";
        case OpKind::square: return "square";
        case OpKind::elu: return "elu";
        case OpKind::tanh: return "tanh";
        case OpKind::softplus: return "softplus";
        case OpKind::softmax: return "softmax";
        case OpKind::exp: return "exp";
        case OpKind::log: return "log";
        case OpKind::concat: return "concat";
        case OpKind::slice: return "slice";
        case OpKind::gather_rows: return "gather_rows";
        case OpKind::reshape: return "reshape";
        case OpKind::stop_gradient: return "stop_gradient";
    }
    return "unknown";
}

const Tensor& Var::value() const { return graph_->node(id_).value; }

Var Graph::constant(Tensor value) {
    nodes_.push_back(Node{OpKind::constant, {}, std::move(value), {}, nullptr, nullptr, false});
    return Var(this, nodes_.size() - 1);
}

Var Graph::param(Parameter& p) {
    if (std::find(frozen_.begin(), frozen_.end(), &p) != frozen_.end()) return constant(p.value);
    nodes_.push_back(Node{OpKind::parameter, {}, p.value, {}, nullptr, &p, true});
    return Var(this, nodes_.size() - 1);
}

void Graph::freeze(const std::vector<Parameter*>& params) {
    frozen_.insert(frozen_.end(), params.begin(), params.end());
}

Var Graph::record(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward) {
    for (std::size_t in : inputs) {
        if (in >= nodes_.size()) throw std::logic_error("graph input refers to a later node");
    }
    bool needs = false;
    for (std::size_t in : inputs) needs = needs || nodes_[in].needs_grad;
    if (!needs) backward = nullptr;
    nodes_.push_back(Node{kind, std::move(inputs), std::move(value), {}, std::move(backward), nullptr, needs});
    return Var(this, nodes_.size() - 1);
}

Tensor& Graph::grad_slot(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape());
    return n.grad;
}

void Graph::accumulate(std::size_t id, const Tensor& g) {
    if (!nodes_[id].needs_grad) return;
    Tensor& slot = grad_slot(id);
    auto& d = slot.data();
    const auto& s = g.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

void Graph::backward(Var root) {
    if (root.value().size() != 1) {
        throw ShapeError("backward requires a scalar root, got shape " + shape_string(root.shape()));
    }
    for (Node& n : nodes_) {
        n.grad = Tensor();
        if (n.param) n.param->zero_grad();
    }
    grad_slot(root.id()).fill(1.0);
    for (std::size_t i = root.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad.size() == 0 || !n.needs_grad) continue;
        if (n.param) {
            auto& pg = n.param->grad.data();
            for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += n.grad[k];
        } else if (n.backward) {
            n.backward(*this, i);
        }
    }
}

namespace {

void require_same_graph(Var a, Var b) {
    if (&a.graph() != &b.graph()) throw std::logic_error("ops mix nodes from different graphs");
}

void require_matrix(Var a, const char* op) {
    if (a.value().rank() > 2) {
        throw ShapeError(std::string(op) + ": rank > 2 not supported, got " + shape_string(a.shape()));
    }
}

enum class Broadcast { same, row, column, scalar };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() == b.shape()) return Broadcast::same;
    if (b.size() == 1) return Broadcast::scalar;
    if (a.rank() <= 2 && b.rank() <= 2) {
        if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::row;
        if (b.cols() == 1 && b.rows() == a.rows() && b.rank() == 2) return Broadcast::column;
        if (a.size() == b.size() && a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::same;
    }
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
}

RowMatrix expand(const Tensor& b, Broadcast kind, std::size_t rows, std::size_t cols) {
    switch (kind) {
        case Broadcast::same: return b.mat();
        case Broadcast::row: return b.mat().replicate(static_cast<Eigen::Index>(rows), 1);
        case Broadcast::column: return b.mat().replicate(1, static_cast<Eigen::Index>(cols));
        case Broadcast::scalar: return RowMatrix::Constant(rows, cols, b[0]);
    }
    return {};
}

Tensor reduce_to(const RowMatrix& g, const Tensor& like, Broadcast kind) {
    Tensor out(like.shape());
    switch (kind) {
        case Broadcast::same: out.mat() = g; break;
        case Broadcast::row: out.mat() = g.colwise().sum(); break;
        case Broadcast::column: out.mat() = g.rowwise().sum(); break;
        case Broadcast::scalar: out[0] = g.sum(); break;
    }
    return out;
}

// Unary elementwise op whose derivative is expressed through input and output.
template <class F, class DF>
Var unary(Var a, OpKind kind, F f, DF df) {
    require_matrix(a, op_name(kind));
    const Tensor& x = a.value();
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
    return a.graph().record(kind, {a.id()}, std::move(y), [df](Graph& g, std::size_t self) {
        const auto& n = g.node(self);
        const Tensor& x = g.node(n.inputs[0]).value;
        Tensor gx(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) gx[i] = n.grad[i] * df(x[i], n.value[i]);
        g.accumulate(n.inputs[0], gx);
    });
}

}  // namespace

Var matmul(Var a, Var b) {
    require_same_graph(a, b);
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
    }
    Tensor y = Tensor::matrix(a.rows(), b.cols());
    y.mat().noalias() = a.value().mat() * b.value().mat();
    if (a.value().rank() <= 1) y = y.reshaped(Shape{b.cols()});
    return a.graph().record(OpKind::matmul, {a.id(), b.id()}, std::move(y), [](Graph& g, std::size_t self) {
        const auto& n = g.node(self);
        const Tensor& av = g.node(n.inputs[0]).value;
        const Tensor& bv = g.node(n.inputs[1]).value;
        ConstMatrixMap gy(n.grad.data().data(), static_cast<Eigen::Index>(av.rows()),
                          static_cast<Eigen::Index>(bv.cols()));
        const std::size_t ia = n.inputs[0], ib = n.inputs[1];
        if (g.node(ia).needs_grad) {
            Tensor ga(av.shape());
            ga.mat().noalias() = gy * bv.mat().transpose();
            g.accumulate(ia, ga);
        }
        if (g.node(ib).needs_grad) {
            Tensor gb(bv.shape());
            gb.mat().noalias() = av.mat().transpose() * gy;
            g.accumulate(ib, gb);
        }
    });
}

namespace {

Var binary(Var a, Var b, OpKind kind) {
    require_same_graph(a, b);
    require_matrix(a, op_name(kind));
    require_matrix(b, op_name(kind));
    if (kind != OpKind::sub && a.value().size() < b.value().size()) std::swap(a, b);
    const Broadcast bk = broadcast_kind(a.value(), b.value(), op_name(kind));
    const std::size_t rows = a.rows(), cols = a.cols();
    RowMatrix be = expand(b.value(), bk, rows, cols);
    Tensor y(a.shape());
    switch (kind) {
        case OpKind::add: y.mat() = a.value().mat() + be; break;
        case OpKind::sub: y.mat() = a.value().mat() - be; break;
        case OpKind::mul: y.mat() = a.value().mat().cwiseProduct(be); break;
        default: throw std::logic_error("binary: unsupported op");
    }
    return a.graph().record(kind, {a.id(), b.id()}, std::move(y), [kind, bk](Graph& g, std::size_t self) {
        const auto& n = g.node(self);
        const std::size_t ia = n.inputs[0], ib = n.inputs[1];
        const Tensor& av = g.node(ia).value;
        const Tensor& bv = g.node(ib).value;
        ConstMatrixMap gy(n.grad.data().data(), static_cast<Eigen::Index>(av.rows()),
                          static_cast<Eigen::Index>(av.cols()));
        Tensor ga(av.shape());
        RowMatrix gb_full;
        if (kind == OpKind::mul) {
            RowMatrix be = expand(bv, bk, av.rows(), av.cols());
            ga.mat() = gy.cwiseProduct(be);
            gb_full = gy.cwiseProduct(av.mat());
        } else {
            ga.mat() = gy;
            gb_full = kind == OpKind::sub ? RowMatrix(-gy) : RowMatrix(gy);
        }
        Tensor gb = reduce_to(gb_full, bv, bk);
        g.accumulate(ia, ga);
        g.accumulate(ib, gb);
    });
}

}  // namespace

Var add(Var a, Var b) { return binary(a, b, OpKind::add); }
Var sub(Var a, Var b) { return binary(a, b, OpKind::sub); }
Var mul(Var a, Var b) { return binary(a, b, OpKind::mul); }

Var scale(Var a, double c) {
    return unary(
        a, OpKind::scale, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(Var a, double c) {
    return unary(
        a, OpKind::add_scalar, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var sum(Var a) {
    double s = 0.0;
    for (double x : a.value().data()) s += x;
    return a.graph().record(OpKind::sum, {a.id()}, Tensor::scalar(s), [](Graph& g, std::size_t self) {
        const auto& n = g.node(self);
        const std::size_t ia = n.inputs[0];
        Tensor ga(g.node(ia).value.shape(), n.grad[0]);
        g.accumulate(ia, ga);
    });
}

Var mean(Var a) {
    const double count = static_cast<double>(a.value().size());
    if (count == 0) throw ShapeError("mean of an empty tensor");
    double s = 0.0;
    for (double x : a.value().data()) s += x;
    return a.graph().record(OpKind::mean, {a.id()}, Tensor::scalar(s / count), [count](Graph& g, std::size_t self) {
        const auto& n = g.node(self);
        const std::size_t ia = n.inputs[0];
        Tensor ga(g.node(ia).value.shape(), n.grad[0] / count);
        g.accumulate(ia, ga);
    });
}

Var row_sum(Var a) {
    require_matrix(a, "row_sum");
    Tensor y = Tensor::matrix(a.rows(), 1);
    y.mat() = a.value().mat().rowwise().sum();
    return a.graph().record(OpKind::row_sum, {a.id()}, std::move(y), [](Graph& g, std::size_t self) {
        const auto& n = g.node(self);
        const std::size_t ia = n.inputs[0];
        const Tensor& av = g.node(ia).value;
        Tensor ga(av.shape());
        ga.mat() = n.grad.mat().replicate(1, static_cast<Eigen::Index>(av.cols()));
        g.accumulate(ia, ga);
    });
}

Var square(Var a) {
    return unary(
        a, OpKind::square, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var elu(Var a, double alpha) {
    return unary(
        a, OpKind::elu, [alpha](double x) { return x > 0.0 ? x : alpha * std::expm1(x); },
        [alpha](double x, double y) { return x > 0.0 ? 1.0 : y + alpha; });
}

Var tanh(Var a) {
    return unary(
        a, OpKind::tanh, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var softplus(Var a) {
    return unary(
        a, OpKind::softplus,
        [](double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
        [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Var exp(Var a) {
    return unary(
        a, OpKind::exp, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
    return unary(
        a, OpKind::log, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var softmax(Var a, double temperature) {
    require_matrix(a, "softmax");
    if (!(temperature > 0.0)) throw std::invalid_argument("softmax: temperature must be positive");
    const std::size_t rows = a.rows(), cols = a.cols();
    Tensor y(a.shape());
    const Tensor& x = a.value();
    for (std::size_t r = 0; r < rows; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < cols; ++c) mx = std::max(mx, x.at(r, c) / temperature);
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double e = std::exp(x.at(r, c) / temperature - mx);
            y.at(r, c) = e;
            z += e;
        }
        for (std::size_t c = 0; c < cols; ++c) y.at(r, c) /= z;
    }
    return a.graph().record(OpKind::softmax, {a.id()}, std::move(y), [temperature](Graph& g, std::size_t self) {
        const auto& n = g.node(self);
        const std::size_t ia = n.inputs[0];
        const Tensor& y = n.value;
        Tensor ga(y.shape());
        for (std::size_t r = 0; r < y.rows(); ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < y.cols(); ++c) dot += n.grad.at(r, c) * y.at(r, c);
            for (std::size_t c = 0; c < y.cols(); ++c) {
                ga.at(r, c) = y.at(r, c) * (n.grad.at(r, c) - dot) / temperature;
            }
        }
        g.accumulate(ia, ga);
    });
}

Var concat(Var a, Var b) {
    const Var parts[] = {a, b};
    return concat(std::span<const Var>(parts));
}

Var concat(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat of zero tensors");
    const std::size_t rows = parts[0].rows();
    bool all_vectors = true;
    std::size_t cols = 0;
    std::vector<std::size_t> inputs;
    for (const Var& p : parts) {
        require_same_graph(parts[0], p);
        require_matrix(p, "concat");
        if (p.rows() != rows) {
            throw ShapeError("concat: row counts differ, " + shape_string(parts[0].shape()) + " vs " +
                             shape_string(p.shape()));
        }
        all_vectors = all_vectors && p.value().rank() <= 1;
        cols += p.cols();
        inputs.push_back(p.id());
    }
    Tensor y = all_vectors ? Tensor(Shape{cols}) : Tensor::matrix(rows, cols);
    std::size_t offset = 0;
    for (const Var& p : parts) {
        y.mat().middleCols(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(p.cols())) = p.value().mat();
        offset += p.cols();
    }
    return parts[0].graph().record(OpKind::concat, std::move(inputs), std::move(y), [](Graph& g, std::size_t self) {
        const auto inputs = g.node(self).inputs;
        std::size_t offset = 0;
        for (std::size_t in : inputs) {
            const Tensor& v = g.node(in).value;
            Tensor gi(v.shape());
            gi.mat() = g.node(self).grad.mat().middleCols(static_cast<Eigen::Index>(offset),
                                                          static_cast<Eigen::Index>(v.cols()));
            offset += v.cols();
            g.accumulate(in, gi);
        }
    });
}

Var slice(Var a, std::size_t col_begin, std::size_t col_end) {
    require_matrix(a, "slice");
    if (col_begin > col_end || col_end > a.cols()) {
        throw ShapeError("slice: column range [" + std::to_string(col_begin) + ", " + std::to_string(col_end) +
                         ") out of bounds for shape " + shape_string(a.shape()));
    }
    const std::size_t width = col_end - col_begin;
    Tensor y = a.value().rank() <= 1 ? Tensor(Shape{width}) : Tensor::matrix(a.rows(), width);
    y.mat() = a.value().mat().middleCols(static_cast<Eigen::Index>(col_begin), static_cast<Eigen::Index>(width));
    return a.graph().record(OpKind::slice, {a.id()}, std::move(y), [col_begin, width](Graph& g, std::size_t self) {
        const std::size_t ia = g.node(self).inputs[0];
        Tensor ga(g.node(ia).value.shape());
        ga.mat().middleCols(static_cast<Eigen::Index>(col_begin), static_cast<Eigen::Index>(width)) =
            g.node(self).grad.mat();
        g.accumulate(ia, ga);
    });
}

Var gather_rows(Var a, std::vector<std::size_t> rows) {
    require_matrix(a, "gather_rows");
    const std::size_t cols = a.cols();
    Tensor y = Tensor::matrix(rows.size(), cols);
    const Tensor& x = a.value();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= x.rows()) {
            throw ShapeError("gather_rows: row " + std::to_string(rows[r]) + " out of range for shape " +
                             shape_string(x.shape()));
        }
        std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(rows[r] * cols), cols,
                    y.data().begin() + static_cast<std::ptrdiff_t>(r * cols));
    }
    return a.graph().record(OpKind::gather_rows, {a.id()}, std::move(y),
                            [rows = std::move(rows), cols](Graph& g, std::size_t self) {
                                const std::size_t ia = g.node(self).inputs[0];
                                Tensor ga(g.node(ia).value.shape());
                                const Tensor& gy = g.node(self).grad;
                                for (std::size_t r = 0; r < rows.size(); ++r) {
                                    for (std::size_t c = 0; c < cols; ++c) ga[rows[r] * cols + c] += gy[r * cols + c];
                                }
                                g.accumulate(ia, ga);
                            });
}

Var reshape(Var a, Shape shape) {
    Tensor y = a.value().reshaped(std::move(shape));
    return a.graph().record(OpKind::reshape, {a.id()}, std::move(y), [](Graph& g, std::size_t self) {
        const std::size_t ia = g.node(self).inputs[0];
        g.accumulate(ia, g.node(self).grad.reshaped(g.node(ia).value.shape()));
    });
}

Var stop_gradient(Var a) { return a.graph().record(OpKind::stop_gradient, {a.id()}, a.value(), nullptr); }

std::vector<std::size_t> max_index(Var a) {
    require_matrix(a, "max_index");
    const Tensor& x = a.value();
    std::vector<std::size_t> out(x.rows(), 0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 1; c < x.cols(); ++c) {
            if (x.at(r, c) > x.at(r, out[r])) out[r] = c;
        }
    }
    return out;
}

}  // namespace grasp::ad
