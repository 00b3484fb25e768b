#include "dmidas/tape.hpp"

#include "dmidas/errors.hpp"
#include "dmidas/parameters.hpp"

#include <algorithm>

namespace dmidas {

Var Tape::push_leaf(Matrix value, const Matrix* external, bool requires_grad) {
    Node node;
    node.owned = std::move(value);
    node.external = external;
    node.requires_grad = requires_grad;
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

Var Tape::constant(Matrix value) { return push_leaf(std::move(value), nullptr, false); }

Var Tape::variable(Matrix value) { return push_leaf(std::move(value), nullptr, true); }

Var Tape::parameter(const ParameterStore& store, const std::string& name) {
    if (bound_store_ != nullptr && bound_store_ != &store) {
        throw ConfigError("tape is already bound to a different parameter store");
    }
    bound_store_ = &store;
    if (auto it = bound_parameters_.find(name); it != bound_parameters_.end()) return it->second;
    const Var v = push_leaf(Matrix{}, &store.value(name), true);
    bound_parameters_.emplace(name, v);
    return v;
}

Var Tape::record(std::string_view op, Matrix value, std::initializer_list<Var> inputs,
                 BackwardRule backward) {
    if (!value.all_finite()) {
        throw NumericError("non-finite output from '" + std::string(op) + "' " + value.shape_string());
    }
    const bool needs = std::any_of(inputs.begin(), inputs.end(),
                                   [this](Var v) { return nodes_.at(v.id).requires_grad; });
    const Var out = push_leaf(std::move(value), nullptr, needs);
    entries_.push_back(Entry{op, out, needs ? std::move(backward) : BackwardRule{}});
    return out;
}

const Matrix& Tape::value(Var v) const {
    const Node& node = nodes_.at(v.id);
    return node.external != nullptr ? *node.external : node.owned;
}

Matrix Tape::grad(Var v) const {
    const Node& node = nodes_.at(v.id);
    if (!node.grad.empty()) return node.grad;
    const Matrix& val = value(v);
    return Matrix(val.rows(), val.cols());
}

Matrix& Tape::grad_slot(Var v) {
    Node& node = nodes_.at(v.id);
    if (node.grad.empty()) {
        const Matrix& val = value(v);
        node.grad = Matrix(val.rows(), val.cols());
    }
    return node.grad;
}

const Matrix* Tape::incoming(Var v) const {
    const Node& node = nodes_.at(v.id);
    return node.grad.empty() ? nullptr : &node.grad;
}

void Tape::backward(Var scalar_output) {
    const Matrix& out = value(scalar_output);
    if (out.rows() != 1 || out.cols() != 1) {
        throw DimensionError("backward requires a 1x1 output, got " + out.shape_string());
    }
    grad_slot(scalar_output)(0, 0) += 1.0;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        if (it->backward && incoming(it->output) != nullptr) it->backward(*this, it->output);
    }
}

void Tape::accumulate_gradients(ParameterStore& store) const {
    if (bound_store_ != nullptr && bound_store_ != &store) {
        throw ConfigError("accumulate_gradients: store differs from the bound store");
    }
    for (const auto& [name, v] : bound_parameters_) {
        const Matrix* g = incoming(v);
        if (g != nullptr) store.grad(name).add_in_place(*g);
    }
}

}  // namespace dmidas
