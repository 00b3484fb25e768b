#pragma once

#include "dmidas/matrix.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dmidas {

class ParameterStore;
class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::size_t id = npos;

    [[nodiscard]] bool valid() const noexcept { return id != npos; }
    friend bool operator==(Var, Var) = default;
};

/**
 * Reverse-mode gradient tape.
 *
 * Leaves (constants, variables, bound parameters) hold values; every primitive
 * operation appends exactly one entry with its local backward rule. backward()
 * replays entries in reverse order and accumulates adjoints into every input
 * that requires a gradient.
 */
class Tape {
public:
    using BackwardRule = std::function<void(Tape&, Var out)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) = default;
    Tape& operator=(Tape&&) = default;

    /// Leaf that never receives a gradient.
    Var constant(Matrix value);
    /// Leaf that receives a gradient.
    Var variable(Matrix value);
    /// Leaf aliasing a parameter in `store`; binding the same name twice returns the same Var.
    /// The store must outlive the tape and must not be mutated while the tape is live.
    Var parameter(const ParameterStore& store, const std::string& name);

    /// Appends one operation. `backward` may be empty when no input requires a gradient.
    /// Throws NumericError when `value` contains NaN or Inf.
    Var record(std::string_view op, Matrix value, std::initializer_list<Var> inputs,
               BackwardRule backward);

    [[nodiscard]] const Matrix& value(Var v) const;
    [[nodiscard]] bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

    /// Adjoint of `v`; zeros when nothing flowed into it.
    [[nodiscard]] Matrix grad(Var v) const;
    /// Mutable adjoint slot, allocated on first use. Used by backward rules.
    Matrix& grad_slot(Var v);
    /// Adjoint of an op output inside a backward rule; nullptr when none flowed in.
    [[nodiscard]] const Matrix* incoming(Var v) const;

    /// Number of recorded operations (leaves excluded).
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] std::string_view op_name(std::size_t entry) const { return entries_.at(entry).op; }

    /// Seeds d(out)/d(out) = 1 for a 1x1 output and propagates to every leaf.
    void backward(Var scalar_output);

    /// Adds the adjoints of every bound parameter into the store's gradient slots.
    void accumulate_gradients(ParameterStore& store) const;

private:
    struct Node {
        Matrix owned;
        const Matrix* external = nullptr;
        Matrix grad;
        bool requires_grad = false;
    };
    struct Entry {
        std::string_view op;
        Var output;
        BackwardRule backward;
    };

    Var push_leaf(Matrix value, const Matrix* external, bool requires_grad);

    std::vector<Node> nodes_;
    std::vector<Entry> entries_;
    std::map<std::string, Var, std::less<>> bound_parameters_;
    const ParameterStore* bound_store_ = nullptr;
};

}  // namespace dmidas
