#pragma once

#include "dmidas/matrix.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace dmidas {

class Rng;

/// Whether a tensor is a weight matrix (L1-penalized) or a bias vector.
enum class ParamRole { weight, bias };

/**
 * Flat registry of named learnable tensors with gradient slots.
 *
 * Entries keep insertion order, which fixes the order of initialization,
 * optimization and serialization. Each entry belongs to a group (one group per
 * block, or per stack when weights are shared).
 */
class ParameterStore {
public:
    struct Entry {
        std::string name;
        std::string group;
        ParamRole role = ParamRole::weight;
        Matrix value;
        Matrix grad;
    };

    /// Registers a zero-initialized tensor. Duplicate names are a ConfigError.
    Matrix& add(const std::string& name, const std::string& group, ParamRole role,
                std::size_t rows, std::size_t cols);

    [[nodiscard]] bool contains(const std::string& name) const { return index_.count(name) != 0; }
    [[nodiscard]] const Matrix& value(const std::string& name) const;
    Matrix& value(const std::string& name);
    Matrix& grad(const std::string& name);
    [[nodiscard]] const Matrix& grad(const std::string& name) const;

    [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::vector<Entry>& entries() noexcept { return entries_; }

    /// Distinct group names in insertion order.
    [[nodiscard]] std::vector<std::string> groups() const;
    /// Total number of scalar parameters.
    [[nodiscard]] std::size_t scalar_count() const noexcept;

    void zero_grad() noexcept;
    /// Sets every value to zero (gradients untouched).
    void zero_values() noexcept;
    /// Copies values from `other`, which must hold the same names and shapes.
    void copy_values_from(const ParameterStore& other);

    /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], fan_in = rows of the layer's weight.
    /// Biases use the fan-in recorded for their group+layer at registration.
    void initialize_uniform_fan_in(Rng& rng);

    /// Values equal, names/shapes/roles equal; gradients ignored.
    [[nodiscard]] bool same_values(const ParameterStore& other) const;

    /// Records the fan-in used by initialize_uniform_fan_in for `name`.
    void set_fan_in(const std::string& name, std::size_t fan_in);

private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
    std::map<std::string, std::size_t> fan_in_;
};

}  // namespace dmidas
