#include "dmidas/parameters.hpp"

#include "dmidas/errors.hpp"
#include "dmidas/rng.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace dmidas {

Matrix& ParameterStore::add(const std::string& name, const std::string& group, ParamRole role,
                            std::size_t rows, std::size_t cols) {
    if (index_.count(name) != 0) throw ConfigError("duplicate parameter name '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.push_back(Entry{name, group, role, Matrix(rows, cols), Matrix(rows, cols)});
    return entries_.back().value;
}

const Matrix& ParameterStore::value(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("missing parameter '" + name + "'");
    return entries_[it->second].value;
}

Matrix& ParameterStore::value(const std::string& name) {
    return const_cast<Matrix&>(std::as_const(*this).value(name));
}

const Matrix& ParameterStore::grad(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("missing parameter '" + name + "'");
    return entries_[it->second].grad;
}

Matrix& ParameterStore::grad(const std::string& name) {
    return const_cast<Matrix&>(std::as_const(*this).grad(name));
}

std::vector<std::string> ParameterStore::groups() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) {
        if (std::find(out.begin(), out.end(), e.group) == out.end()) out.push_back(e.group);
    }
    return out;
}

std::size_t ParameterStore::scalar_count() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

void ParameterStore::zero_grad() noexcept {
    for (auto& e : entries_) e.grad.fill(0.0);
}

void ParameterStore::zero_values() noexcept {
    for (auto& e : entries_) e.value.fill(0.0);
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
    if (other.entries_.size() != entries_.size()) {
        throw ConfigError("parameter stores differ in entry count");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& src = other.entries_[i];
        auto& dst = entries_[i];
        if (src.name != dst.name || !src.value.same_shape(dst.value)) {
            throw ConfigError("parameter stores differ at '" + dst.name + "'");
        }
        dst.value = src.value;
    }
}

void ParameterStore::set_fan_in(const std::string& name, std::size_t fan_in) {
    fan_in_[name] = fan_in;
}

void ParameterStore::initialize_uniform_fan_in(Rng& rng) {
    for (auto& e : entries_) {
        std::size_t fan_in = e.value.rows();
        if (auto it = fan_in_.find(e.name); it != fan_in_.end()) fan_in = it->second;
        const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
        for (double& v : e.value.data()) v = rng.uniform(-bound, bound);
    }
}

bool ParameterStore::same_values(const ParameterStore& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& a = entries_[i];
        const auto& b = other.entries_[i];
        if (a.name != b.name || a.group != b.group || a.role != b.role || !(a.value == b.value)) {
            return false;
        }
    }
    return true;
}

}  // namespace dmidas
