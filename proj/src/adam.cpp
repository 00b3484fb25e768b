#include "dmidas/adam.hpp"

#include "dmidas/errors.hpp"
#include "dmidas/parameters.hpp"

#include <algorithm>
#include <cmath>

namespace dmidas {

void adam_step(ParameterStore& params, OptimizerState& state, const AdamConfig& config) {
    auto& entries = params.entries();
    for (const auto& e : entries) {
        if (!e.grad.all_finite()) throw TrainingError("non-finite gradient for parameter '" + e.name + "'");
    }
    if (state.first_moment.size() != entries.size()) {
        state.first_moment.clear();
        state.second_moment.clear();
        for (const auto& e : entries) {
            state.first_moment.emplace_back(e.value.rows(), e.value.cols());
            state.second_moment.emplace_back(e.value.rows(), e.value.cols());
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(config.beta1, t);
    const double correction2 = 1.0 - std::pow(config.beta2, t);

    for (std::size_t p = 0; p < entries.size(); ++p) {
        auto& e = entries[p];
        const auto g = e.grad.data();
        if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) continue;
        auto m = state.first_moment[p].data();
        auto v = state.second_moment[p].data();
        auto w = e.value.data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            w[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
        }
    }
}

}  // namespace dmidas
