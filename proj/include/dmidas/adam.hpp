#pragma once

#include "dmidas/matrix.hpp"

#include <cstdint>
#include <vector>

namespace dmidas {

class ParameterStore;

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment accumulators, one pair per store entry in store order.
struct OptimizerState {
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    std::uint64_t step = 0;
};

/**
 * One bias-corrected Adam update using the gradients held in `params`.
 *
 * A tensor whose gradient is identically zero for this step is skipped
 * (value and moments untouched), so an all-zero gradient leaves parameters
 * unchanged regardless of accumulated momentum. The step counter always
 * advances. Throws TrainingError naming the first tensor with a non-finite
 * gradient, before anything is modified.
 */
void adam_step(ParameterStore& params, OptimizerState& state, const AdamConfig& config);

}  // namespace dmidas
