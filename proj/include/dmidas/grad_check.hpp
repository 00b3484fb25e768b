#pragma once

#include "dmidas/matrix.hpp"
#include "dmidas/tape.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace dmidas {

/// Builds a scalar (1x1) on `tape` from one leaf per checked input.
using TracedScalarFn = std::function<Var(Tape& tape, std::span<const Var> inputs)>;

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::size_t worst_input = 0;
    std::size_t worst_index = 0;
    std::size_t coordinates = 0;
    bool passed = true;
};

/// Magnitudes below this are compared absolutely in the relative-error denominator.
inline constexpr double kGradCheckFloor = 1e-3;

/**
 * Compares tape adjoints with central differences coordinate by coordinate.
 *
 * Relative error per coordinate is |analytic - numeric| / max(|analytic|, |numeric|, floor).
 * The check passes iff the maximum is below `tol`. Points must avoid kinks
 * (ReLU at 0, max-pool ties, MAE at zero error).
 */
[[nodiscard]] GradCheckReport grad_check(const TracedScalarFn& f, const std::vector<Matrix>& points,
                                         double eps = 1e-6, double tol = 1e-4);

}  // namespace dmidas
