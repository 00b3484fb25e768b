#pragma once

#include "dmidas/matrix.hpp"
#include "dmidas/tape.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace dmidas {

class ParameterStore;

enum class PoolMode { avg, max, stride };

struct PoolSpec {
    std::size_t kernel = 1;
    std::size_t stride = 1;
    PoolMode mode = PoolMode::avg;

    friend bool operator==(const PoolSpec&, const PoolSpec&) = default;
};

enum class LossKind { mae, mse };

[[nodiscard]] std::string_view to_string(PoolMode mode) noexcept;
[[nodiscard]] PoolMode parse_pool_mode(std::string_view text);
[[nodiscard]] std::string_view to_string(LossKind kind) noexcept;
[[nodiscard]] LossKind parse_loss_kind(std::string_view text);

// ---------------------------------------------------------------------------
// Plain kernels (single vectors, no tape)
// ---------------------------------------------------------------------------

/// floor((length - kernel) / stride) + 1; ConfigError when kernel or stride is 0 or kernel > length.
[[nodiscard]] std::size_t pooled_length(std::size_t length, const PoolSpec& spec);

/// Window w covers [w*stride, w*stride + kernel).
[[nodiscard]] std::vector<double> pool1d(std::span<const double> x, const PoolSpec& spec);

/// One output step of the piecewise-linear upsampler:
///   out[t] = theta[anchor] + (theta[plus] - theta[minus]) * weight
struct InterpStep {
    std::size_t anchor = 0;
    std::size_t plus = 0;
    std::size_t minus = 0;
    double weight = 0.0;
};

/**
 * Interpolation plan for K uniformly spaced knots upsampled to H steps.
 *
 * Knot k sits at t_k = k * H / K. Between knots the value is linear; past the
 * last knot the final segment's slope is extended (K >= 2) or the single knot
 * value is held (K = 1). Outputs that fall exactly on a knot reproduce it bit
 * for bit, so K == H is the identity.
 */
[[nodiscard]] std::vector<InterpStep> interp_plan(std::size_t knots, std::size_t horizon);

[[nodiscard]] std::vector<double> interp_upsample(std::span<const double> theta, std::size_t horizon);

[[nodiscard]] double loss(std::span<const double> y, std::span<const double> yhat, LossKind kind);

/// lambda * sum |w| over weight matrices (biases excluded).
[[nodiscard]] double l1_penalty(const ParameterStore& params, double lambda);

// ---------------------------------------------------------------------------
// Differentiable ops (batched: one sample per row)
// ---------------------------------------------------------------------------

/// x[N x I] * W[I x O] + b[1 x O]
Var affine(Tape& tape, Var x, Var w, Var b);
/// a[N x I] * b[I x O]
Var matmul(Tape& tape, Var a, Var b);
/// max(0, x); subgradient 0 at 0.
Var relu(Tape& tape, Var x);
Var add(Tape& tape, Var a, Var b);
Var sub(Tape& tape, Var a, Var b);
/// Sum of all entries as a 1x1 value.
Var sum(Tape& tape, Var x);
/// Row-wise pool1d. Gradients: avg spreads 1/kernel, max routes to the first argmax,
/// stride routes to the window's first element.
Var pool1d(Tape& tape, Var x, const PoolSpec& spec);
/// Row-wise interp_upsample of [N x K] knots to [N x H].
Var interp_upsample(Tape& tape, Var theta, std::size_t horizon);
/// Mean over every entry of |y - yhat| or (y - yhat)^2, as 1x1.
Var loss(Tape& tape, Var y, Var yhat, LossKind kind);
/// lambda * sum |w| over the store's weight matrices, bound on `tape`.
Var l1_penalty(Tape& tape, const ParameterStore& params, double lambda);

}  // namespace dmidas
