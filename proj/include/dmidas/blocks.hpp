#pragma once

#include "dmidas/matrix.hpp"
#include "dmidas/ops.hpp"
#include "dmidas/tape.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dmidas {

class ParameterStore;

enum class BasisKind { generic, polynomial, harmonic, midas };

[[nodiscard]] std::string_view to_string(BasisKind kind) noexcept;
[[nodiscard]] BasisKind parse_basis_kind(std::string_view text);

/// Declarative description of one block: pooling -> MLP -> two linear heads -> basis expansion.
struct BlockConfig {
    BasisKind basis = BasisKind::generic;
    std::size_t input_size = 1;  ///< L, backcast length
    std::size_t horizon = 1;     ///< H, forecast length
    std::vector<std::size_t> mlp_widths{512, 512};
    PoolSpec pooling{};              ///< midas only
    double expressivity_ratio = 1.0;  ///< midas only, in (0, 1]
    std::size_t poly_degree = 2;      ///< polynomial only
    std::size_t n_harmonics = 8;      ///< harmonic only

    friend bool operator==(const BlockConfig&, const BlockConfig&) = default;
};

/// Throws ConfigError when the config violates its invariants.
void validate(const BlockConfig& config);

/// ceil(ratio * n), clamped to [1, n]. Products within 1e-9 above an integer
/// are treated as that integer so binary rounding never adds a knot.
[[nodiscard]] std::size_t knot_count(double ratio, std::size_t n);

/// Width of the forecast coefficient head.
[[nodiscard]] std::size_t forecast_coefficients(const BlockConfig& config);
/// Width of the backcast coefficient head.
[[nodiscard]] std::size_t backcast_coefficients(const BlockConfig& config);
/// Length of the MLP input after pooling.
[[nodiscard]] std::size_t mlp_input_size(const BlockConfig& config);

/// Values of one block evaluated on a single input window.
struct BlockOutput {
    std::vector<double> backcast;
    std::vector<double> forecast;
    std::vector<double> theta_f;
    std::vector<double> theta_b;
    std::vector<double> hidden;
};

/// Tape handles of one batched block evaluation.
struct BlockVars {
    Var backcast;
    Var forecast;
    Var theta_f;
    Var theta_b;
    Var hidden;
};

/// Registers every tensor the block needs under `prefix` ("<prefix>.fc0.weight", ...).
void register_block_parameters(ParameterStore& params, const BlockConfig& config,
                               const std::string& prefix, const std::string& group);

/// Batched block on [N x L] residual inputs.
BlockVars block_forward(Tape& tape, const BlockConfig& config, const ParameterStore& params,
                        const std::string& prefix, Var y_in);

/// Single-window convenience wrapper.
[[nodiscard]] BlockOutput block_forward(const BlockConfig& config, const ParameterStore& params,
                                        std::span<const double> y_in,
                                        const std::string& prefix = "block");

// Basis expansions on single coefficient vectors.

/// Identity: coefficients are the outputs.
[[nodiscard]] std::pair<std::vector<double>, std::vector<double>> generic_basis(
    std::span<const double> theta_f, std::span<const double> theta_b);

/// out[t] = sum_p theta[p] * (t/n)^p.
[[nodiscard]] std::vector<double> polynomial_basis(std::span<const double> theta, std::size_t n);

/// out[t] = sum_k theta[2k] cos(2 pi (k+1) t / n) + theta[2k+1] sin(2 pi (k+1) t / n).
[[nodiscard]] std::vector<double> harmonic_basis(std::span<const double> theta, std::size_t n);

/// Interpolates forecast knots to H steps and backcast knots to L steps.
[[nodiscard]] std::pair<std::vector<double>, std::vector<double>> midas_basis(
    std::span<const double> theta_f, std::span<const double> theta_b, std::size_t horizon,
    std::size_t input_size);

/// Fixed basis matrix [coefficients x n] for the polynomial or harmonic kinds.
[[nodiscard]] Matrix basis_matrix(BasisKind kind, std::size_t coefficients, std::size_t n);

}  // namespace dmidas
