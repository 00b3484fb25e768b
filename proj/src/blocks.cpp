#include "dmidas/blocks.hpp"

#include "dmidas/errors.hpp"
#include "dmidas/parameters.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dmidas {

std::string_view to_string(BasisKind kind) noexcept {
    switch (kind) {
        case BasisKind::generic: return "generic";
        case BasisKind::polynomial: return "polynomial";
        case BasisKind::harmonic: return "harmonic";
        case BasisKind::midas: return "midas";
    }
    return "generic";
}

BasisKind parse_basis_kind(std::string_view text) {
    if (text == "generic") return BasisKind::generic;
    if (text == "polynomial") return BasisKind::polynomial;
    if (text == "harmonic") return BasisKind::harmonic;
    if (text == "midas") return BasisKind::midas;
    throw ConfigError("unknown basis '" + std::string(text) + "'");
}

std::size_t knot_count(double ratio, std::size_t n) {
    const double x = ratio * static_cast<double>(n);
    double k = std::ceil(x);
    if (k - x > 1.0 - 1e-9) k -= 1.0;
    if (k < 1.0) k = 1.0;
    return std::min(static_cast<std::size_t>(k), n);
}

void validate(const BlockConfig& config) {
    if (config.input_size < 1 || config.horizon < 1) {
        throw ConfigError("block input size and horizon must be >= 1");
    }
    if (config.mlp_widths.empty()) throw ConfigError("block needs at least one hidden layer");
    for (std::size_t w : config.mlp_widths) {
        if (w == 0) throw ConfigError("hidden layer width must be >= 1");
    }
    switch (config.basis) {
        case BasisKind::midas:
            if (!(config.expressivity_ratio > 0.0 && config.expressivity_ratio <= 1.0)) {
                throw ConfigError("expressivity ratio must lie in (0, 1], got " +
                                  std::to_string(config.expressivity_ratio));
            }
            (void)pooled_length(config.input_size, config.pooling);
            break;
        case BasisKind::harmonic:
            if (config.n_harmonics < 1) throw ConfigError("harmonic block needs n_harmonics >= 1");
            break;
        default: break;
    }
}

std::size_t forecast_coefficients(const BlockConfig& config) {
    switch (config.basis) {
        case BasisKind::generic: return config.horizon;
        case BasisKind::polynomial: return config.poly_degree + 1;
        case BasisKind::harmonic: return 2 * config.n_harmonics;
        case BasisKind::midas: return knot_count(config.expressivity_ratio, config.horizon);
    }
    return config.horizon;
}

std::size_t backcast_coefficients(const BlockConfig& config) {
    switch (config.basis) {
        case BasisKind::generic: return config.input_size;
        case BasisKind::polynomial: return config.poly_degree + 1;
        case BasisKind::harmonic: return 2 * config.n_harmonics;
        case BasisKind::midas: return knot_count(config.expressivity_ratio, config.input_size);
    }
    return config.input_size;
}

std::size_t mlp_input_size(const BlockConfig& config) {
    if (config.basis != BasisKind::midas) return config.input_size;
    return pooled_length(config.input_size, config.pooling);
}

namespace {

void register_affine(ParameterStore& params, const std::string& name, const std::string& group,
                     std::size_t in, std::size_t out) {
    params.add(name + ".weight", group, ParamRole::weight, in, out);
    params.add(name + ".bias", group, ParamRole::bias, 1, out);
    params.set_fan_in(name + ".weight", in);
    params.set_fan_in(name + ".bias", in);
}

Var bound_affine(Tape& tape, const ParameterStore& params, const std::string& name, Var x) {
    return affine(tape, x, tape.parameter(params, name + ".weight"), tape.parameter(params, name + ".bias"));
}

bool is_identity_pool(const PoolSpec& spec) { return spec.kernel == 1 && spec.stride == 1; }

Var expand(Tape& tape, const BlockConfig& config, Var theta, std::size_t n) {
    switch (config.basis) {
        case BasisKind::generic: return theta;
        case BasisKind::midas: return interp_upsample(tape, theta, n);
        case BasisKind::polynomial:
        case BasisKind::harmonic: {
            const std::size_t p = tape.value(theta).cols();
            return matmul(tape, theta, tape.constant(basis_matrix(config.basis, p, n)));
        }
    }
    return theta;
}

std::vector<double> first_row(const Matrix& m) {
    const auto r = m.row(0);
    return {r.begin(), r.end()};
}

}  // namespace

void register_block_parameters(ParameterStore& params, const BlockConfig& config,
                               const std::string& prefix, const std::string& group) {
    validate(config);
    std::size_t in = mlp_input_size(config);
    for (std::size_t i = 0; i < config.mlp_widths.size(); ++i) {
        register_affine(params, prefix + ".fc" + std::to_string(i), group, in, config.mlp_widths[i]);
        in = config.mlp_widths[i];
    }
    register_affine(params, prefix + ".theta_f", group, in, forecast_coefficients(config));
    register_affine(params, prefix + ".theta_b", group, in, backcast_coefficients(config));
}

BlockVars block_forward(Tape& tape, const BlockConfig& config, const ParameterStore& params,
                        const std::string& prefix, Var y_in) {
    const Matrix& x = tape.value(y_in);
    if (x.cols() != config.input_size) {
        throw DimensionError("block '" + prefix + "' expects input width " +
                             std::to_string(config.input_size) + ", got " + x.shape_string());
    }
    Var h = y_in;
    if (config.basis == BasisKind::midas && !is_identity_pool(config.pooling)) {
        h = pool1d(tape, h, config.pooling);
    }
    for (std::size_t i = 0; i < config.mlp_widths.size(); ++i) {
        h = relu(tape, bound_affine(tape, params, prefix + ".fc" + std::to_string(i), h));
    }
    BlockVars out;
    out.hidden = h;
    out.theta_f = bound_affine(tape, params, prefix + ".theta_f", h);
    out.theta_b = bound_affine(tape, params, prefix + ".theta_b", h);
    out.forecast = expand(tape, config, out.theta_f, config.horizon);
    out.backcast = expand(tape, config, out.theta_b, config.input_size);
    return out;
}

BlockOutput block_forward(const BlockConfig& config, const ParameterStore& params,
                          std::span<const double> y_in, const std::string& prefix) {
    Tape tape;
    const BlockVars v = block_forward(tape, config, params, prefix, tape.constant(Matrix::row_vector(y_in)));
    return BlockOutput{first_row(tape.value(v.backcast)), first_row(tape.value(v.forecast)),
                       first_row(tape.value(v.theta_f)), first_row(tape.value(v.theta_b)),
                       first_row(tape.value(v.hidden))};
}

std::pair<std::vector<double>, std::vector<double>> generic_basis(std::span<const double> theta_f,
                                                                  std::span<const double> theta_b) {
    return {{theta_f.begin(), theta_f.end()}, {theta_b.begin(), theta_b.end()}};
}

Matrix basis_matrix(BasisKind kind, std::size_t coefficients, std::size_t n) {
    Matrix v(coefficients, n);
    const double dn = static_cast<double>(n);
    if (kind == BasisKind::polynomial) {
        for (std::size_t p = 0; p < coefficients; ++p) {
            for (std::size_t t = 0; t < n; ++t) {
                v(p, t) = std::pow(static_cast<double>(t) / dn, static_cast<double>(p));
            }
        }
    } else if (kind == BasisKind::harmonic) {
        if (coefficients % 2 != 0) throw ConfigError("harmonic basis needs an even coefficient count");
        for (std::size_t k = 0; k < coefficients / 2; ++k) {
            const double freq = 2.0 * std::numbers::pi * static_cast<double>(k + 1);
            for (std::size_t t = 0; t < n; ++t) {
                const double angle = freq * static_cast<double>(t) / dn;
                v(2 * k, t) = std::cos(angle);
                v(2 * k + 1, t) = std::sin(angle);
            }
        }
    } else {
        throw ConfigError("basis_matrix is defined for polynomial and harmonic kinds only");
    }
    return v;
}

namespace {

std::vector<double> project(std::span<const double> theta, const Matrix& basis) {
    std::vector<double> out(basis.cols(), 0.0);
    for (std::size_t p = 0; p < theta.size(); ++p) {
        for (std::size_t t = 0; t < basis.cols(); ++t) out[t] += theta[p] * basis(p, t);
    }
    return out;
}

}  // namespace

std::vector<double> polynomial_basis(std::span<const double> theta, std::size_t n) {
    if (theta.empty()) throw ConfigError("polynomial basis needs degree >= 0");
    return project(theta, basis_matrix(BasisKind::polynomial, theta.size(), n));
}

std::vector<double> harmonic_basis(std::span<const double> theta, std::size_t n) {
    if (theta.empty()) throw ConfigError("harmonic basis needs n_harmonics >= 1");
    return project(theta, basis_matrix(BasisKind::harmonic, theta.size(), n));
}

std::pair<std::vector<double>, std::vector<double>> midas_basis(std::span<const double> theta_f,
                                                                std::span<const double> theta_b,
                                                                std::size_t horizon,
                                                                std::size_t input_size) {
    return {interp_upsample(theta_f, horizon), interp_upsample(theta_b, input_size)};
}

}  // namespace dmidas
