#include "dmidas/ops.hpp"

#include "dmidas/errors.hpp"
#include "dmidas/parameters.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dmidas {

namespace {

void require_same_shape(std::string_view op, const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                             b.shape_string());
    }
}

double sign(double v) noexcept { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Index of the first element of each pooling window's winner (max mode) or start.
std::size_t argmax_window(std::span<const double> x, std::size_t start, std::size_t kernel) {
    std::size_t best = start;
    for (std::size_t i = start + 1; i < start + kernel; ++i) {
        if (x[i] > x[best]) best = i;
    }
    return best;
}

}  // namespace

std::string_view to_string(PoolMode mode) noexcept {
    switch (mode) {
        case PoolMode::avg: return "avg";
        case PoolMode::max: return "max";
        case PoolMode::stride: return "stride";
    }
    return "avg";
}

PoolMode parse_pool_mode(std::string_view text) {
    if (text == "avg") return PoolMode::avg;
    if (text == "max") return PoolMode::max;
    if (text == "stride") return PoolMode::stride;
    throw ConfigError("unknown pooling mode '" + std::string(text) + "' (expected avg|max|stride)");
}

std::string_view to_string(LossKind kind) noexcept { return kind == LossKind::mae ? "mae" : "mse"; }

LossKind parse_loss_kind(std::string_view text) {
    if (text == "mae") return LossKind::mae;
    if (text == "mse") return LossKind::mse;
    throw ConfigError("unknown loss '" + std::string(text) + "' (expected mae|mse)");
}

std::size_t pooled_length(std::size_t length, const PoolSpec& spec) {
    if (spec.kernel == 0 || spec.stride == 0) {
        throw ConfigError("pooling kernel and stride must be >= 1");
    }
    if (spec.kernel > length) {
        throw ConfigError("pooling kernel " + std::to_string(spec.kernel) + " exceeds input length " +
                          std::to_string(length));
    }
    return (length - spec.kernel) / spec.stride + 1;
}

std::vector<double> pool1d(std::span<const double> x, const PoolSpec& spec) {
    const std::size_t n = pooled_length(x.size(), spec);
    std::vector<double> out(n);
    for (std::size_t w = 0; w < n; ++w) {
        const std::size_t start = w * spec.stride;
        switch (spec.mode) {
            case PoolMode::avg: {
                double s = 0.0;
                for (std::size_t i = start; i < start + spec.kernel; ++i) s += x[i];
                out[w] = s / static_cast<double>(spec.kernel);
                break;
            }
            case PoolMode::max: out[w] = x[argmax_window(x, start, spec.kernel)]; break;
            case PoolMode::stride: out[w] = x[start]; break;
        }
    }
    return out;
}

std::vector<InterpStep> interp_plan(std::size_t knots, std::size_t horizon) {
    if (knots == 0) throw ConfigError("interpolation needs at least one knot");
    if (knots > horizon) {
        throw ConfigError("knot count " + std::to_string(knots) + " exceeds horizon " +
                          std::to_string(horizon));
    }
    std::vector<InterpStep> plan(horizon);
    const double h = static_cast<double>(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
        // Knot k sits at k*H/K; k1 = floor(t*K/H) is the last knot at or before t.
        const std::size_t scaled = t * knots;
        const std::size_t k1 = scaled / horizon;
        const std::size_t offset = scaled - k1 * horizon;  // (t - t_k1) * K, exact
        InterpStep& step = plan[t];
        if (knots == 1) {
            step = {0, 0, 0, 0.0};
        } else if (offset == 0) {
            step = {k1, k1, k1, 0.0};
        } else if (k1 + 1 < knots) {
            step = {k1, k1 + 1, k1, static_cast<double>(offset) / h};
        } else {
            step = {knots - 1, knots - 1, knots - 2, static_cast<double>(offset) / h};
        }
    }
    return plan;
}

std::vector<double> interp_upsample(std::span<const double> theta, std::size_t horizon) {
    const auto plan = interp_plan(theta.size(), horizon);
    std::vector<double> out(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
        const InterpStep& s = plan[t];
        out[t] = s.weight == 0.0 ? theta[s.anchor]
                                 : theta[s.anchor] + (theta[s.plus] - theta[s.minus]) * s.weight;
    }
    return out;
}

double loss(std::span<const double> y, std::span<const double> yhat, LossKind kind) {
    if (y.size() != yhat.size()) {
        throw DimensionError("loss: length mismatch " + std::to_string(y.size()) + " vs " +
                             std::to_string(yhat.size()));
    }
    if (y.empty()) throw DimensionError("loss: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - yhat[i];
        s += kind == LossKind::mae ? std::abs(e) : e * e;
    }
    return s / static_cast<double>(y.size());
}

double l1_penalty(const ParameterStore& params, double lambda) {
    if (!(lambda >= 0.0)) throw ConfigError("l1 lambda must be non-negative");
    if (lambda == 0.0) return 0.0;
    double s = 0.0;
    for (const auto& e : params.entries()) {
        if (e.role != ParamRole::weight) continue;
        for (double v : e.value.data()) s += std::abs(v);
    }
    return lambda * s;
}

// ---------------------------------------------------------------------------

Var affine(Tape& tape, Var x, Var w, Var b) {
    const Matrix& xv = tape.value(x);
    const Matrix& wv = tape.value(w);
    const Matrix& bv = tape.value(b);
    if (xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols()) {
        throw DimensionError("affine: x" + xv.shape_string() + " W" + wv.shape_string() + " b" +
                             bv.shape_string());
    }
    Matrix out(xv.rows(), wv.cols());
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < out.cols(); ++c) row[c] = bv(0, c);
    }
    gemm_accumulate(xv, wv, out);
    return tape.record("affine", std::move(out), {x, w, b}, [x, w, b](Tape& t, Var out) {
        const Matrix& g = *t.incoming(out);
        if (t.requires_grad(w)) gemm_tn_accumulate(t.value(x), g, t.grad_slot(w));
        if (t.requires_grad(b)) {
            Matrix& gb = t.grad_slot(b);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
            }
        }
        if (t.requires_grad(x)) gemm_nt_accumulate(g, t.value(w), t.grad_slot(x));
    });
}

Var matmul(Tape& tape, Var a, Var b) {
    const Matrix& av = tape.value(a);
    const Matrix& bv = tape.value(b);
    if (av.cols() != bv.rows()) {
        throw DimensionError("matmul: " + av.shape_string() + " x " + bv.shape_string());
    }
    Matrix out(av.rows(), bv.cols());
    gemm_accumulate(av, bv, out);
    return tape.record("matmul", std::move(out), {a, b}, [a, b](Tape& t, Var out) {
        const Matrix& g = *t.incoming(out);
        if (t.requires_grad(b)) gemm_tn_accumulate(t.value(a), g, t.grad_slot(b));
        if (t.requires_grad(a)) gemm_nt_accumulate(g, t.value(b), t.grad_slot(a));
    });
}

Var relu(Tape& tape, Var x) {
    Matrix out = tape.value(x);
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    return tape.record("relu", std::move(out), {x}, [x](Tape& t, Var out) {
        const Matrix& g = *t.incoming(out);
        const auto xv = t.value(x).data();
        auto gx = t.grad_slot(x).data();
        const auto gv = g.data();
        for (std::size_t i = 0; i < gv.size(); ++i) {
            if (xv[i] > 0.0) gx[i] += gv[i];
        }
    });
}

Var add(Tape& tape, Var a, Var b) {
    require_same_shape("add", tape.value(a), tape.value(b));
    Matrix out = tape.value(a);
    out.add_in_place(tape.value(b));
    return tape.record("add", std::move(out), {a, b}, [a, b](Tape& t, Var out) {
        const Matrix& g = *t.incoming(out);
        if (t.requires_grad(a)) t.grad_slot(a).add_in_place(g);
        if (t.requires_grad(b)) t.grad_slot(b).add_in_place(g);
    });
}

Var sub(Tape& tape, Var a, Var b) {
    require_same_shape("sub", tape.value(a), tape.value(b));
    Matrix out = tape.value(a);
    {
        auto o = out.data();
        const auto bv = tape.value(b).data();
        for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
    }
    return tape.record("sub", std::move(out), {a, b}, [a, b](Tape& t, Var out) {
        const Matrix& g = *t.incoming(out);
        if (t.requires_grad(a)) t.grad_slot(a).add_in_place(g);
        if (t.requires_grad(b)) {
            auto gb = t.grad_slot(b).data();
            const auto gv = g.data();
            for (std::size_t i = 0; i < gv.size(); ++i) gb[i] -= gv[i];
        }
    });
}

Var sum(Tape& tape, Var x) {
    double s = 0.0;
    for (double v : tape.value(x).data()) s += v;
    return tape.record("sum", Matrix(1, 1, s), {x}, [x](Tape& t, Var out) {
        const double g = (*t.incoming(out))(0, 0);
        for (double& v : t.grad_slot(x).data()) v += g;
    });
}

Var pool1d(Tape& tape, Var x, const PoolSpec& spec) {
    const Matrix& xv = tape.value(x);
    const std::size_t n = pooled_length(xv.cols(), spec);
    Matrix out(xv.rows(), n);
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        const auto pooled = pool1d(xv.row(r), spec);
        std::copy(pooled.begin(), pooled.end(), out.row(r).begin());
    }
    return tape.record("pool1d", std::move(out), {x}, [x, spec, n](Tape& t, Var out) {
        const Matrix& g = *t.incoming(out);
        const Matrix& xv = t.value(x);
        Matrix& gx = t.grad_slot(x);
        const double inv = 1.0 / static_cast<double>(spec.kernel);
        for (std::size_t r = 0; r < g.rows(); ++r) {
            const auto xrow = xv.row(r);
            for (std::size_t w = 0; w < n; ++w) {
                const std::size_t start = w * spec.stride;
                const double gw = g(r, w);
                switch (spec.mode) {
                    case PoolMode::avg:
                        for (std::size_t i = start; i < start + spec.kernel; ++i) gx(r, i) += gw * inv;
                        break;
                    case PoolMode::max: gx(r, argmax_window(xrow, start, spec.kernel)) += gw; break;
                    case PoolMode::stride: gx(r, start) += gw; break;
                }
            }
        }
    });
}

Var interp_upsample(Tape& tape, Var theta, std::size_t horizon) {
    const Matrix& tv = tape.value(theta);
    auto plan = interp_plan(tv.cols(), horizon);
    Matrix out(tv.rows(), horizon);
    for (std::size_t r = 0; r < tv.rows(); ++r) {
        const auto th = tv.row(r);
        auto o = out.row(r);
        for (std::size_t t = 0; t < horizon; ++t) {
            const InterpStep& s = plan[t];
            o[t] = s.weight == 0.0 ? th[s.anchor] : th[s.anchor] + (th[s.plus] - th[s.minus]) * s.weight;
        }
    }
    return tape.record("interp_upsample", std::move(out), {theta},
                       [theta, plan = std::move(plan)](Tape& t, Var out) {
                           const Matrix& g = *t.incoming(out);
                           Matrix& gt = t.grad_slot(theta);
                           for (std::size_t r = 0; r < g.rows(); ++r) {
                               for (std::size_t i = 0; i < plan.size(); ++i) {
                                   const InterpStep& s = plan[i];
                                   const double gv = g(r, i);
                                   gt(r, s.anchor) += gv;
                                   if (s.weight != 0.0) {
                                       gt(r, s.plus) += gv * s.weight;
                                       gt(r, s.minus) -= gv * s.weight;
                                   }
                               }
                           }
                       });
}

Var loss(Tape& tape, Var y, Var yhat, LossKind kind) {
    const Matrix& yv = tape.value(y);
    const Matrix& hv = tape.value(yhat);
    require_same_shape("loss", yv, hv);
    const double value = loss(yv.data(), hv.data(), kind);
    return tape.record("loss", Matrix(1, 1, value), {y, yhat}, [y, yhat, kind](Tape& t, Var out) {
        const double g = (*t.incoming(out))(0, 0);
        const auto yv = t.value(y).data();
        const auto hv = t.value(yhat).data();
        const double scale = g / static_cast<double>(yv.size());
        // d/dyhat; d/dy is its negation.
        auto apply = [&](Var target, double direction) {
            auto gt = t.grad_slot(target).data();
            for (std::size_t i = 0; i < yv.size(); ++i) {
                const double e = hv[i] - yv[i];
                const double d = kind == LossKind::mae ? sign(e) : 2.0 * e;
                gt[i] += direction * scale * d;
            }
        };
        if (t.requires_grad(yhat)) apply(yhat, 1.0);
        if (t.requires_grad(y)) apply(y, -1.0);
    });
}

Var l1_penalty(Tape& tape, const ParameterStore& params, double lambda) {
    const double value = l1_penalty(params, lambda);
    std::vector<Var> weights;
    if (lambda > 0.0) {
        for (const auto& e : params.entries()) {
            if (e.role == ParamRole::weight) weights.push_back(tape.parameter(params, e.name));
        }
    }
    // Inputs are tracked through the capture; a constant anchor records the op.
    const Var anchor = weights.empty() ? tape.constant(Matrix(1, 1)) : weights.front();
    return tape.record("l1_penalty", Matrix(1, 1, value), {anchor},
                       [weights = std::move(weights), lambda](Tape& t, Var out) {
                           const double g = (*t.incoming(out))(0, 0) * lambda;
                           for (Var w : weights) {
                               const auto wv = t.value(w).data();
                               auto gw = t.grad_slot(w).data();
                               for (std::size_t i = 0; i < wv.size(); ++i) gw[i] += g * sign(wv[i]);
                           }
                       });
}

}  // namespace dmidas
