#include "dmidas/grad_check.hpp"

#include "dmidas/errors.hpp"

#include <algorithm>
#include <cmath>

namespace dmidas {

namespace {

double evaluate(const TracedScalarFn& f, const std::vector<Matrix>& points) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(points.size());
    for (const auto& p : points) leaves.push_back(tape.constant(p));
    const Matrix& out = tape.value(f(tape, leaves));
    if (out.size() != 1) throw DimensionError("grad_check: function must return a scalar");
    return out(0, 0);
}

}  // namespace

GradCheckReport grad_check(const TracedScalarFn& f, const std::vector<Matrix>& points, double eps,
                           double tol) {
    Tape tape;
    std::vector<Var> leaves;
    for (const auto& p : points) leaves.push_back(tape.variable(p));
    tape.backward(f(tape, leaves));

    GradCheckReport report;
    std::vector<Matrix> probe = points;
    for (std::size_t input = 0; input < points.size(); ++input) {
        const Matrix analytic = tape.grad(leaves[input]);
        for (std::size_t i = 0; i < points[input].size(); ++i) {
            const double original = points[input].data()[i];
            probe[input].data()[i] = original + eps;
            const double up = evaluate(f, probe);
            probe[input].data()[i] = original - eps;
            const double down = evaluate(f, probe);
            probe[input].data()[i] = original;

            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic.data()[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
            const double rel = std::abs(a - numeric) / denom;
            ++report.coordinates;
            if (rel > report.max_relative_error || !std::isfinite(rel)) {
                report.max_relative_error = rel;
                report.worst_input = input;
                report.worst_index = i;
            }
        }
    }
    report.passed = std::isfinite(report.max_relative_error) && report.max_relative_error < tol;
    return report;
}

}  // namespace dmidas
