#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hgib/tensor.hpp"

namespace hgib {

// f builds a scalar loss from the given points (bound to a fresh tape per
// evaluation). Must be deterministic in its inputs.
using ScalarFn = std::function<Value(Tape&, const std::vector<Value>&)>;

struct GradCheckReport {
    double max_rel_error = 0.0;
    bool pass = false;
    int n_checked = 0;
    std::string worst;  // "point#p[i]" of the worst coordinate
};

// Central finite differences against reverse-mode gradients.
// Relative error per coordinate: |analytic - numeric| / max(1, |analytic|, |numeric|).
// Non-finite values on either side fail the check.
inline GradCheckReport gradient_check(const ScalarFn& f, const std::vector<Matrix>& points,
                                      double tolerance, double step = 1e-5) {
    GradCheckReport report;

    const auto eval = [&](const std::vector<Matrix>& pts) {
        Tape tape;
        std::vector<Value> vals;
        vals.reserve(pts.size());
        for (const Matrix& p : pts) vals.push_back(tape.constant(p));
        Value loss = f(tape, vals);
        if (loss.val().size() != 1) throw ShapeError("gradient_check: f must be scalar-valued");
        return loss.val().v[0];
    };

    std::vector<Matrix> analytic;
    {
        Tape tape;
        std::vector<Value> vals;
        vals.reserve(points.size());
        for (const Matrix& p : points) vals.push_back(tape.param(p));
        Value loss = f(tape, vals);
        if (loss.val().size() != 1) throw ShapeError("gradient_check: f must be scalar-valued");
        tape.backward(loss);
        for (const Value& v : vals) {
            Matrix g = v.grad();
            if (g.rows == 0) g = Matrix::zeros(v.rows(), v.cols());
            analytic.push_back(std::move(g));
        }
    }

    bool failed_nonfinite = false;
    std::vector<Matrix> work = points;
    for (std::size_t p = 0; p < points.size(); ++p) {
        for (std::size_t i = 0; i < points[p].v.size(); ++i) {
            const double x0 = points[p].v[i];
            work[p].v[i] = x0 + step;
            const double fp = eval(work);
            work[p].v[i] = x0 - step;
            const double fm = eval(work);
            work[p].v[i] = x0;
            const double numeric = (fp - fm) / (2.0 * step);
            const double a = analytic[p].v[i];
            ++report.n_checked;
            if (!std::isfinite(numeric) || !std::isfinite(a)) {
                failed_nonfinite = true;
                report.worst = "point#" + std::to_string(p) + "[" + std::to_string(i) + "] non-finite";
                continue;
            }
            const double denom = std::max(1.0, std::max(std::fabs(a), std::fabs(numeric)));
            const double rel = std::fabs(a - numeric) / denom;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst = "point#" + std::to_string(p) + "[" + std::to_string(i) + "]";
            }
        }
    }
    report.pass = !failed_nonfinite && report.max_rel_error < tolerance;
    return report;
}

}  // namespace hgib
