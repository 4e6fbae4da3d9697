#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bon/nn.hpp"

namespace bon {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    size_t checked = 0;

    bool ok(double tolerance) const { return max_rel_error < tolerance; }
};

/// Compares the analytic gradients of `params` against central finite
/// differences of `loss_fn`. `loss_fn(true)` must run forward + backward and
/// accumulate gradients; `loss_fn(false)` must run forward only and leave the
/// parameters' gradients alone. The loss must be a pure, deterministic
/// function of the parameter values.
///
/// Relative error per element: |analytic - numeric| / max(1, |analytic|, |numeric|).
template <class T, class F>
GradCheckReport grad_check(const std::vector<Param<T>*>& params, F&& loss_fn, double h = 1e-5) {
    GradCheckReport report;

    for (Param<T>* p : params) p->zero_grad();
    loss_fn(true);

    std::vector<std::vector<T>> analytic;
    analytic.reserve(params.size());
    for (Param<T>* p : params) {
        analytic.emplace_back(p->g.data(), p->g.data() + p->g.size());
    }

    for (size_t pi = 0; pi < params.size(); ++pi) {
        Param<T>* p = params[pi];
        for (size_t i = 0; i < p->v.size(); ++i) {
            const T original = p->v.data()[i];

            p->v.data()[i] = original + static_cast<T>(h);
            const double plus = loss_fn(false);
            p->v.data()[i] = original - static_cast<T>(h);
            const double minus = loss_fn(false);
            p->v.data()[i] = original;

            const double numeric = (plus - minus) / (2.0 * h);
            const double a = static_cast<double>(analytic[pi][i]);
            const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
            const double rel = std::abs(a - numeric) / denom;

            ++report.checked;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = p->name + "[" + std::to_string(i) + "]";
            }
        }
    }

    for (Param<T>* p : params) p->zero_grad();
    return report;
}

}  // namespace bon
