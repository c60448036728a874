#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "lodada/mlp.hpp"

namespace lodada {

struct GradCheckReport {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t checked = 0;
    bool pass = false;
};

// Scalar loss of the network output together with dL/dy.
using ScalarLoss = std::function<std::pair<double, std::vector<double>>(std::span<const double>)>;

// Compares backward() against central finite differences of loss(forward(x))
// with respect to every parameter. Relative error uses a floored denominator
// so near-zero gradients do not dominate.
inline GradCheckReport grad_check(Mlp net, std::span<const double> x, const ScalarLoss& loss, double h = 1e-5,
                                  double tol = 1e-4) {
    if (h <= 0.0) throw ArgumentError("grad_check: h must be positive");
    MlpWorkspace ws;
    const std::vector<double>& y = forward(net, x, ws);
    auto [l0, dy] = loss(y);
    (void)l0;
    MlpGrads analytic = make_grads(net);
    backward(net, x, ws, dy, analytic);

    GradCheckReport report;
    auto eval = [&]() {
        MlpWorkspace w2;
        return loss(forward(net, x, w2)).first;
    };
    auto check_entry = [&](double& param, double grad) {
        const double saved = param;
        param = saved + h;
        double lp = eval();
        param = saved - h;
        double lm = eval();
        param = saved;
        double fd = (lp - lm) / (2.0 * h);
        double abs_err = std::fabs(fd - grad);
        double rel_err = abs_err / std::max({std::fabs(fd), std::fabs(grad), 1e-6});
        report.max_abs_error = std::max(report.max_abs_error, abs_err);
        report.max_rel_error = std::max(report.max_rel_error, rel_err);
        ++report.checked;
    };
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        for (std::size_t i = 0; i < net.layers[li].w.size(); ++i) check_entry(net.layers[li].w[i], analytic.w[li][i]);
        for (std::size_t i = 0; i < net.layers[li].b.size(); ++i) check_entry(net.layers[li].b[i], analytic.b[li][i]);
    }
    report.pass = report.max_rel_error <= tol;
    return report;
}

}  // namespace lodada
