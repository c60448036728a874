#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lodada/errors.hpp"
#include "lodada/mlp.hpp"

namespace lodada {

// Adam with bias-corrected moments. Optional global-norm gradient clipping
// (disabled by default).
struct AdamState {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_global_norm = 0.0;  // <= 0 disables
    long step = 0;
    std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
};

inline AdamState make_adam(const Mlp& net, double lr = 3e-4) {
    AdamState st;
    st.lr = lr;
    for (const Layer& l : net.layers) {
        st.m_w.emplace_back(l.w.size(), 0.0);
        st.v_w.emplace_back(l.w.size(), 0.0);
        st.m_b.emplace_back(l.b.size(), 0.0);
        st.v_b.emplace_back(l.b.size(), 0.0);
    }
    return st;
}

namespace detail {

inline void adam_update_span(std::vector<double>& params, const std::vector<double>& grad, std::vector<double>& m,
                             std::vector<double>& v, const AdamState& st, double corr1, double corr2,
                             double grad_scale) {
    const double b1 = st.beta1, b2 = st.beta2;
    for (std::size_t i = 0; i < params.size(); ++i) {
        double g = grad[i] * grad_scale;
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        double mhat = m[i] / corr1;
        double vhat = v[i] / corr2;
        params[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
}

}  // namespace detail

inline void adam_step(AdamState& st, Mlp& net, const MlpGrads& grads) {
    double norm_sq = 0.0;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        for (std::size_t i = 0; i < grads.w[li].size(); ++i) {
            double g = grads.w[li][i];
            if (!std::isfinite(g))
                throw TrainError("non-finite gradient in layer " + std::to_string(li) + " weights");
            norm_sq += g * g;
        }
        for (std::size_t i = 0; i < grads.b[li].size(); ++i) {
            double g = grads.b[li][i];
            if (!std::isfinite(g)) throw TrainError("non-finite gradient in layer " + std::to_string(li) + " bias");
            norm_sq += g * g;
        }
    }
    double grad_scale = 1.0;
    if (st.clip_global_norm > 0.0) {
        double norm = std::sqrt(norm_sq);
        if (norm > st.clip_global_norm) grad_scale = st.clip_global_norm / norm;
    }
    ++st.step;
    const double corr1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double corr2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        detail::adam_update_span(net.layers[li].w, grads.w[li], st.m_w[li], st.v_w[li], st, corr1, corr2, grad_scale);
        detail::adam_update_span(net.layers[li].b, grads.b[li], st.m_b[li], st.v_b[li], st, corr1, corr2, grad_scale);
    }
}

}  // namespace lodada
