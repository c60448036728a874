#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lodada/errors.hpp"
#include "lodada/rng.hpp"

namespace lodada {

enum class Activation { ReLU, Tanh, Sigmoid, Identity };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::ReLU: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Identity: return "identity";
    }
    return "identity";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "relu") return Activation::ReLU;
    if (s == "tanh") return Activation::Tanh;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "identity") return Activation::Identity;
    throw ArgumentError("unknown activation '" + s + "'");
}

struct Layer {
    int in = 0;
    int out = 0;
    Activation act = Activation::Identity;
    std::vector<double> w;  // out x in, row-major
    std::vector<double> b;  // out
};

// Fully connected network with per-layer activations. Parameters are plain
// value types; copying an Mlp snapshots it.
struct Mlp {
    int in_dim = 0;
    int out_dim = 0;
    std::vector<Layer> layers;

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const Layer& l : layers) n += l.w.size() + l.b.size();
        return n;
    }
};

// Weight/bias init: uniform in +-1/sqrt(fan_in). final_scale shrinks the last
// layer (policy heads start near zero with final_scale = 0.01).
inline Mlp make_mlp(int in_dim, const std::vector<int>& hidden, int out_dim, Rng& rng,
                    Activation hidden_act = Activation::ReLU, Activation out_act = Activation::Identity,
                    double final_scale = 1.0) {
    if (in_dim < 0 || out_dim <= 0) throw ArgumentError("make_mlp: bad dimensions");
    Mlp net;
    net.in_dim = in_dim;
    net.out_dim = out_dim;
    int prev = in_dim;
    std::vector<int> widths = hidden;
    widths.push_back(out_dim);
    for (std::size_t li = 0; li < widths.size(); ++li) {
        Layer layer;
        layer.in = prev;
        layer.out = widths[li];
        layer.act = li + 1 == widths.size() ? out_act : hidden_act;
        double bound = prev > 0 ? 1.0 / std::sqrt(static_cast<double>(prev)) : 1.0;
        if (li + 1 == widths.size()) bound *= final_scale;
        layer.w.resize(static_cast<std::size_t>(layer.out) * layer.in);
        layer.b.resize(layer.out);
        for (double& v : layer.w) v = rng.uniform(-bound, bound);
        for (double& v : layer.b) v = rng.uniform(-bound, bound);
        net.layers.push_back(std::move(layer));
        prev = widths[li];
    }
    return net;
}

namespace detail {

inline double apply_act(Activation a, double x) {
    switch (a) {
        case Activation::ReLU: return x > 0.0 ? x : 0.0;
        case Activation::Tanh: return std::tanh(x);
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::Identity: return x;
    }
    return x;
}

// Derivative expressed through the post-activation value where possible.
inline double act_derivative(Activation a, double pre, double post) {
    switch (a) {
        case Activation::ReLU: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: return 1.0 - post * post;
        case Activation::Sigmoid: return post * (1.0 - post);
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

}  // namespace detail

// Per-layer pre/post activations from one forward pass; reused across calls
// to avoid reallocation in training loops.
struct MlpWorkspace {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;
};

inline const std::vector<double>& forward(const Mlp& net, std::span<const double> x, MlpWorkspace& ws) {
    if (static_cast<int>(x.size()) != net.in_dim)
        throw ArgumentError("forward: input size " + std::to_string(x.size()) + " != in_dim " +
                            std::to_string(net.in_dim));
    const std::size_t nl = net.layers.size();
    ws.pre.resize(nl);
    ws.post.resize(nl);
    const double* cur = x.data();
    for (std::size_t li = 0; li < nl; ++li) {
        const Layer& l = net.layers[li];
        ws.pre[li].resize(l.out);
        ws.post[li].resize(l.out);
        for (int o = 0; o < l.out; ++o) {
            const double* wrow = l.w.data() + static_cast<std::size_t>(o) * l.in;
            double acc = l.b[o];
            for (int i = 0; i < l.in; ++i) acc += wrow[i] * cur[i];
            ws.pre[li][o] = acc;
            ws.post[li][o] = detail::apply_act(l.act, acc);
        }
        cur = ws.post[li].data();
    }
    return ws.post.back();
}

inline std::vector<double> forward(const Mlp& net, std::span<const double> x) {
    MlpWorkspace ws;
    return forward(net, x, ws);
}

struct MlpGrads {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;

    void zero() {
        for (auto& v : w) std::fill(v.begin(), v.end(), 0.0);
        for (auto& v : b) std::fill(v.begin(), v.end(), 0.0);
    }

    void scale(double s) {
        for (auto& v : w)
            for (double& x : v) x *= s;
        for (auto& v : b)
            for (double& x : v) x *= s;
    }
};

inline MlpGrads make_grads(const Mlp& net) {
    MlpGrads g;
    g.w.reserve(net.layers.size());
    g.b.reserve(net.layers.size());
    for (const Layer& l : net.layers) {
        g.w.emplace_back(l.w.size(), 0.0);
        g.b.emplace_back(l.b.size(), 0.0);
    }
    return g;
}

// Reverse-mode gradients of a scalar loss given dL/dy. Accumulates into
// grads (callers zero between batches) and returns dL/dx for chaining.
// The workspace must hold the forward pass for this exact x.
inline std::vector<double> backward(const Mlp& net, std::span<const double> x, const MlpWorkspace& ws,
                                    std::span<const double> dy, MlpGrads& grads) {
    const std::size_t nl = net.layers.size();
    std::vector<double> delta(dy.begin(), dy.end());
    std::vector<double> delta_prev;
    for (std::size_t li = nl; li-- > 0;) {
        const Layer& l = net.layers[li];
        // delta currently holds dL/d(post[li]); fold in the activation.
        for (int o = 0; o < l.out; ++o) delta[o] *= detail::act_derivative(l.act, ws.pre[li][o], ws.post[li][o]);
        const double* input = li == 0 ? x.data() : ws.post[li - 1].data();
        double* gw = grads.w[li].data();
        for (int o = 0; o < l.out; ++o) {
            const double d = delta[o];
            double* grow = gw + static_cast<std::size_t>(o) * l.in;
            for (int i = 0; i < l.in; ++i) grow[i] += d * input[i];
            grads.b[li][o] += d;
        }
        delta_prev.assign(l.in, 0.0);
        for (int o = 0; o < l.out; ++o) {
            const double d = delta[o];
            const double* wrow = l.w.data() + static_cast<std::size_t>(o) * l.in;
            for (int i = 0; i < l.in; ++i) delta_prev[i] += d * wrow[i];
        }
        delta.swap(delta_prev);
    }
    return delta;
}

// Convenience form that recomputes the forward pass.
inline std::vector<double> backward(const Mlp& net, std::span<const double> x, std::span<const double> dy,
                                    MlpGrads& grads) {
    MlpWorkspace ws;
    forward(net, x, ws);
    return backward(net, x, ws, dy, grads);
}

}  // namespace lodada
