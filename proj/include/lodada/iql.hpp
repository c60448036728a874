#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lodada/adam.hpp"
#include "lodada/cvae.hpp"
#include "lodada/errors.hpp"
#include "lodada/mlp.hpp"
#include "lodada/rng.hpp"
#include "lodada/transition.hpp"

namespace lodada {

struct TrainConfig {
    double gamma = 0.99;
    double tau = 0.7;      // expectile
    double beta = 3.0;     // inverse temperature
    double eta = 5e-3;     // target update rate
    double lambda = 0.5;   // behavior-regularization weight
    double exp_adv_clip = 100.0;
    double lr = 3e-4;
    std::vector<int> hidden{256, 256};
    int batch_size = 256;  // split half source / half target
    int gradient_steps = 10000;
    int loss_log_every = 10;
    double log_std_min = -20.0;
    double log_std_max = 2.0;

    void validate() const {
        if (tau <= 0.0 || tau >= 1.0) throw ArgumentError("train: expectile tau outside (0,1)");
        if (gamma < 0.0 || gamma >= 1.0) throw ArgumentError("train: gamma outside [0,1)");
        if (eta <= 0.0 || eta > 1.0) throw ArgumentError("train: eta outside (0,1]");
        if (lambda < 0.0) throw ArgumentError("train: lambda must be >= 0");
        if (batch_size < 2) throw ArgumentError("train: batch size too small");
    }
};

// Asymmetric squared loss L2^tau(u) = |tau - 1(u < 0)| u^2.
inline double expectile_loss(double u, double tau) {
    double w = u < 0.0 ? 1.0 - tau : tau;
    return w * u * u;
}

// V, Q, target-Q and a diagonal-Gaussian actor (mean and log-std heads).
struct PolicyBundle {
    int d_s = 0, d_a = 0;
    Mlp v;         // s -> 1
    Mlp q;         // (s, a) -> 1
    Mlp q_target;  // tracked copy of q
    Mlp actor;     // s -> (mean, log_std) of dim 2 * d_a
    AdamState opt_v, opt_q, opt_actor;
    long step = 0;
};

inline PolicyBundle make_policy_bundle(int d_s, int d_a, const TrainConfig& cfg, std::uint64_t seed) {
    PolicyBundle b;
    b.d_s = d_s;
    b.d_a = d_a;
    Rng rng_v(substream(seed, "init-v"));
    Rng rng_q(substream(seed, "init-q"));
    Rng rng_pi(substream(seed, "init-actor"));
    b.v = make_mlp(d_s, cfg.hidden, 1, rng_v);
    b.q = make_mlp(d_s + d_a, cfg.hidden, 1, rng_q);
    b.q_target = b.q;
    b.actor = make_mlp(d_s, cfg.hidden, 2 * d_a, rng_pi, Activation::ReLU, Activation::Identity, 0.01);
    b.opt_v = make_adam(b.v, cfg.lr);
    b.opt_q = make_adam(b.q, cfg.lr);
    b.opt_actor = make_adam(b.actor, cfg.lr);
    return b;
}

// One training sample: a transition plus its critic weight (1 for target
// records, exp(-alpha d_hat) for admitted source records).
struct BatchItem {
    const Transition* t = nullptr;
    double weight = 1.0;
};
using Batch = std::vector<BatchItem>;

namespace detail {

inline double scalar_net(const Mlp& net, std::span<const double> x, MlpWorkspace& ws) {
    return forward(net, x, ws)[0];
}

inline std::vector<double> q_input(const Transition& t) {
    std::vector<double> x;
    x.reserve(t.s.size() + t.a.size());
    x.insert(x.end(), t.s.begin(), t.s.end());
    x.insert(x.end(), t.a.begin(), t.a.end());
    return x;
}

}  // namespace detail

// Expectile regression of V toward Q_target: one gradient step on
//   E[(L2^tau(Q_target(s,a) - V(s))]   over the combined batch.
inline double update_value(PolicyBundle& b, const Batch& batch, double tau) {
    if (batch.empty()) throw ArgumentError("update_value: empty batch");
    MlpWorkspace ws_v, ws_q;
    MlpGrads grads = make_grads(b.v);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (const BatchItem& item : batch) {
        std::vector<double> qin = detail::q_input(*item.t);
        double qt = detail::scalar_net(b.q_target, qin, ws_q);
        double v = detail::scalar_net(b.v, item.t->s, ws_v);
        double u = qt - v;
        double w = u < 0.0 ? 1.0 - tau : tau;
        loss += w * u * u;
        double dv = -2.0 * w * u * inv_n;
        backward(b.v, item.t->s, ws_v, std::span<const double>(&dv, 1), grads);
    }
    loss *= inv_n;
    if (!std::isfinite(loss)) throw TrainError("update_value: non-finite loss");
    adam_step(b.opt_v, b.v, grads);
    return loss;
}

// Weighted TD regression of Q toward y = r + gamma V(s'): the target-domain
// half is unweighted, the source half carries exp(-alpha d_hat) weights, and
// each half is averaged before the halves are summed. V is frozen here.
inline double update_q(PolicyBundle& b, const Batch& tar_batch, const Batch& src_batch, double gamma) {
    if (tar_batch.empty() && src_batch.empty()) throw ArgumentError("update_q: both batches empty");
    MlpWorkspace ws_q, ws_v;
    MlpGrads grads = make_grads(b.q);
    double loss = 0.0;
    auto accumulate_half = [&](const Batch& half) {
        if (half.empty()) return;
        const double inv_n = 1.0 / static_cast<double>(half.size());
        for (const BatchItem& item : half) {
            double y = item.t->r + gamma * detail::scalar_net(b.v, item.t->s_next, ws_v);
            if (!std::isfinite(y)) throw TrainError("update_q: non-finite TD target");
            std::vector<double> qin = detail::q_input(*item.t);
            double qv = detail::scalar_net(b.q, qin, ws_q);
            double diff = qv - y;
            loss += item.weight * diff * diff * inv_n;
            double dq = 2.0 * item.weight * diff * inv_n;
            backward(b.q, qin, ws_q, std::span<const double>(&dq, 1), grads);
        }
    };
    accumulate_half(tar_batch);
    accumulate_half(src_batch);
    if (!std::isfinite(loss)) throw TrainError("update_q: non-finite loss");
    adam_step(b.opt_q, b.q, grads);
    return loss;
}

// theta' <- eta theta + (1 - eta) theta', per parameter.
inline void polyak_update(PolicyBundle& b, double eta) {
    if (eta <= 0.0 || eta > 1.0) throw ArgumentError("polyak_update: eta outside (0,1]");
    for (std::size_t li = 0; li < b.q.layers.size(); ++li) {
        Layer& dst = b.q_target.layers[li];
        const Layer& src = b.q.layers[li];
        for (std::size_t i = 0; i < dst.w.size(); ++i) dst.w[i] = eta * src.w[i] + (1.0 - eta) * dst.w[i];
        for (std::size_t i = 0; i < dst.b.size(); ++i) dst.b[i] = eta * src.b[i] + (1.0 - eta) * dst.b[i];
    }
}

struct ActorDist {
    std::vector<double> mean;
    std::vector<double> log_std;   // clamped
    std::vector<double> raw_log_std;  // pre-clamp, for gradient masking
};

inline ActorDist actor_dist_from_output(std::span<const double> out, int d_a, const TrainConfig& cfg) {
    ActorDist d;
    d.mean.assign(out.begin(), out.begin() + d_a);
    d.raw_log_std.assign(out.begin() + d_a, out.begin() + 2 * d_a);
    d.log_std.resize(d_a);
    for (int i = 0; i < d_a; ++i) d.log_std[i] = std::clamp(d.raw_log_std[i], cfg.log_std_min, cfg.log_std_max);
    return d;
}

inline ActorDist actor_forward(const PolicyBundle& b, std::span<const double> s, const TrainConfig& cfg) {
    return actor_dist_from_output(forward(b.actor, s), b.d_a, cfg);
}

inline double gaussian_log_prob(const ActorDist& d, std::span<const double> a) {
    double lp = 0.0;
    for (std::size_t i = 0; i < d.mean.size(); ++i) {
        double std_i = std::exp(d.log_std[i]);
        double zi = (a[i] - d.mean[i]) / std_i;
        lp += -0.5 * zi * zi - d.log_std[i] - 0.5 * std::log(2.0 * M_PI);
    }
    return lp;
}

// Advantage-weighted behavior cloning with an optional CVAE behavior-density
// regularizer evaluated at the actor mean:
//   L = -E[ min(exp(beta A), clip) log pi(a|s) ] - lambda E[ log pi_b(mu(s)|s) ]
// A(s,a) = Q_target(s,a) - V(s); only the actor takes a gradient step.
inline double update_actor(PolicyBundle& b, const CvaeModel* cvae, const Batch& batch, const TrainConfig& cfg,
                           int m_samples, double sigma_b, Rng& reg_rng) {
    if (batch.empty()) throw ArgumentError("update_actor: empty batch");
    MlpWorkspace ws_actor, ws_q, ws_v;
    MlpGrads grads = make_grads(b.actor);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    const int d_a = b.d_a;
    std::vector<double> d_out(2 * d_a);
    double loss = 0.0;
    for (const BatchItem& item : batch) {
        const Transition& t = *item.t;
        std::vector<double> qin = detail::q_input(t);
        double adv = detail::scalar_net(b.q_target, qin, ws_q) - detail::scalar_net(b.v, t.s, ws_v);
        double w = std::min(std::exp(cfg.beta * adv), cfg.exp_adv_clip);

        const std::vector<double>& out = forward(b.actor, t.s, ws_actor);
        ActorDist dist = actor_dist_from_output(out, d_a, cfg);
        double lp = gaussian_log_prob(dist, t.a);
        loss += -w * lp;
        std::fill(d_out.begin(), d_out.end(), 0.0);
        for (int i = 0; i < d_a; ++i) {
            double std_i = std::exp(dist.log_std[i]);
            double diff = t.a[i] - dist.mean[i];
            // d(-w lp)/d mean and /d log_std; the clamp gates the log-std path.
            d_out[i] += -w * diff / (std_i * std_i) * inv_n;
            bool inside = dist.raw_log_std[i] > cfg.log_std_min && dist.raw_log_std[i] < cfg.log_std_max;
            if (inside) d_out[d_a + i] += -w * (diff * diff / (std_i * std_i) - 1.0) * inv_n;
        }
        if (cvae != nullptr && cfg.lambda > 0.0) {
            auto means = decode_behavior_means(*cvae, t.s, m_samples, reg_rng);
            double reg = mixture_log_density(means, dist.mean, sigma_b);
            std::vector<double> dreg = mixture_log_density_grad(means, dist.mean, sigma_b);
            loss += -cfg.lambda * reg;
            for (int i = 0; i < d_a; ++i) d_out[i] += -cfg.lambda * dreg[i] * inv_n;
        }
        backward(b.actor, t.s, ws_actor, d_out, grads);
    }
    loss *= inv_n;
    if (!std::isfinite(loss)) throw TrainError("update_actor: non-finite loss");
    adam_step(b.opt_actor, b.actor, grads);
    return loss;
}

}  // namespace lodada
