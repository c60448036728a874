#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lodada/adam.hpp"
#include "lodada/errors.hpp"
#include "lodada/mlp.hpp"
#include "lodada/rng.hpp"
#include "lodada/stats.hpp"
#include "lodada/transition.hpp"

namespace lodada {

struct CvaeConfig {
    std::vector<int> hidden{64, 64};
    int latent_dim = 0;  // 0: defaults to 2 * d_a
    double lr = 1e-3;
    int steps = 10000;
    int batch = 128;
    int m_samples = 10;                    // latents decoded per behavior-density query
    double sigma_b = 0.31622776601683794;  // sqrt(0.1)
};

// Conditional VAE over target-domain actions: encoder (s, a) -> latent
// Gaussian, decoder (s, z) -> action. Used as the behavior-policy density
// model regularizing the actor.
struct CvaeModel {
    int d_s = 0, d_a = 0, latent_dim = 0;
    Mlp encoder;  // (d_s + d_a) -> 2 * latent (mean, log-variance)
    Mlp decoder;  // (d_s + latent) -> d_a
    std::vector<double> loss_trace;
};

struct CvaeScratch {
    MlpWorkspace ws_enc, ws_dec;
    std::vector<double> enc_in, dec_in, d_dec_out, d_enc_out;
};

// Loss and parameter gradients for one (s, a) sample with a fixed latent
// noise draw eps:
//   ||a - dec(s, mu + e^{logvar/2} eps)||^2 + KL(N(mu, e^logvar) || N(0, I))
// Gradients are scaled by grad_scale and accumulated (the training loop
// passes 1/batch). Returns the unscaled loss.
inline double cvae_sample_loss_grads(const CvaeModel& model, std::span<const double> s, std::span<const double> a,
                                     std::span<const double> eps, double grad_scale, CvaeScratch& scratch,
                                     MlpGrads& g_enc, MlpGrads& g_dec) {
    const int lat = model.latent_dim;
    scratch.enc_in.resize(model.d_s + model.d_a);
    scratch.dec_in.resize(model.d_s + lat);
    scratch.d_dec_out.resize(model.d_a);
    scratch.d_enc_out.resize(2 * lat);
    std::copy(s.begin(), s.end(), scratch.enc_in.begin());
    std::copy(a.begin(), a.end(), scratch.enc_in.begin() + model.d_s);
    const std::vector<double>& enc_out = forward(model.encoder, scratch.enc_in, scratch.ws_enc);

    double loss = 0.0;
    std::copy(s.begin(), s.end(), scratch.dec_in.begin());
    for (int i = 0; i < lat; ++i) {
        double mu = enc_out[i];
        double logvar = enc_out[lat + i];
        scratch.dec_in[model.d_s + i] = mu + std::exp(0.5 * logvar) * eps[i];
        loss += 0.5 * (mu * mu + std::exp(logvar) - 1.0 - logvar);  // closed-form latent KL
    }
    const std::vector<double>& recon = forward(model.decoder, scratch.dec_in, scratch.ws_dec);
    for (int i = 0; i < model.d_a; ++i) {
        double diff = recon[i] - a[i];
        loss += diff * diff;
        scratch.d_dec_out[i] = 2.0 * diff * grad_scale;
    }

    std::vector<double> d_dec_in = backward(model.decoder, scratch.dec_in, scratch.ws_dec, scratch.d_dec_out, g_dec);
    for (int i = 0; i < lat; ++i) {
        double mu = enc_out[i];
        double logvar = enc_out[lat + i];
        double dz = d_dec_in[model.d_s + i];
        // Reparameterization chain plus the closed-form KL gradient.
        scratch.d_enc_out[i] = dz + mu * grad_scale;
        scratch.d_enc_out[lat + i] =
            dz * 0.5 * std::exp(0.5 * logvar) * eps[i] + 0.5 * (std::exp(logvar) - 1.0) * grad_scale;
    }
    backward(model.encoder, scratch.enc_in, scratch.ws_enc, scratch.d_enc_out, g_enc);
    return loss;
}

// Minimizes the reconstruction + latent-KL objective with mini-batch Adam on
// target data only. Deterministic per seed.
inline CvaeModel train_cvae(const Dataset& target, const CvaeConfig& cfg, std::uint64_t seed) {
    if (target.records.empty()) throw ArgumentError("train_cvae: empty target dataset");
    CvaeModel model;
    model.d_s = target.d_s;
    model.d_a = target.d_a;
    model.latent_dim = cfg.latent_dim > 0 ? cfg.latent_dim : 2 * target.d_a;

    Rng init_rng(substream(seed, "cvae-init"));
    model.encoder = make_mlp(model.d_s + model.d_a, cfg.hidden, 2 * model.latent_dim, init_rng);
    model.decoder = make_mlp(model.d_s + model.latent_dim, cfg.hidden, model.d_a, init_rng);
    AdamState opt_enc = make_adam(model.encoder, cfg.lr);
    AdamState opt_dec = make_adam(model.decoder, cfg.lr);
    Rng rng(substream(seed, "cvae-train"));

    CvaeScratch scratch;
    MlpGrads g_enc = make_grads(model.encoder);
    MlpGrads g_dec = make_grads(model.decoder);
    std::vector<double> eps(model.latent_dim);
    const double inv_batch = 1.0 / static_cast<double>(cfg.batch);
    for (int step = 0; step < cfg.steps; ++step) {
        g_enc.zero();
        g_dec.zero();
        double batch_loss = 0.0;
        for (int k = 0; k < cfg.batch; ++k) {
            const Transition& t = target.records[rng.index(target.records.size())];
            for (double& e : eps) e = rng.normal();
            batch_loss += cvae_sample_loss_grads(model, t.s, t.a, eps, inv_batch, scratch, g_enc, g_dec);
        }
        adam_step(opt_enc, model.encoder, g_enc);
        adam_step(opt_dec, model.decoder, g_dec);
        model.loss_trace.push_back(batch_loss * inv_batch);
    }
    return model;
}

inline std::vector<double> cvae_decode(const CvaeModel& model, std::span<const double> s, std::span<const double> z) {
    std::vector<double> dec_in(model.d_s + model.latent_dim);
    std::copy(s.begin(), s.end(), dec_in.begin());
    std::copy(z.begin(), z.end(), dec_in.begin() + model.d_s);
    return forward(model.decoder, dec_in);
}

// Decoded means of M fresh latent draws; the Gaussian mixture the behavior
// density is evaluated against.
inline std::vector<std::vector<double>> decode_behavior_means(const CvaeModel& model, std::span<const double> s,
                                                              int m_samples, Rng& rng) {
    if (m_samples < 1) throw ArgumentError("decode_behavior_means: M must be >= 1");
    std::vector<std::vector<double>> means;
    means.reserve(m_samples);
    std::vector<double> z(model.latent_dim);
    for (int m = 0; m < m_samples; ++m) {
        for (double& v : z) v = rng.normal();
        means.push_back(cvae_decode(model, s, z));
    }
    return means;
}

// log sum_i N(a_query; mu_i, sigma_b^2 I) via a stable log-sum-exp. Note the
// sum is not averaged over components.
inline double mixture_log_density(const std::vector<std::vector<double>>& means, std::span<const double> a_query,
                                  double sigma_b) {
    if (means.empty()) throw ArgumentError("mixture_log_density: no components");
    const double var = sigma_b * sigma_b;
    const double norm = -0.5 * static_cast<double>(a_query.size()) * std::log(2.0 * M_PI * var);
    std::vector<double> comps(means.size());
    for (std::size_t i = 0; i < means.size(); ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < a_query.size(); ++j) {
            double diff = a_query[j] - means[i][j];
            sq += diff * diff;
        }
        comps[i] = norm - 0.5 * sq / var;
    }
    return log_sum_exp(comps);
}

// Gradient of mixture_log_density with respect to a_query:
//   sum_i softmax(comp)_i * (mu_i - a) / sigma^2
inline std::vector<double> mixture_log_density_grad(const std::vector<std::vector<double>>& means,
                                                    std::span<const double> a_query, double sigma_b) {
    const double var = sigma_b * sigma_b;
    const double norm = -0.5 * static_cast<double>(a_query.size()) * std::log(2.0 * M_PI * var);
    std::vector<double> comps(means.size());
    for (std::size_t i = 0; i < means.size(); ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < a_query.size(); ++j) {
            double diff = a_query[j] - means[i][j];
            sq += diff * diff;
        }
        comps[i] = norm - 0.5 * sq / var;
    }
    double lse = log_sum_exp(comps);
    std::vector<double> grad(a_query.size(), 0.0);
    for (std::size_t i = 0; i < means.size(); ++i) {
        double w = std::exp(comps[i] - lse);
        for (std::size_t j = 0; j < a_query.size(); ++j) grad[j] += w * (means[i][j] - a_query[j]) / var;
    }
    return grad;
}

// Samples M latents, decodes them, and evaluates the mixture at a_query.
inline double behavior_log_density(const CvaeModel& model, std::span<const double> s, std::span<const double> a_query,
                                   int m_samples, double sigma_b, Rng& rng) {
    return mixture_log_density(decode_behavior_means(model, s, m_samples, rng), a_query, sigma_b);
}

}  // namespace lodada
