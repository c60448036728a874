#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "lodada/episode.hpp"
#include "lodada/errors.hpp"
#include "lodada/linalg.hpp"
#include "lodada/rng.hpp"
#include "lodada/transition.hpp"

namespace lodada {

// Linear dynamics with region-dependent additive Gaussian noise:
//   s' = A s + B a + b + eps,   eps ~ N(0, Sigma_region)
// where the region is the nearest centroid of the deterministic part
// A s + B a + b. Picking the region from the deterministic part keeps the
// true per-region transition KL piecewise constant and analytically known.
struct LinearGaussianSpec {
    Mat A;
    Mat B;
    std::vector<double> bias;
    std::vector<std::vector<double>> region_centroids;
    std::vector<Mat> region_noise_cov;
    double state_cost = 1.0;   // r = -(state_cost |s|^2 + action_cost |a|^2)
    double action_cost = 0.1;
    double gamma = 0.99;
    double action_limit = 2.0;
    std::vector<double> init_mean;
    double init_std = 1.0;

    int d_s() const { return static_cast<int>(A.rows); }
    int d_a() const { return static_cast<int>(B.cols); }

    void validate() const {
        if (A.rows != A.cols || B.rows != A.rows || bias.size() != A.rows)
            throw ArgumentError("linear_gaussian: inconsistent A/B/b shapes");
        if (region_centroids.empty() || region_centroids.size() != region_noise_cov.size())
            throw ArgumentError("linear_gaussian: need matching region centroids and covariances");
        for (const Mat& cov : region_noise_cov) {
            if (cov.rows != A.rows || cov.cols != A.rows)
                throw ArgumentError("linear_gaussian: covariance shape mismatch");
            cholesky(cov);  // SPD check
        }
        if (gamma < 0.0 || gamma >= 1.0) throw ArgumentError("linear_gaussian: gamma outside [0,1)");
    }
};

namespace lingauss {

inline std::size_t region_of(const LinearGaussianSpec& spec, const std::vector<double>& point) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < spec.region_centroids.size(); ++i) {
        double d = squared_distance(spec.region_centroids[i], point);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

inline std::vector<double> dynamics_mean(const LinearGaussianSpec& spec, const std::vector<double>& s,
                                         const std::vector<double>& a) {
    std::vector<double> mu = matvec(spec.A, s);
    std::vector<double> ba = matvec(spec.B, a);
    for (std::size_t i = 0; i < mu.size(); ++i) mu[i] += ba[i] + spec.bias[i];
    return mu;
}

inline double reward(const LinearGaussianSpec& spec, const std::vector<double>& s, const std::vector<double>& a) {
    return -(spec.state_cost * dot(s, s) + spec.action_cost * dot(a, a));
}

inline std::pair<std::vector<double>, double> step(const LinearGaussianSpec& spec, const std::vector<double>& s,
                                                   const std::vector<double>& a, Rng& rng) {
    if (static_cast<int>(s.size()) != spec.d_s()) throw ArgumentError("linear_gaussian: state dimension mismatch");
    if (static_cast<int>(a.size()) != spec.d_a()) throw ArgumentError("linear_gaussian: action dimension mismatch");
    for (double v : a)
        if (!std::isfinite(v)) throw ArgumentError("linear_gaussian: non-finite action");
    std::vector<double> mu = dynamics_mean(spec, s, a);
    const Mat& cov = spec.region_noise_cov[region_of(spec, mu)];
    Mat l = cholesky(cov);
    std::vector<double> z(mu.size());
    for (double& v : z) v = rng.normal();
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j) mu[i] += l(i, j) * z[j];
    return {std::move(mu), reward(spec, s, a)};
}

// Closed-form Gaussian KL between the source and target transition kernels
// at a fixed (s, a):
//   KL = 1/2 [ tr(S2^-1 S1) + (m2-m1)' S2^-1 (m2-m1) - d + ln det S2/det S1 ]
inline double analytic_transition_kl(const LinearGaussianSpec& src, const LinearGaussianSpec& tar,
                                     const std::vector<double>& s, const std::vector<double>& a) {
    std::vector<double> mu1 = dynamics_mean(src, s, a);
    std::vector<double> mu2 = dynamics_mean(tar, s, a);
    const Mat& s1 = src.region_noise_cov[region_of(src, mu1)];
    const Mat& s2 = tar.region_noise_cov[region_of(tar, mu2)];
    const std::size_t d = mu1.size();
    Mat s2inv = spd_inverse(s2);
    Mat prod = matmul(s2inv, s1);
    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) trace += prod(i, i);
    std::vector<double> diff(d);
    for (std::size_t i = 0; i < d; ++i) diff[i] = mu2[i] - mu1[i];
    double quad = dot(diff, matvec(s2inv, diff));
    double logdet = spd_log_det(s2) - spd_log_det(s1);
    return 0.5 * (trace + quad - static_cast<double>(d) + logdet);
}

// Infinite-horizon discounted LQR gain for r = -(s'Qs + a'Ra), used as the
// expert reference controller and (noised) as the behavior policy. The bias
// term is assumed zero for the gain computation.
inline Mat lqr_gain(const LinearGaussianSpec& spec, int iters = 2000, double tol = 1e-12) {
    const std::size_t n = spec.A.rows, m = spec.B.cols;
    Mat q = scale(Mat::identity(n), spec.state_cost);
    Mat r = scale(Mat::identity(m), spec.action_cost);
    Mat p = q;
    Mat at = transpose(spec.A), bt = transpose(spec.B);
    Mat gain(m, n);
    for (int it = 0; it < iters; ++it) {
        Mat pa = matmul(p, spec.A);
        Mat pb = matmul(p, spec.B);
        Mat inner = add(r, scale(matmul(bt, pb), spec.gamma));
        Mat inner_inv = spd_inverse(inner);
        gain = scale(matmul(inner_inv, matmul(bt, pa)), spec.gamma);
        Mat next = add(q, add(scale(matmul(at, pa), spec.gamma),
                              scale(matmul(transpose(gain), matmul(bt, pa)), -spec.gamma)));
        double delta = 0.0;
        for (std::size_t i = 0; i < next.data.size(); ++i) delta = std::max(delta, std::fabs(next.data[i] - p.data[i]));
        p = next;
        if (delta < tol) break;
    }
    return gain;
}

inline std::vector<double> clamp_action(const LinearGaussianSpec& spec, std::vector<double> a) {
    for (double& v : a) v = std::clamp(v, -spec.action_limit, spec.action_limit);
    return a;
}

using StatePolicy = std::function<std::vector<double>(const std::vector<double>& s, Rng&)>;

inline StatePolicy linear_feedback_policy(const LinearGaussianSpec& spec, Mat gain, double noise_std) {
    return [spec, gain = std::move(gain), noise_std](const std::vector<double>& s, Rng& rng) {
        std::vector<double> a = matvec(gain, s);
        for (double& v : a) {
            v = -v;
            if (noise_std > 0.0) v += rng.normal(0.0, noise_std);
        }
        return clamp_action(spec, std::move(a));
    };
}

inline StatePolicy random_policy(const LinearGaussianSpec& spec) {
    return [&spec](const std::vector<double>&, Rng& rng) {
        std::vector<double> a(spec.d_a());
        for (double& v : a) v = rng.uniform(-spec.action_limit, spec.action_limit);
        return a;
    };
}

inline std::vector<double> sample_start(const LinearGaussianSpec& spec, Rng& rng) {
    std::vector<double> s(spec.d_s());
    for (int i = 0; i < spec.d_s(); ++i) {
        double mean = spec.init_mean.empty() ? 0.0 : spec.init_mean[i];
        s[i] = rng.normal(mean, spec.init_std);
    }
    return s;
}

inline Dataset generate_dataset(const LinearGaussianSpec& spec, const StatePolicy& policy,
                                std::size_t n_transitions, std::uint64_t seed, Domain domain,
                                int episode_len = 40) {
    spec.validate();
    if (n_transitions < 1) throw ArgumentError("generate_dataset: need at least one transition");
    Dataset ds;
    ds.d_s = spec.d_s();
    ds.d_a = spec.d_a();
    ds.meta.name = "linear_gaussian";
    ds.meta.seed = seed;
    ds.meta.generator = "linear_gaussian";
    Rng rng(substream(seed, "lingauss-rollout"));
    std::vector<double> s = sample_start(spec, rng);
    int steps_in_episode = 0;
    while (ds.records.size() < n_transitions) {
        if (steps_in_episode >= episode_len) {
            s = sample_start(spec, rng);
            steps_in_episode = 0;
        }
        std::vector<double> a = policy(s, rng);
        auto [next, r] = step(spec, s, a, rng);
        Transition t;
        t.s = s;
        t.a = a;
        t.r = r;
        t.s_next = next;
        t.domain = domain;
        ds.records.push_back(std::move(t));
        s = std::move(next);
        ++steps_in_episode;
    }
    return ds;
}

inline EpisodeStats evaluate_policy(const LinearGaussianSpec& spec, const StatePolicy& policy, int episodes,
                                    int horizon, std::uint64_t seed) {
    spec.validate();
    std::vector<double> returns;
    returns.reserve(episodes);
    for (int ep = 0; ep < episodes; ++ep) {
        Rng rng(substream(seed, "lingauss-eval", static_cast<std::uint64_t>(ep)));
        std::vector<double> s = sample_start(spec, rng);
        double ret = 0.0;
        double discount = 1.0;
        for (int t = 0; t < horizon; ++t) {
            std::vector<double> a = policy(s, rng);
            auto [next, r] = step(spec, s, a, rng);
            ret += discount * r;
            discount *= spec.gamma;
            s = std::move(next);
        }
        returns.push_back(ret);
    }
    return EpisodeStats::from_returns(std::move(returns));
}

}  // namespace lingauss
}  // namespace lodada
