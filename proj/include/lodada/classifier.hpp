#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "lodada/adam.hpp"
#include "lodada/errors.hpp"
#include "lodada/kmeans.hpp"
#include "lodada/mlp.hpp"
#include "lodada/rng.hpp"

namespace lodada {

struct ClassifierConfig {
    std::vector<int> hidden{64};
    int epochs = 200;
    int patience = 20;  // early stop after this many epochs without improvement
    double lr = 3e-4;
    int batch = 128;
    double input_noise_std = 1.0;
    int min_per_class = 10;  // below this on either side the cluster is degenerate
};

// Cluster-local domain classifier D_n(z) = P(y=1 | z) with a sigmoid head.
// Outputs are clamped to [1e-6, 1-1e-6] before any log or ratio so the
// pointwise KL stays finite.
struct ClusterClassifier {
    int cluster = -1;
    bool degenerate = false;
    Mlp net;
    double prior_a = 0.0;  // A = N1 / (N0 + N1)
    std::size_t n_source = 0, n_target = 0;
    std::vector<double> loss_trace;  // per epoch
};

inline constexpr double kProbClamp = 1e-6;

inline double clamp_probability(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

inline double classifier_output(const ClusterClassifier& c, std::span<const double> z) {
    if (c.degenerate) throw ArgumentError("classifier_output: degenerate cluster classifier");
    MlpWorkspace ws;
    double logit = forward(c.net, z, ws)[0];
    return clamp_probability(1.0 / (1.0 + std::exp(-logit)));
}

// Bayes inversion of the classifier output: w_hat = (1-A) D / (A (1-D)).
inline double density_ratio(double d_out, double prior_a) {
    d_out = clamp_probability(d_out);
    prior_a = clamp_probability(prior_a);
    return (1.0 - prior_a) * d_out / (prior_a * (1.0 - d_out));
}

// d_i = log(1 / w_hat), the pointwise KL estimate of a source sample.
inline double pointwise_kl_from_ratio(double w_hat) { return -std::log(w_hat); }

inline double pointwise_kl(const ClusterClassifier& c, std::span<const double> z) {
    return pointwise_kl_from_ratio(density_ratio(classifier_output(c, z), c.prior_a));
}

// Minimizes the cross-entropy loss
//   L = -E_tar[log D(z)] - E_src[log(1 - D(z))]
// by mini-batch Adam with Gaussian noise of std input_noise_std added to z
// during training. Deterministic per seed.
inline ClusterClassifier train_classifier(const std::vector<std::vector<double>>& z_target,
                                          const std::vector<std::vector<double>>& z_source,
                                          const ClassifierConfig& cfg, std::uint64_t seed, int cluster_index = -1) {
    ClusterClassifier out;
    out.cluster = cluster_index;
    out.n_source = z_source.size();
    out.n_target = z_target.size();
    if (z_target.size() < static_cast<std::size_t>(cfg.min_per_class) ||
        z_source.size() < static_cast<std::size_t>(cfg.min_per_class)) {
        out.degenerate = true;
        return out;
    }
    const std::size_t n1 = z_target.size(), n0 = z_source.size();
    out.prior_a = static_cast<double>(n1) / static_cast<double>(n0 + n1);

    const int dim = static_cast<int>(z_target[0].size());
    Rng init_rng(substream(seed, "classifier-init"));
    out.net = make_mlp(dim, cfg.hidden, 1, init_rng, Activation::ReLU, Activation::Identity);
    AdamState opt = make_adam(out.net, cfg.lr);
    Rng train_rng(substream(seed, "classifier-train"));

    // Balanced mini-batches: half target (label 1), half source (label 0).
    const std::size_t total = n0 + n1;
    const int steps_per_epoch = std::max<std::size_t>(1, total / static_cast<std::size_t>(cfg.batch));
    const int half = std::max(1, cfg.batch / 2);
    MlpWorkspace ws;
    MlpGrads grads = make_grads(out.net);
    std::vector<double> z_noisy(dim);
    double best_loss = std::numeric_limits<double>::infinity();
    int epochs_since_best = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (int step = 0; step < steps_per_epoch; ++step) {
            grads.zero();
            double loss = 0.0;
            for (int k = 0; k < 2 * half; ++k) {
                const bool is_target = k < half;
                const std::vector<double>& z =
                    is_target ? z_target[train_rng.index(n1)] : z_source[train_rng.index(n0)];
                for (int i = 0; i < dim; ++i)
                    z_noisy[i] = cfg.input_noise_std > 0.0 ? z[i] + train_rng.normal(0.0, cfg.input_noise_std)
                                                           : z[i];
                double logit = forward(out.net, z_noisy, ws)[0];
                double p = 1.0 / (1.0 + std::exp(-logit));
                double label = is_target ? 1.0 : 0.0;
                loss += -(label * std::log(clamp_probability(p)) +
                          (1.0 - label) * std::log(clamp_probability(1.0 - p)));
                // dL/dlogit of sigmoid cross-entropy, averaged over the batch.
                double dlogit = (p - label) / static_cast<double>(2 * half);
                backward(out.net, z_noisy, ws, std::span<const double>(&dlogit, 1), grads);
            }
            adam_step(opt, out.net, grads);
            epoch_loss += loss / static_cast<double>(2 * half);
        }
        epoch_loss /= static_cast<double>(steps_per_epoch);
        out.loss_trace.push_back(epoch_loss);
        if (epoch_loss < best_loss - 1e-5) {
            best_loss = epoch_loss;
            epochs_since_best = 0;
        } else if (++epochs_since_best >= cfg.patience) {
            break;
        }
    }
    return out;
}

// Mean of the pointwise estimates over a cluster's source points (Eq. form:
// D_hat = 1/N0 * sum_i log 1/w_hat(z_i)).
inline double cluster_kl(const ClusterClassifier& c, const std::vector<std::vector<double>>& z_source) {
    if (c.degenerate) throw ArgumentError("cluster_kl: degenerate cluster classifier");
    if (z_source.empty()) throw ArgumentError("cluster_kl: no source points");
    double sum = 0.0;
    for (const auto& z : z_source) sum += pointwise_kl(c, z);
    return sum / static_cast<double>(z_source.size());
}

struct ClusterDivergence {
    int cluster = -1;
    std::size_t n0 = 0, n1 = 0;
    double prior_a = 0.0;
    double kl = 0.0;  // +inf sentinel for degenerate clusters
    bool degenerate = false;
};

struct DivergenceReport {
    std::vector<ClusterDivergence> clusters;
    // Clusters sorted ascending by KL estimate; degenerate last, ties by index.
    std::vector<int> ranking;
    // d_i for every accepted source record (index-aligned with the source
    // dataset); NaN where the record was not accepted into any cluster.
    std::vector<double> pointwise;
};

inline std::vector<int> rank_clusters(const std::vector<ClusterDivergence>& clusters) {
    std::vector<int> order(clusters.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const ClusterDivergence& ca = clusters[a];
        const ClusterDivergence& cb = clusters[b];
        if (ca.degenerate != cb.degenerate) return cb.degenerate;
        if (ca.kl != cb.kl) return ca.kl < cb.kl;
        return a < b;
    });
    return order;
}

inline nlohmann::json divergence_report_to_json(const DivergenceReport& report) {
    nlohmann::json clusters = nlohmann::json::array();
    for (const ClusterDivergence& c : report.clusters)
        clusters.push_back({{"n", c.cluster},
                            {"N0", c.n0},
                            {"N1", c.n1},
                            {"A", c.prior_a},
                            {"kl", c.degenerate ? nlohmann::json() : nlohmann::json(c.kl)},
                            {"degenerate", c.degenerate}});
    return nlohmann::json{{"clusters", clusters}, {"ranking", report.ranking}};
}

}  // namespace lodada
