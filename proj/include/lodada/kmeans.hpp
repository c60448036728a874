#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <json.hpp>

#include "lodada/errors.hpp"
#include "lodada/linalg.hpp"
#include "lodada/rng.hpp"

namespace lodada {

// K-means over next states. "Diameter" d^i is realized as the maximum
// member-to-centroid distance; the admission rule only needs a consistent
// per-cluster scale.
struct ClusterModel {
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> centroids;
    std::vector<double> radii;
    std::vector<std::vector<std::size_t>> members;  // indices into the clustered point set
    double mean_radius = 0.0;
    double objective = 0.0;  // sum of squared member-centroid distances at convergence
    int iterations = 0;
    std::vector<double> objective_trace;  // objective after each assignment step
};

struct SourceAssignment {
    // One entry per source record: nearest cluster, its distance, and whether
    // the point passed the diameter-threshold test.
    std::vector<int> cluster;
    std::vector<double> distance;
    std::vector<bool> accepted;

    std::size_t accepted_count() const {
        std::size_t n = 0;
        for (bool b : accepted) n += b ? 1 : 0;
        return n;
    }
};

namespace detail {

inline std::size_t nearest_centroid(const std::vector<std::vector<double>>& centroids,
                                    const std::vector<double>& p, double* best_sq = nullptr) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        double d = squared_distance(centroids[c], p);
        if (d < bd) {
            bd = d;
            best = c;
        }
    }
    if (best_sq) *best_sq = bd;
    return best;
}

}  // namespace detail

// Lloyd iterations from k-means++ seeding. Empty clusters are re-seeded from
// the point farthest from its current centroid. Deterministic given seed.
inline ClusterModel kmeans_fit(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed,
                               int max_iters = 100, double tol = 1e-8) {
    if (k < 1) throw ArgumentError("kmeans_fit: K must be >= 1");
    if (points.size() < static_cast<std::size_t>(k))
        throw ArgumentError("kmeans_fit: K=" + std::to_string(k) + " exceeds point count " +
                            std::to_string(points.size()));
    const std::size_t n = points.size();
    const std::size_t dim = points[0].size();
    Rng rng(seed);

    // k-means++ seeding: first centroid uniform, then proportional to squared
    // distance from the nearest chosen centroid.
    std::vector<std::vector<double>> centroids;
    centroids.reserve(k);
    centroids.push_back(points[rng.index(n)]);
    std::vector<double> dist_sq(n);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            detail::nearest_centroid(centroids, points[i], &dist_sq[i]);
            total += dist_sq[i];
        }
        std::size_t chosen;
        if (total <= 0.0) {
            chosen = rng.index(n);  // all points coincide with existing centroids
        } else {
            double target = rng.uniform() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist_sq[i];
                if (acc >= target) {
                    chosen = i;
                    break;
                }
            }
        }
        centroids.push_back(points[chosen]);
    }

    std::vector<std::size_t> assign(n, 0);
    ClusterModel model;
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d2 = 0.0;
            assign[i] = detail::nearest_centroid(centroids, points[i], &d2);
            obj += d2;
        }
        model.objective_trace.push_back(obj);

        std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < dim; ++d) next[assign[i]][d] += points[i][d];
            ++counts[assign[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Re-seed from the farthest point; strictly lowers the objective.
                std::size_t far_idx = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double d = squared_distance(points[i], centroids[assign[i]]);
                    if (d > far_d) {
                        far_d = d;
                        far_idx = i;
                    }
                }
                next[c] = points[far_idx];
                assign[far_idx] = static_cast<std::size_t>(c);
                counts[c] = 1;  // keeps the shift test meaningful
            } else {
                for (std::size_t d = 0; d < dim; ++d) next[c][d] /= static_cast<double>(counts[c]);
            }
        }
        double shift = 0.0;
        for (int c = 0; c < k; ++c) shift = std::max(shift, std::sqrt(squared_distance(centroids[c], next[c])));
        centroids = std::move(next);
        if (shift < tol) {
            ++iter;
            break;
        }
    }

    // Final assignment against converged centroids.
    for (std::size_t i = 0; i < n; ++i) assign[i] = detail::nearest_centroid(centroids, points[i]);

    model.k = k;
    model.seed = seed;
    model.centroids = std::move(centroids);
    model.members.assign(k, {});
    model.radii.assign(k, 0.0);
    model.iterations = iter;
    for (std::size_t i = 0; i < n; ++i) {
        double d2 = squared_distance(points[i], model.centroids[assign[i]]);
        model.objective += d2;
        model.radii[assign[i]] = std::max(model.radii[assign[i]], std::sqrt(d2));
        model.members[assign[i]].push_back(i);
    }
    double r = 0.0;
    for (double ri : model.radii) r += ri;
    model.mean_radius = r / static_cast<double>(k);
    return model;
}

// Maps each source next state to its nearest centroid; accepted iff
// distance <= delta * mean_radius.
inline SourceAssignment assign_source(const ClusterModel& model,
                                      const std::vector<std::vector<double>>& src_next_states, double delta) {
    if (delta <= 0.0) throw ArgumentError("assign_source: delta must be positive");
    SourceAssignment out;
    const std::size_t n = src_next_states.size();
    out.cluster.resize(n);
    out.distance.resize(n);
    out.accepted.resize(n);
    const bool accept_all = std::isinf(delta);
    const double threshold = accept_all ? 0.0 : delta * model.mean_radius;
    for (std::size_t i = 0; i < n; ++i) {
        double d2 = 0.0;
        std::size_t c = detail::nearest_centroid(model.centroids, src_next_states[i], &d2);
        out.cluster[i] = static_cast<int>(c);
        out.distance[i] = std::sqrt(d2);
        out.accepted[i] = accept_all || out.distance[i] <= threshold;
    }
    return out;
}

struct ClusterCounts {
    std::vector<std::size_t> n_source;  // N_0^n: accepted source members
    std::vector<std::size_t> n_target;  // N_1^n: target members from clustering
};

inline ClusterCounts cluster_counts(const ClusterModel& model, const SourceAssignment& assignment) {
    ClusterCounts counts;
    counts.n_source.assign(model.k, 0);
    counts.n_target.assign(model.k, 0);
    for (int c = 0; c < model.k; ++c) counts.n_target[c] = model.members[c].size();
    for (std::size_t i = 0; i < assignment.cluster.size(); ++i)
        if (assignment.accepted[i]) ++counts.n_source[assignment.cluster[i]];
    return counts;
}

inline nlohmann::json cluster_model_to_json(const ClusterModel& model) {
    return nlohmann::json{{"k", model.k},
                          {"seed", model.seed},
                          {"centroids", model.centroids},
                          {"radii", model.radii},
                          {"mean_radius", model.mean_radius},
                          {"objective", model.objective},
                          {"iterations", model.iterations}};
}

inline ClusterModel cluster_model_from_json(const nlohmann::json& j) {
    ClusterModel model;
    model.k = j.at("k").get<int>();
    model.seed = j.at("seed").get<std::uint64_t>();
    model.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
    model.radii = j.at("radii").get<std::vector<double>>();
    model.mean_radius = j.at("mean_radius").get<double>();
    model.objective = j.value("objective", 0.0);
    model.iterations = j.value("iterations", 0);
    model.members.assign(model.k, {});
    return model;
}

}  // namespace lodada
