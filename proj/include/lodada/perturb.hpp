#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "lodada/errors.hpp"
#include "lodada/kmeans.hpp"
#include "lodada/rng.hpp"
#include "lodada/transition.hpp"

namespace lodada {

// Builds a locally perturbed copy of a dataset: next states are partitioned
// into n_regions via K-means, regions are ordered by lexicographic centroid
// order and dealt round-robin into |group_variances| groups, and every
// record's s_next receives i.i.d. zero-mean Gaussian noise with its group's
// variance. Only s_next changes; s, a, r and domain are untouched.
inline Dataset inject_local_perturbation(const Dataset& ds, int n_regions,
                                         const std::vector<double>& group_variances, std::uint64_t seed) {
    if (group_variances.empty()) throw ArgumentError("inject_local_perturbation: no group variances given");
    for (double v : group_variances)
        if (v < 0.0 || !std::isfinite(v)) throw ArgumentError("inject_local_perturbation: variance must be >= 0");
    if (n_regions < static_cast<int>(group_variances.size()))
        throw ArgumentError("inject_local_perturbation: n_regions (" + std::to_string(n_regions) +
                            ") is smaller than the number of variance groups (" +
                            std::to_string(group_variances.size()) + ")");

    std::vector<std::vector<double>> next_states;
    next_states.reserve(ds.records.size());
    for (const Transition& t : ds.records) next_states.push_back(t.s_next);

    ClusterModel regions = kmeans_fit(next_states, n_regions, substream(seed, "perturb-kmeans"));

    // Fixed region ordering: ascending lexicographic centroid order.
    std::vector<int> order(regions.k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::lexicographical_compare(regions.centroids[a].begin(), regions.centroids[a].end(),
                                            regions.centroids[b].begin(), regions.centroids[b].end());
    });
    std::vector<int> group_of_cluster(regions.k, 0);
    for (int rank = 0; rank < regions.k; ++rank)
        group_of_cluster[order[rank]] = rank % static_cast<int>(group_variances.size());

    Dataset out = ds;
    out.meta.generator = ds.meta.generator.empty() ? "perturbed" : ds.meta.generator + "+perturbed";
    Rng noise(substream(seed, "perturb-noise"));
    for (int c = 0; c < regions.k; ++c) {
        double sd = std::sqrt(group_variances[group_of_cluster[c]]);
        for (std::size_t idx : regions.members[c]) {
            if (sd == 0.0) continue;
            for (double& v : out.records[idx].s_next) v += noise.normal(0.0, sd);
        }
    }
    return out;
}

}  // namespace lodada
