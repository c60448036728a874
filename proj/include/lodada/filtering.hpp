#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "lodada/classifier.hpp"
#include "lodada/errors.hpp"
#include "lodada/kmeans.hpp"
#include "lodada/transition.hpp"

namespace lodada {

struct FilterConfig {
    double xi1 = 90.0, xi2 = 80.0, xi3 = 70.0;  // admission percentages per tier
    double alpha = 1.0;                         // importance weight

    void validate() const {
        for (double xi : {xi1, xi2, xi3})
            if (xi < 0.0 || xi > 100.0) throw ArgumentError("filter: admission percentage outside [0,100]");
        if (!(xi1 >= xi2 && xi2 >= xi3))
            throw ArgumentError("filter: admission percentages must satisfy xi1 >= xi2 >= xi3");
        if (alpha < 0.0) throw ArgumentError("filter: alpha must be >= 0");
    }

    double xi_for_tier(int tier) const { return tier == 1 ? xi1 : tier == 2 ? xi2 : xi3; }
};

// g(j): tier of the cluster ranked j (1-based) out of K.
//   1 for j <= ceil(K/3), 2 up to ceil(2K/3), 3 beyond.
inline int tier_of(int rank_j, int k) {
    if (k < 1 || rank_j < 1 || rank_j > k) throw ArgumentError("tier_of: rank outside 1..K");
    const int first = (k + 2) / 3;        // ceil(K/3)
    const int second = (2 * k + 2) / 3;   // ceil(2K/3)
    if (rank_j <= first) return 1;
    if (rank_j <= second) return 2;
    return 3;
}

// Normalized pointwise estimates over the admitted set:
//   d_hat_i = (d_i - max d) / (max d - min d), all zero when max == min.
inline std::vector<double> normalize_d(const std::vector<double>& d) {
    if (d.empty()) throw ArgumentError("normalize_d: need at least one admitted point");
    auto [mn_it, mx_it] = std::minmax_element(d.begin(), d.end());
    double mn = *mn_it, mx = *mx_it;
    std::vector<double> out(d.size(), 0.0);
    if (mx > mn)
        for (std::size_t i = 0; i < d.size(); ++i) out[i] = (d[i] - mx) / (mx - mn);
    return out;
}

inline double critic_weight(double d_hat, double alpha) { return std::exp(-alpha * d_hat); }

// One admitted source record with its divergence bookkeeping.
struct WeightedRecord {
    std::size_t source_index = 0;  // into the source dataset
    int cluster = -1;
    int tier = 3;
    double d = 0.0;
    double d_hat = 0.0;
    double weight = 1.0;
};

struct TierStats {
    std::size_t clusters = 0;
    std::size_t candidates = 0;
    std::size_t admitted = 0;
};

struct WeightedDataset {
    std::vector<WeightedRecord> admitted;  // ascending source_index
    TierStats tiers[3];
    std::size_t source_total = 0;    // size of the raw source dataset
    std::size_t accepted_total = 0;  // passed the diameter threshold
};

// Per-cluster admission: clusters sorted ascending by KL (degenerate last),
// and within the cluster at rank j the xi_{g(j)} percent of source points
// with the smallest d_i are admitted (count = ceil(xi * N0 / 100)).
// Degenerate clusters are ranked last, admitted at the tier-3 ratio, and
// their points carry d = 0.
struct ClusterAdmission {
    int cluster = -1;
    int rank = 0;
    int tier = 3;
    std::vector<std::size_t> admitted_source_indices;
};

inline std::vector<ClusterAdmission> filter_sources(const DivergenceReport& report,
                                                    const std::vector<std::vector<std::size_t>>& cluster_source_indices,
                                                    const FilterConfig& cfg) {
    cfg.validate();
    const int k = static_cast<int>(report.clusters.size());
    if (static_cast<int>(cluster_source_indices.size()) != k)
        throw ArgumentError("filter_sources: cluster membership size mismatch");
    std::vector<ClusterAdmission> out;
    out.reserve(k);
    for (int j = 1; j <= k; ++j) {
        const int cluster = report.ranking[j - 1];
        const ClusterDivergence& cd = report.clusters[cluster];
        ClusterAdmission adm;
        adm.cluster = cluster;
        adm.rank = j;
        adm.tier = tier_of(j, k);
        const std::vector<std::size_t>& members = cluster_source_indices[cluster];
        if (!members.empty()) {
            const double xi = cfg.xi_for_tier(adm.tier);
            const std::size_t count = static_cast<std::size_t>(
                std::ceil(xi * static_cast<double>(members.size()) / 100.0));
            std::vector<std::size_t> order(members.size());
            std::iota(order.begin(), order.end(), 0);
            if (!cd.degenerate) {
                // Smallest d first; ties by record index for determinism.
                std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                    double da = report.pointwise[members[a]];
                    double db = report.pointwise[members[b]];
                    if (da != db) return da < db;
                    return members[a] < members[b];
                });
            }
            adm.admitted_source_indices.reserve(std::min(count, members.size()));
            for (std::size_t i = 0; i < std::min(count, members.size()); ++i)
                adm.admitted_source_indices.push_back(members[order[i]]);
            std::sort(adm.admitted_source_indices.begin(), adm.admitted_source_indices.end());
        }
        out.push_back(std::move(adm));
    }
    return out;
}

// Assembles the weighted source dataset: d_hat is normalized over the
// admitted set only, degenerate clusters contribute d_hat = 0, and records
// are kept in source-dataset order.
inline WeightedDataset build_weighted_dataset(const DivergenceReport& report,
                                              const std::vector<ClusterAdmission>& admissions,
                                              const std::vector<std::vector<std::size_t>>& cluster_source_indices,
                                              std::size_t source_total, const FilterConfig& cfg) {
    WeightedDataset wd;
    wd.source_total = source_total;
    for (const auto& members : cluster_source_indices) wd.accepted_total += members.size();

    for (const ClusterAdmission& adm : admissions) {
        TierStats& ts = wd.tiers[adm.tier - 1];
        ++ts.clusters;
        ts.candidates += cluster_source_indices[adm.cluster].size();
        ts.admitted += adm.admitted_source_indices.size();
        const bool degenerate = report.clusters[adm.cluster].degenerate;
        for (std::size_t src_idx : adm.admitted_source_indices) {
            WeightedRecord rec;
            rec.source_index = src_idx;
            rec.cluster = adm.cluster;
            rec.tier = adm.tier;
            rec.d = degenerate ? 0.0 : report.pointwise[src_idx];
            wd.admitted.push_back(rec);
        }
    }
    std::sort(wd.admitted.begin(), wd.admitted.end(),
              [](const WeightedRecord& a, const WeightedRecord& b) { return a.source_index < b.source_index; });

    if (!wd.admitted.empty()) {
        // Normalize over the non-degenerate admitted points; degenerate points
        // keep d_hat = 0 (the lowest weight).
        std::vector<double> ds;
        ds.reserve(wd.admitted.size());
        for (const WeightedRecord& r : wd.admitted)
            if (!report.clusters[r.cluster].degenerate) ds.push_back(r.d);
        if (!ds.empty()) {
            std::vector<double> dhat = normalize_d(ds);
            std::size_t k = 0;
            for (WeightedRecord& r : wd.admitted)
                if (!report.clusters[r.cluster].degenerate) r.d_hat = dhat[k++];
        }
        for (WeightedRecord& r : wd.admitted) r.weight = critic_weight(r.d_hat, cfg.alpha);
    }
    return wd;
}

inline nlohmann::json weighted_summary_to_json(const WeightedDataset& wd) {
    nlohmann::json tiers = nlohmann::json::array();
    for (int t = 0; t < 3; ++t)
        tiers.push_back({{"tier", t + 1},
                         {"clusters", wd.tiers[t].clusters},
                         {"candidates", wd.tiers[t].candidates},
                         {"admitted", wd.tiers[t].admitted}});
    return nlohmann::json{{"source_total", wd.source_total},
                          {"accepted_total", wd.accepted_total},
                          {"admitted_total", wd.admitted.size()},
                          {"tiers", tiers}};
}

}  // namespace lodada
