#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "lodada/errors.hpp"

namespace lodada {

inline double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) throw ArgumentError("mean_of: empty input");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
inline double stddev_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean_of(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

// Fractional ranks with ties averaged (1-based), as used by Spearman.
inline std::vector<double> fractional_ranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

// Spearman rank correlation; Pearson correlation of fractional ranks.
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw ArgumentError("spearman: need two equally sized series of length >= 2");
    std::vector<double> rx = fractional_ranks(xs);
    std::vector<double> ry = fractional_ranks(ys);
    double mx = mean_of(rx), my = mean_of(ry);
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0.0 || dy == 0.0) throw ArgumentError("spearman: a series is constant");
    return num / std::sqrt(dx * dy);
}

inline double log_sum_exp(const std::vector<double>& xs) {
    if (xs.empty()) throw ArgumentError("log_sum_exp: empty input");
    double m = *std::max_element(xs.begin(), xs.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace lodada
