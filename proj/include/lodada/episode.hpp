#pragma once

#include <vector>

#include "lodada/errors.hpp"
#include "lodada/stats.hpp"

namespace lodada {

struct EpisodeStats {
    std::vector<double> returns;
    double mean = 0.0;
    double std = 0.0;

    static EpisodeStats from_returns(std::vector<double> rs) {
        EpisodeStats st;
        st.returns = std::move(rs);
        st.mean = mean_of(st.returns);
        st.std = stddev_of(st.returns);
        return st;
    }
};

// NS = (J - J_random) / (J_expert - J_random) * 100
inline double normalized_score(double j, double j_random, double j_expert) {
    if (!(j_expert > j_random)) throw ArgumentError("normalized_score: J_expert must exceed J_random");
    return (j - j_random) / (j_expert - j_random) * 100.0;
}

}  // namespace lodada
