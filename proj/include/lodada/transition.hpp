#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lodada/errors.hpp"

namespace lodada {

enum class Domain { Source, Target };

inline const char* domain_name(Domain d) { return d == Domain::Source ? "source" : "target"; }

inline Domain domain_from_name(const std::string& s) {
    if (s == "source") return Domain::Source;
    if (s == "target") return Domain::Target;
    throw DataError("unknown domain label '" + s + "'");
}

// One (s, a, r, s', domain) record; the atomic dataset unit.
struct Transition {
    std::vector<double> s;
    std::vector<double> a;
    double r = 0.0;
    std::vector<double> s_next;
    Domain domain = Domain::Source;
};

struct DatasetMeta {
    std::string name;
    std::uint64_t seed = 0;
    std::string generator;
};

struct Dataset {
    int d_s = 0;
    int d_a = 0;
    DatasetMeta meta;
    std::vector<Transition> records;

    std::size_t size() const { return records.size(); }
};

// z = s (+) a, the identity representation of a state-action pair.
inline std::vector<double> concat(const Transition& t) {
    std::vector<double> z;
    z.reserve(t.s.size() + t.a.size());
    z.insert(z.end(), t.s.begin(), t.s.end());
    z.insert(z.end(), t.a.begin(), t.a.end());
    return z;
}

struct NormStats {
    std::vector<double> mean;
    std::vector<double> std;
};

// Per-dimension mean/std over the union of s and s_next. Std floors at 1e-6
// so degenerate dimensions stay usable as divisors.
inline NormStats normalization_stats(const Dataset& ds) {
    if (ds.records.empty()) throw ArgumentError("normalization_stats: empty dataset");
    const std::size_t d = static_cast<std::size_t>(ds.d_s);
    NormStats st;
    st.mean.assign(d, 0.0);
    st.std.assign(d, 0.0);
    const double n = 2.0 * static_cast<double>(ds.records.size());
    for (const Transition& t : ds.records)
        for (std::size_t i = 0; i < d; ++i) st.mean[i] += t.s[i] + t.s_next[i];
    for (std::size_t i = 0; i < d; ++i) st.mean[i] /= n;
    for (const Transition& t : ds.records)
        for (std::size_t i = 0; i < d; ++i) {
            double a = t.s[i] - st.mean[i];
            double b = t.s_next[i] - st.mean[i];
            st.std[i] += a * a + b * b;
        }
    for (std::size_t i = 0; i < d; ++i) st.std[i] = std::max(std::sqrt(st.std[i] / n), 1e-6);
    return st;
}

inline Dataset normalize_states(const Dataset& ds, const NormStats& st) {
    Dataset out = ds;
    for (Transition& t : out.records)
        for (int i = 0; i < ds.d_s; ++i) {
            t.s[i] = (t.s[i] - st.mean[i]) / st.std[i];
            t.s_next[i] = (t.s_next[i] - st.mean[i]) / st.std[i];
        }
    return out;
}

}  // namespace lodada
