#pragma once

#include <cmath>
#include <vector>

#include "lodada/errors.hpp"

namespace lodada {

// Exact numeric check of the identity
//   D_KL(P(z|s'_src) || P(z|s'_tar))
//     = D_KL(P(s'_src|z) || P(s'_tar|z)) + H(s'_src) - H(s'_tar)
// on a finite strictly positive joint distribution P(z, s'_src, s'_tar).
// Both sides are computed by direct enumeration; the gap should be at
// machine-precision scale for any valid joint.

struct DiscreteJoint {
    std::size_t nz = 0, ns = 0, nt = 0;   // alphabet sizes for z, s'_src, s'_tar
    std::vector<double> p;                // nz * ns * nt probabilities

    double& at(std::size_t z, std::size_t s, std::size_t t) { return p[(z * ns + s) * nt + t]; }
    double at(std::size_t z, std::size_t s, std::size_t t) const { return p[(z * ns + s) * nt + t]; }
};

struct Proposition1Result {
    double lhs = 0.0;  // representation deviation
    double rhs = 0.0;  // dynamics deviation + entropy gap
    double gap = 0.0;
    double entropy_gap = 0.0;  // B = H(s'_src) - H(s'_tar)
};

inline Proposition1Result proposition1_check(const DiscreteJoint& joint) {
    if (joint.p.size() != joint.nz * joint.ns * joint.nt || joint.p.empty())
        throw ArgumentError("proposition1_check: joint table shape mismatch");
    double total = 0.0;
    for (double v : joint.p) {
        if (v <= 0.0) throw ArgumentError("proposition1_check: joint must be strictly positive");
        total += v;
    }
    if (std::fabs(total - 1.0) > 1e-9) throw ArgumentError("proposition1_check: joint is not normalized");

    // Marginals.
    std::vector<double> pz(joint.nz, 0.0), ps(joint.ns, 0.0), pt(joint.nt, 0.0);
    std::vector<double> pzs(joint.nz * joint.ns, 0.0);  // P(z, s'_src)
    std::vector<double> pzt(joint.nz * joint.nt, 0.0);  // P(z, s'_tar)
    for (std::size_t z = 0; z < joint.nz; ++z)
        for (std::size_t s = 0; s < joint.ns; ++s)
            for (std::size_t t = 0; t < joint.nt; ++t) {
                double v = joint.at(z, s, t);
                pz[z] += v;
                ps[s] += v;
                pt[t] += v;
                pzs[z * joint.ns + s] += v;
                pzt[z * joint.nt + t] += v;
            }

    double entropy_src = 0.0, entropy_tar = 0.0;
    for (double v : ps) entropy_src -= v * std::log(v);
    for (double v : pt) entropy_tar -= v * std::log(v);

    Proposition1Result res;
    res.entropy_gap = entropy_src - entropy_tar;
    double dynamics_term = 0.0;
    for (std::size_t z = 0; z < joint.nz; ++z)
        for (std::size_t s = 0; s < joint.ns; ++s)
            for (std::size_t t = 0; t < joint.nt; ++t) {
                double v = joint.at(z, s, t);
                double p_z_given_s = pzs[z * joint.ns + s] / ps[s];
                double p_z_given_t = pzt[z * joint.nt + t] / pt[t];
                res.lhs += v * std::log(p_z_given_s / p_z_given_t);
                double p_s_given_z = pzs[z * joint.ns + s] / pz[z];
                double p_t_given_z = pzt[z * joint.nt + t] / pz[z];
                dynamics_term += v * std::log(p_s_given_z / p_t_given_z);
            }
    res.rhs = dynamics_term + res.entropy_gap;
    res.gap = std::fabs(res.lhs - res.rhs);
    return res;
}

struct TheoryInputs {
    double entropy_gap = 0.0;  // B = H(s'_src) - H(s'_tar)
    double epsilon = 0.0;      // bound on the representation KL
    double r_max = 1.0;
    double gamma = 0.99;
};

// Bretagnolle-Huber return-gap bound: 2 R_max sqrt(1 - e^{B - eps}).
inline double bh_return_gap_bound(const TheoryInputs& in) {
    if (in.epsilon < in.entropy_gap)
        throw ArgumentError("bh_return_gap_bound: epsilon must be >= the entropy gap B");
    return 2.0 * in.r_max * std::sqrt(1.0 - std::exp(in.entropy_gap - in.epsilon));
}

}  // namespace lodada
