#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "lodada/episode.hpp"
#include "lodada/errors.hpp"
#include "lodada/rng.hpp"
#include "lodada/transition.hpp"

namespace lodada {

// Continuing-task gridworld: rewards are paid on arrival, goal cells are
// absorbing self-loops, and there is no terminal flag, so flat transitions
// bootstrap cleanly. Actions: 0 up, 1 right, 2 down, 3 left; moves off the
// grid stay in place. A slip replaces the intended move with one of the
// three other directions uniformly.
struct GridworldSpec {
    int width = 5;
    int height = 5;
    std::vector<double> slip_map;    // per cell, row-major y*width+x
    std::vector<double> reward_map;  // reward of the arrival cell
    double gamma = 0.95;
    std::vector<int> goal_cells;

    int cell_count() const { return width * height; }

    static GridworldSpec uniform(int width, int height, double slip, double goal_reward, int goal_cell,
                                 double gamma) {
        GridworldSpec g;
        g.width = width;
        g.height = height;
        g.slip_map.assign(static_cast<std::size_t>(width) * height, slip);
        g.reward_map.assign(static_cast<std::size_t>(width) * height, 0.0);
        g.reward_map[goal_cell] = goal_reward;
        g.gamma = gamma;
        g.goal_cells = {goal_cell};
        return g;
    }

    void validate() const {
        if (width < 1 || height < 1) throw ArgumentError("gridworld: empty grid");
        if (goal_cells.empty()) throw ArgumentError("gridworld: at least one goal cell required");
        if (static_cast<int>(slip_map.size()) != cell_count() ||
            static_cast<int>(reward_map.size()) != cell_count())
            throw ArgumentError("gridworld: slip/reward maps must cover every cell");
        for (double p : slip_map)
            if (p < 0.0 || p > 1.0) throw ArgumentError("gridworld: slip probability outside [0,1]");
        if (gamma < 0.0 || gamma >= 1.0) throw ArgumentError("gridworld: gamma outside [0,1)");
    }

    bool is_goal(int cell) const {
        return std::find(goal_cells.begin(), goal_cells.end(), cell) != goal_cells.end();
    }
};

namespace gridworld {

inline constexpr int kActions = 4;

inline int move(const GridworldSpec& g, int cell, int dir) {
    int x = cell % g.width;
    int y = cell / g.width;
    switch (dir) {
        case 0: y = std::max(0, y - 1); break;
        case 1: x = std::min(g.width - 1, x + 1); break;
        case 2: y = std::min(g.height - 1, y + 1); break;
        case 3: x = std::max(0, x - 1); break;
        default: throw ArgumentError("gridworld: action index outside 0..3");
    }
    return y * g.width + x;
}

// Exact next-cell distribution; rows sum to 1 by construction.
inline std::vector<double> transition_distribution(const GridworldSpec& g, int cell, int action) {
    std::vector<double> p(g.cell_count(), 0.0);
    if (g.is_goal(cell)) {
        p[cell] = 1.0;
        return p;
    }
    double slip = g.slip_map[cell];
    p[move(g, cell, action)] += 1.0 - slip;
    for (int d = 0; d < kActions; ++d)
        if (d != action) p[move(g, cell, d)] += slip / 3.0;
    return p;
}

inline std::pair<int, double> step(const GridworldSpec& g, int cell, int action, Rng& rng) {
    if (action < 0 || action >= kActions) throw ArgumentError("gridworld: action index outside 0..3");
    if (g.is_goal(cell)) return {cell, g.reward_map[cell]};
    int dir = action;
    if (rng.uniform() < g.slip_map[cell]) {
        int k = static_cast<int>(rng.index(kActions - 1));
        dir = k < action ? k : k + 1;  // uniform over the three other directions
    }
    int next = move(g, cell, dir);
    return {next, g.reward_map[next]};
}

struct ValueIterationResult {
    std::vector<double> values;
    std::vector<int> policy;  // greedy, ties broken by smallest action index
    std::vector<double> residual_trace;
    int sweeps = 0;
};

inline ValueIterationResult value_iteration(const GridworldSpec& g, double tol = 1e-10, int max_sweeps = 100000) {
    g.validate();
    const int n = g.cell_count();
    ValueIterationResult res;
    res.values.assign(n, 0.0);
    res.policy.assign(n, 0);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double residual = 0.0;
        std::vector<double> next(n, 0.0);
        for (int s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            int best_a = 0;
            for (int a = 0; a < kActions; ++a) {
                std::vector<double> p = transition_distribution(g, s, a);
                double q = 0.0;
                for (int sp = 0; sp < n; ++sp)
                    if (p[sp] > 0.0) q += p[sp] * (g.reward_map[sp] + g.gamma * res.values[sp]);
                if (q > best + 1e-15) {
                    best = q;
                    best_a = a;
                }
            }
            next[s] = best;
            res.policy[s] = best_a;
            residual = std::max(residual, std::fabs(next[s] - res.values[s]));
        }
        res.values = std::move(next);
        res.residual_trace.push_back(residual);
        res.sweeps = sweep + 1;
        if (residual <= tol) break;
    }
    return res;
}

// Observation encoding for function approximation: cell -> (x, y) in [-1, 1].
inline std::vector<double> encode_cell(const GridworldSpec& g, int cell) {
    double x = cell % g.width;
    double y = cell / g.width;
    return {g.width > 1 ? 2.0 * x / (g.width - 1) - 1.0 : 0.0,
            g.height > 1 ? 2.0 * y / (g.height - 1) - 1.0 : 0.0};
}

// Actions embed as the centers of four bins on [-1, 1].
inline double encode_action(int action) { return -0.75 + 0.5 * action; }

inline int decode_action(double a) {
    int bin = static_cast<int>(std::floor((a + 1.0) / 0.5));
    return std::clamp(bin, 0, kActions - 1);
}

using CellPolicy = std::function<int(int cell, Rng&)>;

inline CellPolicy epsilon_greedy_policy(std::vector<int> greedy, double epsilon) {
    return [greedy = std::move(greedy), epsilon](int cell, Rng& rng) {
        if (rng.uniform() < epsilon) return static_cast<int>(rng.index(kActions));
        return greedy[cell];
    };
}

inline CellPolicy random_policy() {
    return [](int, Rng& rng) { return static_cast<int>(rng.index(kActions)); };
}

inline int sample_start(const GridworldSpec& g, Rng& rng) {
    // Uniform over non-goal cells.
    std::vector<int> starts;
    for (int c = 0; c < g.cell_count(); ++c)
        if (!g.is_goal(c)) starts.push_back(c);
    if (starts.empty()) return static_cast<int>(rng.index(g.cell_count()));
    return starts[rng.index(starts.size())];
}

// Rolls out the behavior policy in fixed-length episodes and records flat
// transitions with encoded observations and actions.
inline Dataset generate_dataset(const GridworldSpec& g, const CellPolicy& policy, std::size_t n_transitions,
                                std::uint64_t seed, Domain domain, int episode_len = 40) {
    g.validate();
    if (n_transitions < 1) throw ArgumentError("generate_dataset: need at least one transition");
    Dataset ds;
    ds.d_s = 2;
    ds.d_a = 1;
    ds.meta.name = "gridworld";
    ds.meta.seed = seed;
    ds.meta.generator = "gridworld";
    Rng rng(substream(seed, "gridworld-rollout"));
    int cell = sample_start(g, rng);
    int steps_in_episode = 0;
    while (ds.records.size() < n_transitions) {
        if (steps_in_episode >= episode_len) {
            cell = sample_start(g, rng);
            steps_in_episode = 0;
        }
        int action = policy(cell, rng);
        auto [next, r] = step(g, cell, action, rng);
        Transition t;
        t.s = encode_cell(g, cell);
        t.a = {encode_action(action)};
        t.r = r;
        t.s_next = encode_cell(g, next);
        t.domain = domain;
        ds.records.push_back(std::move(t));
        cell = next;
        ++steps_in_episode;
    }
    return ds;
}

inline EpisodeStats evaluate_policy(const GridworldSpec& g, const CellPolicy& policy, int episodes, int horizon,
                                    std::uint64_t seed) {
    g.validate();
    std::vector<double> returns;
    returns.reserve(episodes);
    for (int ep = 0; ep < episodes; ++ep) {
        Rng rng(substream(seed, "gridworld-eval", static_cast<std::uint64_t>(ep)));
        int cell = sample_start(g, rng);
        double ret = 0.0;
        double discount = 1.0;
        for (int t = 0; t < horizon; ++t) {
            int action = policy(cell, rng);
            auto [next, r] = step(g, cell, action, rng);
            ret += discount * r;
            discount *= g.gamma;
            cell = next;
        }
        returns.push_back(ret);
    }
    return EpisodeStats::from_returns(std::move(returns));
}

// Mean optimal value over the start distribution; the exact reference the
// evaluation returns are compared against.
inline double optimal_mean_return(const GridworldSpec& g, const ValueIterationResult& vi) {
    double sum = 0.0;
    int count = 0;
    for (int c = 0; c < g.cell_count(); ++c)
        if (!g.is_goal(c)) {
            sum += vi.values[c];
            ++count;
        }
    if (count == 0) return mean_of(vi.values);
    return sum / count;
}

}  // namespace gridworld
}  // namespace lodada
