#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lodada/checkpoint.hpp"
#include "lodada/classifier.hpp"
#include "lodada/config.hpp"
#include "lodada/cvae.hpp"
#include "lodada/filtering.hpp"
#include "lodada/gridworld.hpp"
#include "lodada/iql.hpp"
#include "lodada/kmeans.hpp"
#include "lodada/linear_gaussian.hpp"
#include "lodada/rng.hpp"
#include "lodada/transition.hpp"

namespace lodada {

enum class Method { Lodada, IqlPooled, IqlTargetOnly };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::Lodada: return "lodada";
        case Method::IqlPooled: return "iql-pooled";
        case Method::IqlTargetOnly: return "iql-target-only";
    }
    return "lodada";
}

inline Method method_from_name(const std::string& s) {
    if (s == "lodada") return Method::Lodada;
    if (s == "iql-pooled") return Method::IqlPooled;
    if (s == "iql-target-only") return Method::IqlTargetOnly;
    throw ConfigError("unknown method '" + s + "' (expected lodada, iql-pooled or iql-target-only)");
}

// Generates a behavior dataset for one domain of the task. Gridworld uses an
// epsilon-greedy policy around that domain's value-iteration optimum;
// linear-Gaussian uses the LQR controller with exploration noise.
inline Dataset generate_task_dataset(const TaskSpec& task, Domain domain, std::uint64_t seed) {
    Dataset ds;
    if (task.env == TaskSpec::Env::Gridworld) {
        const GridworldSpec& spec = domain == Domain::Source ? task.grid_source : task.grid_target;
        std::size_t n = domain == Domain::Source ? task.source_size : task.target_size;
        gridworld::ValueIterationResult vi = gridworld::value_iteration(spec, 1e-10);
        ds = gridworld::generate_dataset(spec, gridworld::epsilon_greedy_policy(vi.policy, task.behavior_epsilon),
                                         n, seed, domain, task.episode_len);
    } else {
        const LinearGaussianSpec& spec = domain == Domain::Source ? task.lg_source : task.lg_target;
        std::size_t n = domain == Domain::Source ? task.source_size : task.target_size;
        Mat gain = lingauss::lqr_gain(spec);
        ds = lingauss::generate_dataset(spec, lingauss::linear_feedback_policy(spec, gain, task.behavior_noise_std),
                                        n, seed, domain, task.episode_len);
    }
    ds.meta.name = task.name + "-" + domain_name(domain);
    return ds;
}

struct EvalOutcome {
    EpisodeStats stats;
    double j_random = 0.0;
    double j_expert = 0.0;
    double score = 0.0;  // normalized
};

// Deterministic mean-action evaluation of an actor in the target environment,
// with the random/expert reference returns computed under the same protocol.
inline EvalOutcome evaluate_actor_in_task(const TaskSpec& task, const PolicyBundle& bundle, const TrainConfig& tcfg,
                                          const std::optional<NormStats>& obs_norm, const EvalConfig& ecfg,
                                          std::uint64_t eval_seed) {
    auto normalize = [&obs_norm](std::vector<double> obs) {
        if (obs_norm)
            for (std::size_t i = 0; i < obs.size(); ++i) obs[i] = (obs[i] - obs_norm->mean[i]) / obs_norm->std[i];
        return obs;
    };
    EvalOutcome out;
    if (task.env == TaskSpec::Env::Gridworld) {
        const GridworldSpec& spec = task.grid_target;
        gridworld::ValueIterationResult vi = gridworld::value_iteration(spec, 1e-10);
        gridworld::CellPolicy actor_policy = [&](int cell, Rng&) {
            std::vector<double> obs = normalize(gridworld::encode_cell(spec, cell));
            ActorDist d = actor_forward(bundle, obs, tcfg);
            return gridworld::decode_action(d.mean[0]);
        };
        out.stats = gridworld::evaluate_policy(spec, actor_policy, ecfg.episodes, ecfg.horizon,
                                               substream(eval_seed, "eval-actor"));
        out.j_random = gridworld::evaluate_policy(spec, gridworld::random_policy(), ecfg.episodes, ecfg.horizon,
                                                  substream(eval_seed, "eval-random"))
                           .mean;
        gridworld::CellPolicy oracle = [&vi](int cell, Rng&) { return vi.policy[cell]; };
        out.j_expert =
            gridworld::evaluate_policy(spec, oracle, ecfg.episodes, ecfg.horizon, substream(eval_seed, "eval-oracle"))
                .mean;
    } else {
        const LinearGaussianSpec& spec = task.lg_target;
        lingauss::StatePolicy actor_policy = [&](const std::vector<double>& s, Rng&) {
            std::vector<double> obs = normalize(s);
            ActorDist d = actor_forward(bundle, obs, tcfg);
            return lingauss::clamp_action(spec, d.mean);
        };
        out.stats = lingauss::evaluate_policy(spec, actor_policy, ecfg.episodes, ecfg.horizon,
                                              substream(eval_seed, "eval-actor"));
        out.j_random = lingauss::evaluate_policy(spec, lingauss::random_policy(spec), ecfg.episodes, ecfg.horizon,
                                                 substream(eval_seed, "eval-random"))
                           .mean;
        Mat gain = lingauss::lqr_gain(spec);
        out.j_expert = lingauss::evaluate_policy(spec, lingauss::linear_feedback_policy(spec, gain, 0.0),
                                                 ecfg.episodes, ecfg.horizon, substream(eval_seed, "eval-oracle"))
                           .mean;
    }
    out.score = normalized_score(out.stats.mean, out.j_random, out.j_expert);
    return out;
}

struct RunResult {
    Method method = Method::Lodada;
    std::uint64_t seed = 0;
    RunConfig config;
    DatasetMeta source_meta, target_meta;
    std::size_t source_size = 0, target_size = 0;

    ClusterModel clusters;
    SourceAssignment assignment;
    DivergenceReport divergence;
    WeightedDataset weighted;
    std::vector<double> cvae_loss_trace;
    bool cvae_trained = false;
    bool filtering_ran = false;

    PolicyBundle bundle;
    std::vector<double> loss_v, loss_q, loss_actor;  // full per-step traces
    std::optional<EvalOutcome> eval;
    std::optional<NormStats> obs_norm;

    nlohmann::json timings;  // wall-clock seconds per stage; excluded from determinism
};

namespace detail {

inline std::vector<double> downsample(const std::vector<double>& xs, int every) {
    if (every <= 1) return xs;
    std::vector<double> out;
    out.reserve(xs.size() / every + 1);
    for (std::size_t i = 0; i < xs.size(); i += static_cast<std::size_t>(every)) out.push_back(xs[i]);
    return out;
}

class StageClock {
  public:
    explicit StageClock(nlohmann::json& sink) : sink_(sink) {}
    void lap(const char* stage) {
        auto now = std::chrono::steady_clock::now();
        sink_[stage] = std::chrono::duration<double>(now - last_).count();
        last_ = now;
    }

  private:
    nlohmann::json& sink_;
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace detail

// The full training pipeline: (optional) normalization, CVAE behavior model,
// next-state clustering, per-cluster domain classifiers and KL estimates,
// tiered filtering with critic weights, then the IQL-style gradient loop.
// iql-pooled is exactly the neutral configuration (alpha=0, lambda=0,
// xi=(100,100,100), delta=inf); iql-target-only skips the source dataset and
// all filtering stages. Fully deterministic given (datasets, config, seed).
inline RunResult run_lodada(const Dataset& source, const Dataset& target, const RunConfig& cfg, std::uint64_t seed,
                            Method method = Method::Lodada) {
    if (target.records.empty()) throw DataError("run: empty target dataset");
    if (method != Method::IqlTargetOnly && source.records.empty()) throw DataError("run: empty source dataset");
    if (method != Method::IqlTargetOnly && (source.d_s != target.d_s || source.d_a != target.d_a))
        throw DataError("run: source/target dimension mismatch");

    RunConfig eff = cfg;
    if (method == Method::IqlPooled) {
        eff.filter.alpha = 0.0;
        eff.filter.xi1 = eff.filter.xi2 = eff.filter.xi3 = 100.0;
        eff.train.lambda = 0.0;
        eff.localize.delta = std::numeric_limits<double>::infinity();
    }
    if (method == Method::IqlTargetOnly) eff.train.lambda = 0.0;

    RunResult res;
    res.method = method;
    res.seed = seed;
    res.config = eff;
    res.source_meta = source.meta;
    res.target_meta = target.meta;
    res.source_size = source.size();
    res.target_size = target.size();
    detail::StageClock clock(res.timings);

    // Optional state normalization from the union dataset.
    Dataset src_n = source, tar_n = target;
    if (eff.normalize_states) {
        Dataset unioned = target;
        unioned.records.insert(unioned.records.end(), source.records.begin(), source.records.end());
        NormStats st = normalization_stats(unioned);
        res.obs_norm = st;
        src_n = normalize_states(source, st);
        tar_n = normalize_states(target, st);
    }
    clock.lap("normalize");

    std::optional<CvaeModel> cvae;
    if (eff.train.lambda > 0.0) {
        cvae = train_cvae(tar_n, eff.cvae, substream(seed, "cvae"));
        res.cvae_loss_trace = cvae->loss_trace;
        res.cvae_trained = true;
    }
    clock.lap("cvae");

    std::vector<std::vector<std::size_t>> cluster_source_indices;
    if (method != Method::IqlTargetOnly) {
        // Localize: cluster target next states (default) or the union, then
        // assign source records under the diameter threshold.
        std::vector<std::vector<double>> points;
        points.reserve(tar_n.size() + (eff.localize.union_clustering ? src_n.size() : 0));
        for (const Transition& t : tar_n.records) points.push_back(t.s_next);
        if (eff.localize.union_clustering)
            for (const Transition& t : src_n.records) points.push_back(t.s_next);
        res.clusters = kmeans_fit(points, eff.localize.k, substream(seed, "kmeans"), eff.localize.max_iters,
                                  eff.localize.tol);
        if (eff.localize.union_clustering) {
            // Radii and memberships restricted to target points so the
            // divergence stage sees target-only clusters.
            ClusterModel trimmed = res.clusters;
            for (int c = 0; c < trimmed.k; ++c) {
                trimmed.members[c].clear();
                trimmed.radii[c] = 0.0;
            }
            for (int c = 0; c < res.clusters.k; ++c)
                for (std::size_t idx : res.clusters.members[c])
                    if (idx < tar_n.size()) {
                        trimmed.members[c].push_back(idx);
                        trimmed.radii[c] = std::max(
                            trimmed.radii[c],
                            std::sqrt(squared_distance(tar_n.records[idx].s_next, trimmed.centroids[c])));
                    }
            double r = 0.0;
            for (double ri : trimmed.radii) r += ri;
            trimmed.mean_radius = r / static_cast<double>(trimmed.k);
            res.clusters = std::move(trimmed);
        }
        std::vector<std::vector<double>> src_next;
        src_next.reserve(src_n.size());
        for (const Transition& t : src_n.records) src_next.push_back(t.s_next);
        res.assignment = assign_source(res.clusters, src_next, eff.localize.delta);
        cluster_source_indices.assign(eff.localize.k, {});
        for (std::size_t i = 0; i < res.assignment.cluster.size(); ++i)
            if (res.assignment.accepted[i]) cluster_source_indices[res.assignment.cluster[i]].push_back(i);
        clock.lap("localize");

        // Per-cluster domain classifiers and KL estimates. The cluster KL is
        // the mean of its points' estimates by construction.
        res.divergence.pointwise.assign(src_n.size(), std::numeric_limits<double>::quiet_NaN());
        for (int c = 0; c < eff.localize.k; ++c) {
            std::vector<std::vector<double>> z_tar, z_src;
            z_tar.reserve(res.clusters.members[c].size());
            for (std::size_t idx : res.clusters.members[c]) z_tar.push_back(concat(tar_n.records[idx]));
            z_src.reserve(cluster_source_indices[c].size());
            for (std::size_t idx : cluster_source_indices[c]) z_src.push_back(concat(src_n.records[idx]));

            ClusterClassifier clf =
                train_classifier(z_tar, z_src, eff.classifier, substream(seed, "classifier", c), c);
            ClusterDivergence cd;
            cd.cluster = c;
            cd.n0 = z_src.size();
            cd.n1 = z_tar.size();
            cd.prior_a = clf.prior_a;
            cd.degenerate = clf.degenerate;
            if (clf.degenerate) {
                cd.kl = std::numeric_limits<double>::infinity();
                for (std::size_t idx : cluster_source_indices[c]) res.divergence.pointwise[idx] = 0.0;
            } else {
                double sum = 0.0;
                for (std::size_t k = 0; k < cluster_source_indices[c].size(); ++k) {
                    double d = pointwise_kl(clf, z_src[k]);
                    res.divergence.pointwise[cluster_source_indices[c][k]] = d;
                    sum += d;
                }
                cd.kl = sum / static_cast<double>(cluster_source_indices[c].size());
            }
            res.divergence.clusters.push_back(cd);
        }
        res.divergence.ranking = rank_clusters(res.divergence.clusters);
        clock.lap("divergence");

        std::vector<ClusterAdmission> admissions =
            filter_sources(res.divergence, cluster_source_indices, eff.filter);
        res.weighted =
            build_weighted_dataset(res.divergence, admissions, cluster_source_indices, src_n.size(), eff.filter);
        res.filtering_ran = true;
        clock.lap("filter");
    }

    // Gradient loop: V, Q, target, actor per step, batches split half source
    // half target (target-only runs draw the whole batch from the target).
    res.bundle = make_policy_bundle(target.d_s, target.d_a, eff.train, substream(seed, "policy"));
    Rng batch_rng(substream(seed, "batch"));
    Rng reg_rng(substream(seed, "actor-reg"));
    const int steps = eff.train.gradient_steps;
    res.loss_v.reserve(steps);
    res.loss_q.reserve(steps);
    res.loss_actor.reserve(steps);
    const bool have_source = method != Method::IqlTargetOnly && !res.weighted.admitted.empty();
    const int half = eff.train.batch_size / 2;
    Batch src_batch, tar_batch, combined;
    for (int step = 0; step < steps; ++step) {
        src_batch.clear();
        tar_batch.clear();
        combined.clear();
        if (have_source) {
            for (int i = 0; i < half; ++i) {
                const WeightedRecord& rec = res.weighted.admitted[batch_rng.index(res.weighted.admitted.size())];
                src_batch.push_back({&src_n.records[rec.source_index], rec.weight});
            }
            for (int i = 0; i < eff.train.batch_size - half; ++i)
                tar_batch.push_back({&tar_n.records[batch_rng.index(tar_n.size())], 1.0});
        } else {
            for (int i = 0; i < eff.train.batch_size; ++i)
                tar_batch.push_back({&tar_n.records[batch_rng.index(tar_n.size())], 1.0});
        }
        combined = src_batch;
        combined.insert(combined.end(), tar_batch.begin(), tar_batch.end());

        res.loss_v.push_back(update_value(res.bundle, combined, eff.train.tau));
        res.loss_q.push_back(update_q(res.bundle, tar_batch, src_batch, eff.train.gamma));
        polyak_update(res.bundle, eff.train.eta);
        res.loss_actor.push_back(update_actor(res.bundle, cvae ? &*cvae : nullptr, combined, eff.train,
                                              eff.cvae.m_samples, eff.cvae.sigma_b, reg_rng));
        ++res.bundle.step;
    }
    clock.lap("train");

    if (cfg.eval.episodes > 0) {
        res.eval = evaluate_actor_in_task(cfg.task, res.bundle, eff.train, res.obs_norm, cfg.eval, seed);
        clock.lap("evaluate");
    }
    return res;
}

inline nlohmann::json run_report_to_json(const RunResult& res) {
    nlohmann::json j;
    j["method"] = method_name(res.method);
    j["seed"] = res.seed;
    j["config"] = run_config_to_json(res.config);
    j["datasets"] = {{"source", {{"name", res.source_meta.name}, {"seed", res.source_meta.seed}, {"size", res.source_size}}},
                     {"target", {{"name", res.target_meta.name}, {"seed", res.target_meta.seed}, {"size", res.target_size}}}};
    if (res.obs_norm) j["obs_norm"] = {{"mean", res.obs_norm->mean}, {"std", res.obs_norm->std}};

    nlohmann::json stages;
    stages["cvae"] = res.cvae_trained
                         ? nlohmann::json{{"trained", true},
                                          {"steps", res.cvae_loss_trace.size()},
                                          {"final_loss", res.cvae_loss_trace.empty() ? 0.0 : res.cvae_loss_trace.back()}}
                         : nlohmann::json{{"trained", false}};
    if (res.filtering_ran) {
        std::vector<std::size_t> sizes;
        for (const auto& m : res.clusters.members) sizes.push_back(m.size());
        stages["localize"] = {{"k", res.clusters.k},
                              {"mean_radius", res.clusters.mean_radius},
                              {"objective", res.clusters.objective},
                              {"target_cluster_sizes", sizes},
                              {"source_accepted", res.assignment.accepted_count()},
                              {"source_rejected", res.assignment.cluster.size() - res.assignment.accepted_count()}};
        stages["divergence"] = divergence_report_to_json(res.divergence);
        stages["filter"] = weighted_summary_to_json(res.weighted);
    } else {
        stages["localize"] = {{"skipped", true}};
        stages["divergence"] = {{"skipped", true}};
        stages["filter"] = {{"skipped", true}};
    }
    j["stages"] = stages;

    const int every = res.config.train.loss_log_every;
    j["train"] = {{"gradient_steps", res.loss_v.size()},
                  {"loss_log_every", every},
                  {"loss_v", detail::downsample(res.loss_v, every)},
                  {"loss_q", detail::downsample(res.loss_q, every)},
                  {"loss_actor", detail::downsample(res.loss_actor, every)}};
    if (res.eval) {
        j["evaluation"] = {{"episodes", res.eval->stats.returns.size()},
                           {"returns", res.eval->stats.returns},
                           {"mean_return", res.eval->stats.mean},
                           {"std_return", res.eval->stats.std},
                           {"j_random", res.eval->j_random},
                           {"j_expert", res.eval->j_expert},
                           {"normalized_score", res.eval->score}};
    }
    j["timings"] = res.timings;
    return j;
}

}  // namespace lodada
