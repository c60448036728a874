#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lodada/checkpoint.hpp"
#include "lodada/config.hpp"
#include "lodada/dataset_io.hpp"
#include "lodada/log.hpp"
#include "lodada/parallel.hpp"
#include "lodada/pipeline.hpp"
#include "lodada/report.hpp"

namespace lodada {

// Command implementations behind the CLI binary; kept header-side so tests
// can drive them directly. Exit codes: 0 ok, 1 config, 2 data, 3 training.

namespace detail {

inline void write_json_file(const nlohmann::json& j, const std::filesystem::path& path, int indent = 2) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << j.dump(indent) << '\n';
}

inline void write_weighted_jsonl(const WeightedDataset& wd, const Dataset& source,
                                 const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    nlohmann::json header{{"d_s", source.d_s}, {"d_a", source.d_a}, {"name", source.meta.name + "-filtered"}};
    out << header.dump() << '\n';
    for (const WeightedRecord& rec : wd.admitted) {
        const Transition& t = source.records[rec.source_index];
        nlohmann::json j{{"s", t.s},           {"a", t.a},      {"r", t.r},       {"s_next", t.s_next},
                         {"domain", domain_name(t.domain)}, {"cluster", rec.cluster}, {"d", rec.d},
                         {"d_hat", rec.d_hat}, {"weight", rec.weight}};
        out << j.dump() << '\n';
    }
}

inline void write_pointwise_csv(const DivergenceReport& report, const SourceAssignment& assignment,
                                const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "index,cluster,d\n";
    for (std::size_t i = 0; i < report.pointwise.size(); ++i) {
        if (!assignment.accepted[i]) continue;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", report.pointwise[i]);
        out << i << ',' << assignment.cluster[i] << ',' << buf << '\n';
    }
}

}  // namespace detail

// generate: roll out the behavior policies and write source/target JSONL
// files plus the resolved config for provenance.
inline void cmd_generate(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    Dataset source = generate_task_dataset(cfg.task, Domain::Source, substream(seed, "data-source"));
    Dataset target = generate_task_dataset(cfg.task, Domain::Target, substream(seed, "data-target"));
    save_dataset(source, out_dir / "source.jsonl");
    save_dataset(target, out_dir / "target.jsonl");
    nlohmann::json echo = run_config_to_json(cfg);
    echo["seed"] = seed;
    detail::write_json_file(echo, out_dir / "config.resolved.json");
    log_info("wrote " + std::to_string(source.size()) + " source and " + std::to_string(target.size()) +
             " target transitions to " + out_dir.string());
}

struct RunPaths {
    std::filesystem::path dir;
    std::filesystem::path report;
};

// run: load datasets, execute the pipeline for every seed (in parallel
// processes' worth of threads), and write the per-run artifacts.
inline std::vector<RunPaths> cmd_run(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds, Method method,
                                     const std::filesystem::path& out_dir, unsigned threads = 2) {
    std::filesystem::path src_path =
        cfg.task.source_path.empty() ? out_dir / "source.jsonl" : std::filesystem::path(cfg.task.source_path);
    std::filesystem::path tar_path =
        cfg.task.target_path.empty() ? out_dir / "target.jsonl" : std::filesystem::path(cfg.task.target_path);
    if (!std::filesystem::exists(src_path)) throw DataError("missing source dataset file '" + src_path.string() + "'");
    if (!std::filesystem::exists(tar_path)) throw DataError("missing target dataset file '" + tar_path.string() + "'");
    const Dataset source = load_dataset(src_path);
    const Dataset target = load_dataset(tar_path);

    std::vector<RunPaths> paths(seeds.size());
    parallel_for(seeds.size(), threads, [&](std::size_t i) {
        const std::uint64_t seed = seeds[i];
        RunResult res = run_lodada(source, target, cfg, seed, method);
        std::filesystem::path dir =
            out_dir / (std::string(method_name(method)) + "-seed" + std::to_string(seed));
        std::filesystem::create_directories(dir);
        nlohmann::json report = run_report_to_json(res);
        detail::write_json_file(report, dir / "report.json");
        Checkpoint ck;
        ck.kind = "gaussian_mlp";
        ck.d_s = res.bundle.d_s;
        ck.d_a = res.bundle.d_a;
        ck.bundle = res.bundle;
        ck.obs_norm = res.obs_norm;
        ck.config_echo = run_config_to_json(res.config);
        save_checkpoint(ck, dir / "checkpoint");
        if (res.filtering_ran) {
            detail::write_json_file(cluster_model_to_json(res.clusters), dir / "cluster_model.json");
            detail::write_json_file(divergence_report_to_json(res.divergence), dir / "divergence.json");
            detail::write_pointwise_csv(res.divergence, res.assignment, dir / "d_points.csv");
            detail::write_weighted_jsonl(res.weighted, source, dir / "weighted.jsonl");
            detail::write_json_file(weighted_summary_to_json(res.weighted), dir / "filter_summary.json");
        }
        write_loss_curves_csv(report, dir / "losses.csv");
        paths[i] = {dir, dir / "report.json"};
        if (res.eval)
            log_info(std::string(method_name(method)) + " seed " + std::to_string(seed) +
                     ": normalized score = " + std::to_string(res.eval->score));
    });
    return paths;
}

struct EvaluateOutcome {
    EpisodeStats stats;
    double j_random = 0.0, j_expert = 0.0, score = 0.0;
};

// evaluate: deterministic rollouts of a checkpoint's mean action in the
// config's target environment. Baseline checkpoint kinds score the uniform
// random policy and the environment oracle through the same path.
inline EvaluateOutcome cmd_evaluate(const std::filesystem::path& checkpoint_prefix, const RunConfig& cfg,
                                    int episodes, std::uint64_t seed) {
    Checkpoint ck = load_checkpoint(checkpoint_prefix);
    EvalConfig ecfg = cfg.eval;
    if (episodes > 0) ecfg.episodes = episodes;
    EvaluateOutcome out;
    const TaskSpec& task = cfg.task;

    if (ck.kind == "gaussian_mlp") {
        int want_ds = task.env == TaskSpec::Env::Gridworld ? 2 : task.lg_target.d_s();
        int want_da = task.env == TaskSpec::Env::Gridworld ? 1 : task.lg_target.d_a();
        if (ck.d_s != want_ds || ck.d_a != want_da)
            throw DataError("checkpoint dimensions (" + std::to_string(ck.d_s) + "," + std::to_string(ck.d_a) +
                            ") do not match the environment (" + std::to_string(want_ds) + "," +
                            std::to_string(want_da) + ")");
        EvalOutcome ev = evaluate_actor_in_task(task, ck.bundle, cfg.train, ck.obs_norm, ecfg, seed);
        out.stats = ev.stats;
        out.j_random = ev.j_random;
        out.j_expert = ev.j_expert;
        out.score = ev.score;
        return out;
    }

    // Baseline kinds.
    if (task.env == TaskSpec::Env::Gridworld) {
        const GridworldSpec& spec = task.grid_target;
        gridworld::ValueIterationResult vi = gridworld::value_iteration(spec, 1e-10);
        gridworld::CellPolicy policy =
            ck.kind == "oracle" ? gridworld::CellPolicy([&vi](int cell, Rng&) { return vi.policy[cell]; })
                                : gridworld::random_policy();
        out.stats = gridworld::evaluate_policy(spec, policy, ecfg.episodes, ecfg.horizon, substream(seed, "eval-actor"));
        out.j_random = gridworld::evaluate_policy(spec, gridworld::random_policy(), ecfg.episodes, ecfg.horizon,
                                                  substream(seed, "eval-random"))
                           .mean;
        gridworld::CellPolicy oracle = [&vi](int cell, Rng&) { return vi.policy[cell]; };
        out.j_expert =
            gridworld::evaluate_policy(spec, oracle, ecfg.episodes, ecfg.horizon, substream(seed, "eval-oracle")).mean;
    } else {
        const LinearGaussianSpec& spec = task.lg_target;
        Mat gain = lingauss::lqr_gain(spec);
        lingauss::StatePolicy policy = ck.kind == "oracle" ? lingauss::linear_feedback_policy(spec, gain, 0.0)
                                                           : lingauss::random_policy(spec);
        out.stats = lingauss::evaluate_policy(spec, policy, ecfg.episodes, ecfg.horizon, substream(seed, "eval-actor"));
        out.j_random = lingauss::evaluate_policy(spec, lingauss::random_policy(spec), ecfg.episodes, ecfg.horizon,
                                                 substream(seed, "eval-random"))
                           .mean;
        out.j_expert = lingauss::evaluate_policy(spec, lingauss::linear_feedback_policy(spec, gain, 0.0),
                                                 ecfg.episodes, ecfg.horizon, substream(seed, "eval-oracle"))
                           .mean;
    }
    out.score = normalized_score(out.stats.mean, out.j_random, out.j_expert);
    return out;
}

// report: aggregate one or more run directories into the score table and
// plot CSVs.
inline ResultTable cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                              const std::filesystem::path& out_dir) {
    std::vector<nlohmann::json> reports;
    for (const std::filesystem::path& dir : run_dirs) {
        std::filesystem::path file = std::filesystem::is_directory(dir) ? dir / "report.json" : dir;
        std::ifstream in(file);
        if (!in) throw DataError("cannot open run report '" + file.string() + "'");
        reports.push_back(nlohmann::json::parse(in));
    }
    if (reports.empty()) throw DataError("report: no run reports found");
    std::string env = reports.front().at("config").at("task").at("env").get<std::string>();
    for (const nlohmann::json& r : reports)
        if (r.at("config").at("task").at("env").get<std::string>() != env)
            throw DataError("report: runs mix incompatible environments");
    ResultTable table = aggregate_reports(reports);
    std::filesystem::create_directories(out_dir);
    write_result_table_csv(table, out_dir / "results.csv");
    write_admission_csv(reports, out_dir / "admission.csv");
    write_k_ablation_csv(reports, out_dir / "ablation_k.csv");
    return table;
}

}  // namespace lodada
