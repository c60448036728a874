#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lodada/classifier.hpp"
#include "lodada/cvae.hpp"
#include "lodada/errors.hpp"
#include "lodada/filtering.hpp"
#include "lodada/gridworld.hpp"
#include "lodada/iql.hpp"
#include "lodada/linear_gaussian.hpp"

namespace lodada {

// Run configuration: one JSON document covering the task (environment,
// dataset sizes, behavior policy) and every stage's hyperparameters.
// Unknown keys are rejected, with the offending path in the message.

struct TaskSpec {
    enum class Env { Gridworld, LinearGaussian };

    std::string name;
    Env env = Env::Gridworld;
    GridworldSpec grid_target, grid_source;
    LinearGaussianSpec lg_target, lg_source;
    std::size_t source_size = 20000;
    std::size_t target_size = 2000;
    int episode_len = 40;
    double behavior_epsilon = 0.3;    // gridworld: epsilon-greedy around the VI optimum
    double behavior_noise_std = 1.0;  // linear-gaussian: exploration noise on the LQR controller
    std::string source_path, target_path;  // explicit dataset files for cmd_run
};

struct LocalizeConfig {
    int k = 30;
    double delta = 1.5;
    bool union_clustering = false;
    int max_iters = 100;
    double tol = 1e-8;
};

struct EvalConfig {
    int episodes = 50;
    int horizon = 200;
};

struct RunConfig {
    TaskSpec task;
    LocalizeConfig localize;
    ClassifierConfig classifier;
    FilterConfig filter;
    CvaeConfig cvae;
    TrainConfig train;
    EvalConfig eval;
    bool normalize_states = false;
};

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::set<std::string>& known, const std::string& path) {
    if (!j.is_object()) throw ConfigError("config: '" + path + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw ConfigError("config: unknown key '" + path + "." + it.key() + "'");
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config: field '") + key + "' has the wrong type");
    }
}

inline Mat mat_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ConfigError("config: '" + path + "' must be a matrix (array of arrays)");
    Mat m(j.size(), j[0].size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (j[i].size() != m.cols) throw ConfigError("config: ragged matrix at '" + path + "'");
        for (std::size_t k = 0; k < m.cols; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

inline GridworldSpec parse_gridworld(const nlohmann::json& j, const std::string& path) {
    require_keys(j, {"width", "height", "slip", "slip_map", "goal_cell", "goal_reward", "reward_map", "gamma"},
                 path);
    int width = get_or(j, "width", 5);
    int height = get_or(j, "height", 5);
    double gamma = get_or(j, "gamma", 0.95);
    int goal_cell = get_or(j, "goal_cell", width * height - 1);
    double goal_reward = get_or(j, "goal_reward", 1.0);
    double slip = get_or(j, "slip", 0.05);
    GridworldSpec g = GridworldSpec::uniform(width, height, slip, goal_reward, goal_cell, gamma);
    if (j.contains("slip_map")) g.slip_map = j.at("slip_map").get<std::vector<double>>();
    if (j.contains("reward_map")) {
        g.reward_map = j.at("reward_map").get<std::vector<double>>();
        g.reward_map[goal_cell] = goal_reward;
    }
    g.validate();
    return g;
}

inline LinearGaussianSpec parse_linear_gaussian(const nlohmann::json& j, const std::string& path) {
    require_keys(j,
                 {"a", "b_mat", "bias", "region_centroids", "region_variances", "source_region_variances",
                  "state_cost", "action_cost", "gamma", "action_limit", "init_std"},
                 path);
    LinearGaussianSpec spec;
    if (!j.contains("a") || !j.contains("b_mat"))
        throw ConfigError("config: '" + path + "' requires 'a' and 'b_mat' matrices");
    spec.A = mat_from_json(j.at("a"), path + ".a");
    spec.B = mat_from_json(j.at("b_mat"), path + ".b_mat");
    spec.bias = get_or(j, "bias", std::vector<double>(spec.A.rows, 0.0));
    if (!j.contains("region_centroids") || !j.contains("region_variances"))
        throw ConfigError("config: '" + path + "' requires region_centroids and region_variances");
    spec.region_centroids = j.at("region_centroids").get<std::vector<std::vector<double>>>();
    std::vector<double> vars = j.at("region_variances").get<std::vector<double>>();
    if (vars.size() != spec.region_centroids.size())
        throw ConfigError("config: '" + path + "' region_variances size must match region_centroids");
    for (double v : vars)
        spec.region_noise_cov.push_back(Mat::diagonal(std::vector<double>(spec.A.rows, v)));
    spec.state_cost = get_or(j, "state_cost", 1.0);
    spec.action_cost = get_or(j, "action_cost", 0.1);
    spec.gamma = get_or(j, "gamma", 0.99);
    spec.action_limit = get_or(j, "action_limit", 2.0);
    spec.init_std = get_or(j, "init_std", 1.0);
    spec.validate();
    return spec;
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    detail::require_keys(
        j, {"task", "localize", "classifier", "filter", "cvae", "train", "eval", "normalize_states"}, "$");
    RunConfig cfg;

    if (!j.contains("task")) throw ConfigError("config: missing required section 'task'");
    const nlohmann::json& tj = j.at("task");
    detail::require_keys(tj,
                         {"name", "env", "gridworld", "linear_gaussian", "source_size", "target_size",
                          "episode_len", "behavior_epsilon", "behavior_noise_std", "source_slip",
                          "source_path", "target_path"},
                         "task");
    std::string env = detail::get_or<std::string>(tj, "env", "");
    if (env == "gridworld") {
        cfg.task.env = TaskSpec::Env::Gridworld;
        if (!tj.contains("gridworld")) throw ConfigError("config: task.env=gridworld needs a 'gridworld' section");
        cfg.task.grid_target = detail::parse_gridworld(tj.at("gridworld"), "task.gridworld");
        cfg.task.grid_source = cfg.task.grid_target;
        if (tj.contains("source_slip")) {
            double s = tj.at("source_slip").get<double>();
            std::fill(cfg.task.grid_source.slip_map.begin(), cfg.task.grid_source.slip_map.end(), s);
        }
    } else if (env == "linear_gaussian") {
        cfg.task.env = TaskSpec::Env::LinearGaussian;
        if (!tj.contains("linear_gaussian"))
            throw ConfigError("config: task.env=linear_gaussian needs a 'linear_gaussian' section");
        cfg.task.lg_target = detail::parse_linear_gaussian(tj.at("linear_gaussian"), "task.linear_gaussian");
        cfg.task.lg_source = cfg.task.lg_target;
        if (tj.at("linear_gaussian").contains("source_region_variances")) {
            std::vector<double> vars =
                tj.at("linear_gaussian").at("source_region_variances").get<std::vector<double>>();
            if (vars.size() != cfg.task.lg_source.region_centroids.size())
                throw ConfigError("config: source_region_variances size must match region_centroids");
            cfg.task.lg_source.region_noise_cov.clear();
            for (double v : vars)
                cfg.task.lg_source.region_noise_cov.push_back(
                    Mat::diagonal(std::vector<double>(cfg.task.lg_source.A.rows, v)));
            cfg.task.lg_source.validate();
        }
    } else {
        throw ConfigError("config: task.env must be 'gridworld' or 'linear_gaussian' (got '" + env + "')");
    }
    cfg.task.name = detail::get_or<std::string>(tj, "name", env);
    cfg.task.source_size = detail::get_or<std::size_t>(tj, "source_size", cfg.task.source_size);
    cfg.task.target_size = detail::get_or<std::size_t>(tj, "target_size", cfg.task.target_size);
    cfg.task.episode_len = detail::get_or(tj, "episode_len", cfg.task.episode_len);
    cfg.task.behavior_epsilon = detail::get_or(tj, "behavior_epsilon", cfg.task.behavior_epsilon);
    cfg.task.behavior_noise_std = detail::get_or(tj, "behavior_noise_std", cfg.task.behavior_noise_std);
    cfg.task.source_path = detail::get_or<std::string>(tj, "source_path", "");
    cfg.task.target_path = detail::get_or<std::string>(tj, "target_path", "");

    if (j.contains("localize")) {
        const nlohmann::json& lj = j.at("localize");
        detail::require_keys(lj, {"k", "delta", "union_clustering", "max_iters", "tol"}, "localize");
        cfg.localize.k = detail::get_or(lj, "k", cfg.localize.k);
        cfg.localize.delta = detail::get_or(lj, "delta", cfg.localize.delta);
        cfg.localize.union_clustering = detail::get_or(lj, "union_clustering", cfg.localize.union_clustering);
        cfg.localize.max_iters = detail::get_or(lj, "max_iters", cfg.localize.max_iters);
        cfg.localize.tol = detail::get_or(lj, "tol", cfg.localize.tol);
        if (cfg.localize.k < 1) throw ConfigError("config: localize.k must be >= 1");
        if (cfg.localize.delta <= 0.0) throw ConfigError("config: localize.delta must be positive");
    }
    if (j.contains("classifier")) {
        const nlohmann::json& cj = j.at("classifier");
        detail::require_keys(cj, {"hidden", "epochs", "patience", "lr", "batch", "input_noise_std", "min_per_class"},
                             "classifier");
        cfg.classifier.hidden = detail::get_or(cj, "hidden", cfg.classifier.hidden);
        cfg.classifier.epochs = detail::get_or(cj, "epochs", cfg.classifier.epochs);
        cfg.classifier.patience = detail::get_or(cj, "patience", cfg.classifier.patience);
        cfg.classifier.lr = detail::get_or(cj, "lr", cfg.classifier.lr);
        cfg.classifier.batch = detail::get_or(cj, "batch", cfg.classifier.batch);
        cfg.classifier.input_noise_std = detail::get_or(cj, "input_noise_std", cfg.classifier.input_noise_std);
        cfg.classifier.min_per_class = detail::get_or(cj, "min_per_class", cfg.classifier.min_per_class);
        if (cfg.classifier.input_noise_std < 0.0) throw ConfigError("config: classifier.input_noise_std must be >= 0");
    }
    if (j.contains("filter")) {
        const nlohmann::json& fj = j.at("filter");
        detail::require_keys(fj, {"xi", "alpha"}, "filter");
        if (fj.contains("xi")) {
            std::vector<double> xi = fj.at("xi").get<std::vector<double>>();
            if (xi.size() != 3) throw ConfigError("config: filter.xi must have exactly three entries");
            cfg.filter.xi1 = xi[0];
            cfg.filter.xi2 = xi[1];
            cfg.filter.xi3 = xi[2];
        }
        cfg.filter.alpha = detail::get_or(fj, "alpha", cfg.filter.alpha);
        cfg.filter.validate();
    }
    if (j.contains("cvae")) {
        const nlohmann::json& vj = j.at("cvae");
        detail::require_keys(vj, {"hidden", "latent_dim", "lr", "steps", "batch", "m_samples", "sigma_b"}, "cvae");
        cfg.cvae.hidden = detail::get_or(vj, "hidden", cfg.cvae.hidden);
        cfg.cvae.latent_dim = detail::get_or(vj, "latent_dim", cfg.cvae.latent_dim);
        cfg.cvae.lr = detail::get_or(vj, "lr", cfg.cvae.lr);
        cfg.cvae.steps = detail::get_or(vj, "steps", cfg.cvae.steps);
        cfg.cvae.batch = detail::get_or(vj, "batch", cfg.cvae.batch);
        cfg.cvae.m_samples = detail::get_or(vj, "m_samples", cfg.cvae.m_samples);
        cfg.cvae.sigma_b = detail::get_or(vj, "sigma_b", cfg.cvae.sigma_b);
        if (cfg.cvae.m_samples < 1) throw ConfigError("config: cvae.m_samples must be >= 1");
        if (cfg.cvae.sigma_b <= 0.0) throw ConfigError("config: cvae.sigma_b must be positive");
    }
    if (j.contains("train")) {
        const nlohmann::json& trj = j.at("train");
        detail::require_keys(trj,
                             {"gamma", "tau", "beta", "eta", "lambda", "exp_adv_clip", "lr", "hidden", "batch_size",
                              "gradient_steps", "loss_log_every"},
                             "train");
        cfg.train.gamma = detail::get_or(trj, "gamma", cfg.train.gamma);
        cfg.train.tau = detail::get_or(trj, "tau", cfg.train.tau);
        cfg.train.beta = detail::get_or(trj, "beta", cfg.train.beta);
        cfg.train.eta = detail::get_or(trj, "eta", cfg.train.eta);
        cfg.train.lambda = detail::get_or(trj, "lambda", cfg.train.lambda);
        cfg.train.exp_adv_clip = detail::get_or(trj, "exp_adv_clip", cfg.train.exp_adv_clip);
        cfg.train.lr = detail::get_or(trj, "lr", cfg.train.lr);
        cfg.train.hidden = detail::get_or(trj, "hidden", cfg.train.hidden);
        cfg.train.batch_size = detail::get_or(trj, "batch_size", cfg.train.batch_size);
        cfg.train.gradient_steps = detail::get_or(trj, "gradient_steps", cfg.train.gradient_steps);
        cfg.train.loss_log_every = detail::get_or(trj, "loss_log_every", cfg.train.loss_log_every);
        cfg.train.validate();
    }
    if (j.contains("eval")) {
        const nlohmann::json& ej = j.at("eval");
        detail::require_keys(ej, {"episodes", "horizon"}, "eval");
        cfg.eval.episodes = detail::get_or(ej, "episodes", cfg.eval.episodes);
        cfg.eval.horizon = detail::get_or(ej, "horizon", cfg.eval.horizon);
    }
    cfg.normalize_states = detail::get_or(j, "normalize_states", false);
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_run_config(j);
}

// Resolved-config echo: every field after defaulting, written into reports
// and artifact sidecars for provenance.
inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
    nlohmann::json tj{{"name", cfg.task.name},
                      {"env", cfg.task.env == TaskSpec::Env::Gridworld ? "gridworld" : "linear_gaussian"},
                      {"source_size", cfg.task.source_size},
                      {"target_size", cfg.task.target_size},
                      {"episode_len", cfg.task.episode_len},
                      {"behavior_epsilon", cfg.task.behavior_epsilon},
                      {"behavior_noise_std", cfg.task.behavior_noise_std}};
    if (!cfg.task.source_path.empty()) tj["source_path"] = cfg.task.source_path;
    if (!cfg.task.target_path.empty()) tj["target_path"] = cfg.task.target_path;
    if (cfg.task.env == TaskSpec::Env::Gridworld) {
        const GridworldSpec& g = cfg.task.grid_target;
        tj["gridworld"] = {{"width", g.width},   {"height", g.height},       {"slip_map", g.slip_map},
                           {"reward_map", g.reward_map}, {"gamma", g.gamma}, {"goal_cells", g.goal_cells}};
        tj["source_slip"] = cfg.task.grid_source.slip_map;
    } else {
        const LinearGaussianSpec& s = cfg.task.lg_target;
        auto diag_vars = [](const LinearGaussianSpec& spec) {
            std::vector<double> v;
            for (const Mat& cov : spec.region_noise_cov) v.push_back(cov(0, 0));
            return v;
        };
        nlohmann::json a_rows = nlohmann::json::array(), b_rows = nlohmann::json::array();
        for (std::size_t i = 0; i < s.A.rows; ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t k = 0; k < s.A.cols; ++k) row.push_back(s.A(i, k));
            a_rows.push_back(row);
        }
        for (std::size_t i = 0; i < s.B.rows; ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t k = 0; k < s.B.cols; ++k) row.push_back(s.B(i, k));
            b_rows.push_back(row);
        }
        tj["linear_gaussian"] = {{"a", a_rows},
                                 {"b_mat", b_rows},
                                 {"bias", s.bias},
                                 {"region_centroids", s.region_centroids},
                                 {"region_variances", diag_vars(s)},
                                 {"source_region_variances", diag_vars(cfg.task.lg_source)},
                                 {"state_cost", s.state_cost},
                                 {"action_cost", s.action_cost},
                                 {"gamma", s.gamma},
                                 {"action_limit", s.action_limit},
                                 {"init_std", s.init_std}};
    }
    return nlohmann::json{
        {"task", tj},
        {"localize",
         {{"k", cfg.localize.k},
          {"delta", std::isinf(cfg.localize.delta) ? nlohmann::json("inf") : nlohmann::json(cfg.localize.delta)},
          {"union_clustering", cfg.localize.union_clustering},
          {"max_iters", cfg.localize.max_iters},
          {"tol", cfg.localize.tol}}},
        {"classifier",
         {{"hidden", cfg.classifier.hidden},
          {"epochs", cfg.classifier.epochs},
          {"patience", cfg.classifier.patience},
          {"lr", cfg.classifier.lr},
          {"batch", cfg.classifier.batch},
          {"input_noise_std", cfg.classifier.input_noise_std},
          {"min_per_class", cfg.classifier.min_per_class}}},
        {"filter", {{"xi", {cfg.filter.xi1, cfg.filter.xi2, cfg.filter.xi3}}, {"alpha", cfg.filter.alpha}}},
        {"cvae",
         {{"hidden", cfg.cvae.hidden},
          {"latent_dim", cfg.cvae.latent_dim},
          {"lr", cfg.cvae.lr},
          {"steps", cfg.cvae.steps},
          {"batch", cfg.cvae.batch},
          {"m_samples", cfg.cvae.m_samples},
          {"sigma_b", cfg.cvae.sigma_b}}},
        {"train",
         {{"gamma", cfg.train.gamma},
          {"tau", cfg.train.tau},
          {"beta", cfg.train.beta},
          {"eta", cfg.train.eta},
          {"lambda", cfg.train.lambda},
          {"exp_adv_clip", cfg.train.exp_adv_clip},
          {"lr", cfg.train.lr},
          {"hidden", cfg.train.hidden},
          {"batch_size", cfg.train.batch_size},
          {"gradient_steps", cfg.train.gradient_steps},
          {"loss_log_every", cfg.train.loss_log_every}}},
        {"eval", {{"episodes", cfg.eval.episodes}, {"horizon", cfg.eval.horizon}}},
        {"normalize_states", cfg.normalize_states}};
}

}  // namespace lodada
