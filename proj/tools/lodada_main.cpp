#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lodada/cli.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t comma = s.find(',', pos);
        std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!tok.empty()) seeds.push_back(std::stoull(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (seeds.empty()) throw lodada::ConfigError("--seed: expected N or a comma-separated list");
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LoDADA: localized dynamics-aware domain adaptation for off-dynamics offline RL"};
    app.require_subcommand(1);

    std::string config_path;
    std::string seed_arg = "0";
    std::string method_arg = "lodada";
    std::string out_dir = "runs";
    int episodes = 0;

    auto* generate = app.add_subcommand("generate", "Generate source/target datasets from the config");
    generate->add_option("--config", config_path, "Run config JSON")->required();
    generate->add_option("--seed", seed_arg, "Data seed");
    generate->add_option("--out", out_dir, "Output directory");

    auto* run = app.add_subcommand("run", "Run the training pipeline and write reports");
    run->add_option("--config", config_path, "Run config JSON")->required();
    run->add_option("--seed", seed_arg, "Seed or comma-separated seed sweep");
    run->add_option("--method", method_arg, "lodada | iql-pooled | iql-target-only");
    run->add_option("--out", out_dir, "Output directory (also where datasets are looked up)");

    std::string checkpoint_prefix;
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint in the config's target environment");
    evaluate->add_option("checkpoint", checkpoint_prefix, "Checkpoint prefix (without .json/.bin)")->required();
    evaluate->add_option("--config", config_path, "Run config JSON")->required();
    evaluate->add_option("--episodes", episodes, "Evaluation episodes (default from config)");
    evaluate->add_option("--seed", seed_arg, "Evaluation seed");

    std::vector<std::string> run_dirs;
    auto* report = app.add_subcommand("report", "Aggregate run reports into a score table and plot CSVs");
    report->add_option("dirs", run_dirs, "Run directories or report.json files")->required();
    report->add_option("--out", out_dir, "Output directory for CSVs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            lodada::RunConfig cfg = lodada::load_run_config(config_path);
            lodada::cmd_generate(cfg, parse_seed_list(seed_arg).front(), out_dir);
        } else if (run->parsed()) {
            lodada::RunConfig cfg = lodada::load_run_config(config_path);
            lodada::Method method = lodada::method_from_name(method_arg);
            std::vector<std::uint64_t> seeds = parse_seed_list(seed_arg);
            std::vector<lodada::RunPaths> paths = lodada::cmd_run(cfg, seeds, method, out_dir);
            if (seeds.size() > 1) {
                std::vector<std::filesystem::path> dirs;
                for (const auto& p : paths) dirs.push_back(p.dir);
                lodada::ResultTable table = lodada::cmd_report(dirs, out_dir);
                std::fputs(lodada::result_table_to_text(table).c_str(), stdout);
            }
        } else if (evaluate->parsed()) {
            lodada::RunConfig cfg = lodada::load_run_config(config_path);
            lodada::EvaluateOutcome out =
                lodada::cmd_evaluate(checkpoint_prefix, cfg, episodes, parse_seed_list(seed_arg).front());
            std::printf("episodes: %zu\nmean_return: %.6f\nstd_return: %.6f\nj_random: %.6f\nj_expert: %.6f\n"
                        "normalized_score: %.4f\n",
                        out.stats.returns.size(), out.stats.mean, out.stats.std, out.j_random, out.j_expert,
                        out.score);
        } else if (report->parsed()) {
            std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
            lodada::ResultTable table = lodada::cmd_report(dirs, out_dir);
            std::fputs(lodada::result_table_to_text(table).c_str(), stdout);
        }
    } catch (const lodada::ConfigError& e) {
        lodada::log_error(e.what());
        return 1;
    } catch (const lodada::ArgumentError& e) {
        lodada::log_error(e.what());
        return 1;
    } catch (const lodada::DataError& e) {
        lodada::log_error(e.what());
        return 2;
    } catch (const lodada::TrainError& e) {
        lodada::log_error(e.what());
        return 3;
    } catch (const std::exception& e) {
        lodada::log_error(e.what());
        return 3;
    }
    return 0;
}
