#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lodada/errors.hpp"
#include "lodada/stats.hpp"

namespace lodada {

// Aggregation of run reports into the (task, method) score table and the
// plot CSVs. Input is the report JSON written by cmd_run.

struct ResultRow {
    std::string task;
    std::string method;
    int seeds = 0;
    double mean_score = 0.0;
    double std_score = 0.0;  // n/a when seeds < 2
    double mean_return = 0.0;
};

struct ResultTable {
    std::vector<ResultRow> rows;
};

namespace detail {

inline std::string csv_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline ResultTable aggregate_reports(const std::vector<nlohmann::json>& reports) {
    if (reports.empty()) throw ArgumentError("aggregate_reports: no reports");
    std::map<std::pair<std::string, std::string>, std::vector<const nlohmann::json*>> groups;
    for (const nlohmann::json& r : reports) {
        std::string task = r.at("config").at("task").at("name").get<std::string>();
        std::string method = r.at("method").get<std::string>();
        groups[{task, method}].push_back(&r);
    }
    ResultTable table;
    for (const auto& [key, runs] : groups) {
        ResultRow row;
        row.task = key.first;
        row.method = key.second;
        std::vector<double> scores, returns;
        for (const nlohmann::json* r : runs) {
            if (!r->contains("evaluation")) continue;
            scores.push_back(r->at("evaluation").at("normalized_score").get<double>());
            returns.push_back(r->at("evaluation").at("mean_return").get<double>());
        }
        if (scores.empty()) throw DataError("aggregate_reports: run without evaluation for task '" + row.task + "'");
        row.seeds = static_cast<int>(scores.size());
        row.mean_score = mean_of(scores);
        row.std_score = scores.size() >= 2 ? stddev_of(scores) : 0.0;
        row.mean_return = mean_of(returns);
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline std::string result_table_to_text(const ResultTable& table) {
    std::string out = "task\tmethod\tseeds\tscore\n";
    for (const ResultRow& row : table.rows) {
        char buf[256];
        if (row.seeds >= 2)
            std::snprintf(buf, sizeof(buf), "%s\t%s\t%d\t%.2f +- %.2f\n", row.task.c_str(), row.method.c_str(),
                          row.seeds, row.mean_score, row.std_score);
        else
            std::snprintf(buf, sizeof(buf), "%s\t%s\t%d\t%.2f +- n/a\n", row.task.c_str(), row.method.c_str(),
                          row.seeds, row.mean_score);
        out += buf;
    }
    return out;
}

inline void write_result_table_csv(const ResultTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "task,method,seeds,mean_score,std_score,mean_return\n";
    for (const ResultRow& row : table.rows)
        out << row.task << ',' << row.method << ',' << row.seeds << ',' << detail::csv_double(row.mean_score) << ','
            << (row.seeds >= 2 ? detail::csv_double(row.std_score) : "n/a") << ','
            << detail::csv_double(row.mean_return) << '\n';
}

inline void write_loss_curves_csv(const nlohmann::json& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    const nlohmann::json& tr = report.at("train");
    const auto& lv = tr.at("loss_v");
    const auto& lq = tr.at("loss_q");
    const auto& lp = tr.at("loss_actor");
    int every = tr.at("loss_log_every").get<int>();
    out << "step,loss_v,loss_q,loss_actor\n";
    for (std::size_t i = 0; i < lv.size(); ++i)
        out << i * static_cast<std::size_t>(every) << ',' << detail::csv_double(lv[i].get<double>()) << ','
            << detail::csv_double(lq[i].get<double>()) << ',' << detail::csv_double(lp[i].get<double>()) << '\n';
}

inline void write_admission_csv(const std::vector<nlohmann::json>& reports, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "task,method,seed,tier,clusters,candidates,admitted\n";
    for (const nlohmann::json& r : reports) {
        const nlohmann::json& f = r.at("stages").at("filter");
        if (f.contains("skipped")) continue;
        for (const nlohmann::json& t : f.at("tiers"))
            out << r.at("config").at("task").at("name").get<std::string>() << ',' << r.at("method").get<std::string>()
                << ',' << r.at("seed").get<std::uint64_t>() << ',' << t.at("tier").get<int>() << ','
                << t.at("clusters").get<std::size_t>() << ',' << t.at("candidates").get<std::size_t>() << ','
                << t.at("admitted").get<std::size_t>() << '\n';
    }
}

// Score-vs-K rows for the cluster-count ablation; one row per K value found
// in the reports (requires every run to carry an evaluation).
inline void write_k_ablation_csv(const std::vector<nlohmann::json>& reports, const std::filesystem::path& path) {
    std::map<int, std::vector<double>> by_k;
    for (const nlohmann::json& r : reports) {
        if (!r.contains("evaluation")) continue;
        int k = r.at("config").at("localize").at("k").get<int>();
        by_k[k].push_back(r.at("evaluation").at("normalized_score").get<double>());
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "k,seeds,mean_score,std_score\n";
    for (const auto& [k, scores] : by_k)
        out << k << ',' << scores.size() << ',' << detail::csv_double(mean_of(scores)) << ','
            << (scores.size() >= 2 ? detail::csv_double(stddev_of(scores)) : "n/a") << '\n';
}

}  // namespace lodada
