#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "lodada/errors.hpp"
#include "lodada/transition.hpp"

namespace lodada {

// Dataset files are JSON Lines: a single header record
//   {"d_s":int,"d_a":int,"name":str}   (writer adds "seed" and "generator")
// followed by one transition per line:
//   {"s":[...],"a":[...],"r":x,"s_next":[...],"domain":"source"|"target"}

namespace detail {

inline std::vector<double> json_vector(const nlohmann::json& j, const char* key, std::size_t line_no) {
    if (!j.contains(key) || !j.at(key).is_array())
        throw DataError("line " + std::to_string(line_no) + ": missing or non-array field '" + key + "'");
    std::vector<double> v;
    v.reserve(j.at(key).size());
    for (const auto& e : j.at(key)) {
        if (!e.is_number()) throw DataError("line " + std::to_string(line_no) + ": non-numeric entry in '" + key + "'");
        v.push_back(e.get<double>());
    }
    return v;
}

}  // namespace detail

inline Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file '" + path.string() + "'");

    Dataset ds;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("line " + std::to_string(line_no) + ": malformed JSON record: " + e.what());
        }
        if (!have_header) {
            if (!j.contains("d_s") || !j.contains("d_a") || !j.contains("name"))
                throw DataError("line " + std::to_string(line_no) + ": header must declare d_s, d_a and name");
            ds.d_s = j.at("d_s").get<int>();
            ds.d_a = j.at("d_a").get<int>();
            ds.meta.name = j.at("name").get<std::string>();
            ds.meta.seed = j.value("seed", std::uint64_t{0});
            ds.meta.generator = j.value("generator", std::string{});
            have_header = true;
            continue;
        }
        Transition t;
        t.s = detail::json_vector(j, "s", line_no);
        t.a = detail::json_vector(j, "a", line_no);
        t.s_next = detail::json_vector(j, "s_next", line_no);
        if (!j.contains("r") || !j.at("r").is_number())
            throw DataError("line " + std::to_string(line_no) + ": missing or non-numeric field 'r'");
        t.r = j.at("r").get<double>();
        if (!j.contains("domain"))
            throw DataError("line " + std::to_string(line_no) + ": missing field 'domain'");
        t.domain = domain_from_name(j.at("domain").get<std::string>());
        if (static_cast<int>(t.s.size()) != ds.d_s || static_cast<int>(t.s_next.size()) != ds.d_s ||
            static_cast<int>(t.a.size()) != ds.d_a)
            throw DataError("line " + std::to_string(line_no) + ": dimension mismatch (record " +
                            std::to_string(ds.records.size() + 1) + " expects d_s=" + std::to_string(ds.d_s) +
                            ", d_a=" + std::to_string(ds.d_a) + ")");
        for (double v : t.s)
            if (!std::isfinite(v)) throw DataError("line " + std::to_string(line_no) + ": non-finite state entry");
        for (double v : t.s_next)
            if (!std::isfinite(v)) throw DataError("line " + std::to_string(line_no) + ": non-finite state entry");
        ds.records.push_back(std::move(t));
    }
    if (!have_header) throw DataError("empty dataset file '" + path.string() + "'");
    if (ds.records.empty()) throw DataError("dataset file '" + path.string() + "' has a header but no records");
    return ds;
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write dataset file '" + path.string() + "'");
    nlohmann::json header{{"d_s", ds.d_s}, {"d_a", ds.d_a}, {"name", ds.meta.name}};
    if (!ds.meta.generator.empty() || ds.meta.seed != 0) {
        header["seed"] = ds.meta.seed;
        header["generator"] = ds.meta.generator;
    }
    out << header.dump() << '\n';
    for (const Transition& t : ds.records) {
        nlohmann::json j{{"s", t.s}, {"a", t.a}, {"r", t.r}, {"s_next", t.s_next}, {"domain", domain_name(t.domain)}};
        out << j.dump() << '\n';
    }
    if (!out) throw DataError("failed while writing dataset file '" + path.string() + "'");
}

}  // namespace lodada
