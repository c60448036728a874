#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lodada/errors.hpp"
#include "lodada/iql.hpp"
#include "lodada/transition.hpp"

namespace lodada {

// Checkpoint = <prefix>.json manifest + <prefix>.bin parameter blob.
// The blob is the concatenation of every network's layers in manifest order,
// each layer as row-major weights followed by biases, little-endian doubles.
// Baseline policies ("uniform_random", "oracle") carry no blob; they exist so
// the evaluator can score reference policies through the same interface.
struct Checkpoint {
    std::string kind = "gaussian_mlp";  // gaussian_mlp | uniform_random | oracle
    int d_s = 0, d_a = 0;
    PolicyBundle bundle;                 // valid when kind == gaussian_mlp
    std::optional<NormStats> obs_norm;   // set when the run normalized states
    nlohmann::json config_echo;
};

namespace detail {

inline nlohmann::json mlp_manifest(const Mlp& net, const std::string& name, std::size_t& offset) {
    nlohmann::json layers = nlohmann::json::array();
    for (const Layer& l : net.layers) {
        layers.push_back({{"in", l.in},
                          {"out", l.out},
                          {"activation", activation_name(l.act)},
                          {"w_offset", offset},
                          {"b_offset", offset + l.w.size()}});
        offset += l.w.size() + l.b.size();
    }
    return nlohmann::json{{"name", name}, {"in_dim", net.in_dim}, {"out_dim", net.out_dim}, {"layers", layers}};
}

inline void append_mlp(const Mlp& net, std::vector<double>& blob) {
    for (const Layer& l : net.layers) {
        blob.insert(blob.end(), l.w.begin(), l.w.end());
        blob.insert(blob.end(), l.b.begin(), l.b.end());
    }
}

inline Mlp mlp_from_manifest(const nlohmann::json& j, const std::vector<double>& blob) {
    Mlp net;
    net.in_dim = j.at("in_dim").get<int>();
    net.out_dim = j.at("out_dim").get<int>();
    for (const auto& lj : j.at("layers")) {
        Layer l;
        l.in = lj.at("in").get<int>();
        l.out = lj.at("out").get<int>();
        l.act = activation_from_name(lj.at("activation").get<std::string>());
        std::size_t w_off = lj.at("w_offset").get<std::size_t>();
        std::size_t b_off = lj.at("b_offset").get<std::size_t>();
        std::size_t w_n = static_cast<std::size_t>(l.in) * l.out;
        if (b_off + l.out > blob.size()) throw DataError("checkpoint blob shorter than manifest expects");
        l.w.assign(blob.begin() + w_off, blob.begin() + w_off + w_n);
        l.b.assign(blob.begin() + b_off, blob.begin() + b_off + l.out);
        net.layers.push_back(std::move(l));
    }
    return net;
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& prefix) {
    nlohmann::json manifest{{"format", "lodada-checkpoint-v1"},
                            {"policy", ck.kind},
                            {"d_s", ck.d_s},
                            {"d_a", ck.d_a},
                            {"config", ck.config_echo}};
    if (ck.obs_norm) manifest["obs_norm"] = {{"mean", ck.obs_norm->mean}, {"std", ck.obs_norm->std}};
    std::vector<double> blob;
    if (ck.kind == "gaussian_mlp") {
        std::size_t offset = 0;
        nlohmann::json nets = nlohmann::json::array();
        nets.push_back(detail::mlp_manifest(ck.bundle.v, "v", offset));
        nets.push_back(detail::mlp_manifest(ck.bundle.q, "q", offset));
        nets.push_back(detail::mlp_manifest(ck.bundle.q_target, "q_target", offset));
        nets.push_back(detail::mlp_manifest(ck.bundle.actor, "actor", offset));
        manifest["networks"] = nets;
        manifest["blob_doubles"] = offset;
        detail::append_mlp(ck.bundle.v, blob);
        detail::append_mlp(ck.bundle.q, blob);
        detail::append_mlp(ck.bundle.q_target, blob);
        detail::append_mlp(ck.bundle.actor, blob);
    }
    std::ofstream jf(prefix.string() + ".json", std::ios::trunc);
    if (!jf) throw DataError("cannot write checkpoint manifest '" + prefix.string() + ".json'");
    jf << manifest.dump(2) << '\n';
    std::ofstream bf(prefix.string() + ".bin", std::ios::trunc | std::ios::binary);
    if (!bf) throw DataError("cannot write checkpoint blob '" + prefix.string() + ".bin'");
    if (!blob.empty())
        bf.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size() * sizeof(double)));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& prefix) {
    std::ifstream jf(prefix.string() + ".json");
    if (!jf) throw DataError("cannot open checkpoint manifest '" + prefix.string() + ".json'");
    nlohmann::json manifest = nlohmann::json::parse(jf);
    Checkpoint ck;
    ck.kind = manifest.at("policy").get<std::string>();
    ck.d_s = manifest.at("d_s").get<int>();
    ck.d_a = manifest.at("d_a").get<int>();
    ck.config_echo = manifest.value("config", nlohmann::json::object());
    if (manifest.contains("obs_norm")) {
        NormStats st;
        st.mean = manifest["obs_norm"].at("mean").get<std::vector<double>>();
        st.std = manifest["obs_norm"].at("std").get<std::vector<double>>();
        ck.obs_norm = st;
    }
    if (ck.kind == "gaussian_mlp") {
        std::ifstream bf(prefix.string() + ".bin", std::ios::binary);
        if (!bf) throw DataError("cannot open checkpoint blob '" + prefix.string() + ".bin'");
        std::vector<char> raw((std::istreambuf_iterator<char>(bf)), std::istreambuf_iterator<char>());
        if (raw.size() % sizeof(double) != 0) throw DataError("checkpoint blob size is not a multiple of 8");
        std::vector<double> blob(raw.size() / sizeof(double));
        std::memcpy(blob.data(), raw.data(), raw.size());
        ck.bundle.d_s = ck.d_s;
        ck.bundle.d_a = ck.d_a;
        for (const auto& nj : manifest.at("networks")) {
            std::string name = nj.at("name").get<std::string>();
            Mlp net = detail::mlp_from_manifest(nj, blob);
            if (name == "v") ck.bundle.v = std::move(net);
            else if (name == "q") ck.bundle.q = std::move(net);
            else if (name == "q_target") ck.bundle.q_target = std::move(net);
            else if (name == "actor") ck.bundle.actor = std::move(net);
            else throw DataError("unknown network '" + name + "' in checkpoint manifest");
        }
    }
    return ck;
}

}  // namespace lodada
