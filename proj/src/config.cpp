// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#include "metok/config.hpp"

#include <fstream>
#include <set>
#include <string_view>

#include "metok/error.hpp"

namespace metok {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 13> kKeys = {"k",      "alpha",  "beta",           "s1",     "s2",
                                                    "r",      "layer_boundaries", "layers", "heads",
                                                    "d_model", "mlp_ratio", "seed", "disable_stages"};

template <typename T>
T get_number(const json& j, std::string_view key) {
    const json& v = j.at(std::string(key));
    if (!v.is_number()) {
        throw ConfigError("config: \"" + std::string(key) + "\" must be a number");
    }
    if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) {
            throw ConfigError("config: \"" + std::string(key) + "\" must be an integer");
        }
        if constexpr (std::is_unsigned_v<T>) {
            if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
                throw ConfigError("config: \"" + std::string(key) + "\" must be non-negative");
            }
        }
    }
    return v.get<T>();
}

}  // namespace

void RunConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    if (k < 1) fail("k must be >= 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) fail("alpha must be in (0, 1]");
    if (!(beta > 0.0 && beta <= 1.0)) fail("beta must be in (0, 1]");
    if (!(r > 0.0 && r <= 1.0)) fail("r must be in (0, 1]");
    if (s1 < 1 || s2 < 1) fail("strides must be positive");
    if (s1 > s2) fail("s1 must not exceed s2");
    const auto& lb = layer_boundaries;
    if (lb[0] < 0) fail("layer boundaries must be non-negative");
    if (!(lb[0] < lb[1] && lb[1] < lb[2])) fail("layer boundaries must satisfy l1 < l2 < l3");
    if (layers < 1) fail("layers must be >= 1");
    if (heads < 1 || d_model < 1) fail("heads and d_model must be positive");
    if (d_model % heads != 0) fail("heads must divide d_model");
    if (mlp_ratio < 1) fail("mlp_ratio must be >= 1");
}

RunConfig baseline_of(RunConfig cfg) {
    cfg.disable_stages = StageSet{true, true, true};
    return cfg;
}

RunConfig parse_config(const json& j, std::vector<std::string>* warnings) {
    if (!j.is_object()) {
        throw ConfigError("config: top level must be a JSON object");
    }
    RunConfig c;
    for (const auto& [key, _] : j.items()) {
        if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end() && warnings) {
            warnings->push_back("config: unknown key \"" + key + "\" ignored");
        }
    }
    if (j.contains("k")) c.k = get_number<int>(j, "k");
    if (j.contains("alpha")) c.alpha = get_number<double>(j, "alpha");
    if (j.contains("beta")) c.beta = get_number<double>(j, "beta");
    if (j.contains("s1")) c.s1 = get_number<int>(j, "s1");
    if (j.contains("s2")) c.s2 = get_number<int>(j, "s2");
    if (j.contains("r")) c.r = get_number<double>(j, "r");
    if (j.contains("layers")) c.layers = get_number<int>(j, "layers");
    if (j.contains("heads")) c.heads = get_number<int>(j, "heads");
    if (j.contains("d_model")) c.d_model = get_number<int>(j, "d_model");
    if (j.contains("mlp_ratio")) c.mlp_ratio = get_number<int>(j, "mlp_ratio");
    if (j.contains("seed")) c.seed = get_number<std::uint64_t>(j, "seed");
    if (j.contains("layer_boundaries")) {
        const json& lb = j.at("layer_boundaries");
        if (!lb.is_array() || lb.size() != 3) {
            throw ConfigError("config: \"layer_boundaries\" must be an array of three integers");
        }
        for (std::size_t i = 0; i < 3; ++i) {
            if (!lb[i].is_number_integer()) {
                throw ConfigError("config: \"layer_boundaries\" entries must be integers");
            }
            c.layer_boundaries[i] = lb[i].get<int>();
        }
    }
    if (j.contains("disable_stages")) {
        const json& ds = j.at("disable_stages");
        if (!ds.is_array()) {
            throw ConfigError("config: \"disable_stages\" must be an array of stage names");
        }
        for (const json& s : ds) {
            const std::string name = s.is_string() ? s.get<std::string>() : std::string();
            if (name == "vision") {
                c.disable_stages.vision = true;
            } else if (name == "prefill") {
                c.disable_stages.prefill = true;
            } else if (name == "decode") {
                c.disable_stages.decode = true;
            } else {
                throw ConfigError("config: unknown stage in \"disable_stages\": " + s.dump());
            }
        }
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
    return parse_config(j, warnings);
}

json to_json(const RunConfig& c) {
    json stages = json::array();
    if (c.disable_stages.vision) stages.push_back("vision");
    if (c.disable_stages.prefill) stages.push_back("prefill");
    if (c.disable_stages.decode) stages.push_back("decode");
    json j;
    j["k"] = c.k;
    j["alpha"] = c.alpha;
    j["beta"] = c.beta;
    j["s1"] = c.s1;
    j["s2"] = c.s2;
    j["r"] = c.r;
    j["layer_boundaries"] = c.layer_boundaries;
    j["layers"] = c.layers;
    j["heads"] = c.heads;
    j["d_model"] = c.d_model;
    j["mlp_ratio"] = c.mlp_ratio;
    j["seed"] = c.seed;
    j["disable_stages"] = stages;
    return j;
}

}  // namespace metok
