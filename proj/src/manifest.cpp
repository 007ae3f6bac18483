// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#include "metok/manifest.hpp"

#include <fstream>

#include "metok/error.hpp"

namespace metok {

namespace {

using nlohmann::json;

json records_json(const std::vector<FileRecord>& recs) {
    json arr = json::array();
    for (const auto& r : recs) {
        arr.push_back(json{{"role", r.role}, {"path", r.path}, {"digest", r.digest}});
    }
    return arr;
}

std::vector<FileRecord> records_from(const json& arr) {
    std::vector<FileRecord> out;
    for (const auto& r : arr) {
        out.push_back({r.at("role").get<std::string>(), r.at("path").get<std::string>(),
                       r.at("digest").get<std::string>()});
    }
    return out;
}

}  // namespace

json to_json(const RunManifest& m) {
    return json{{"tool", m.tool},
                {"version", m.version},
                {"command", m.command},
                {"seed", m.seed},
                {"config", m.config},
                {"options", m.options},
                {"inputs", records_json(m.inputs)},
                {"artifacts", records_json(m.artifacts)}};
}

RunManifest manifest_from_json(const json& j) {
    try {
        RunManifest m;
        m.tool = j.at("tool").get<std::string>();
        m.version = j.at("version").get<std::string>();
        m.command = j.at("command").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.config = j.at("config");
        m.options = j.at("options");
        m.inputs = records_from(j.at("inputs"));
        m.artifacts = records_from(j.at("artifacts"));
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("manifest: ") + e.what());
    }
}

RunManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("manifest: cannot open " + path.string());
    }
    try {
        return manifest_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw DataError("manifest: " + path.string() + ": " + e.what());
    }
}

void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

}  // namespace metok
