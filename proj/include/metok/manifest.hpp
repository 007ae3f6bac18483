// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace metok {

inline constexpr const char* kToolVersion = "0.1.0";

struct FileRecord {
    std::string role;
    std::string path;
    std::string digest;

    bool operator==(const FileRecord&) const = default;
};

/// Everything needed to re-run a CLI command bit for bit: the command, its
/// options, the config echo and digests of what went in and came out.
/// Artifact paths are relative to the output directory.
struct RunManifest {
    std::string tool = "metok";
    std::string version = kToolVersion;
    std::string command;
    std::uint64_t seed = 0;
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json options = nlohmann::json::object();
    std::vector<FileRecord> inputs;
    std::vector<FileRecord> artifacts;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
RunManifest read_manifest(const std::filesystem::path& path);

/// Writes `j` as pretty JSON with a trailing newline.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace metok
