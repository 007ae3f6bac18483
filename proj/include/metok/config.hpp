// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace metok {

/// Pipeline stages that can be switched off independently.
struct StageSet {
    bool vision = false;
    bool prefill = false;
    bool decode = false;

    bool any() const { return vision || prefill || decode; }
    bool all() const { return vision && prefill && decode; }
    bool operator==(const StageSet&) const = default;
};

/// Run configuration. Field set mirrors the JSON schema one to one; defaults
/// are the 7B-regime compression hyperparameters with a desk-scale toy model.
struct RunConfig {
    int k = 5;
    double alpha = 0.5;
    double beta = 0.4;
    int s1 = 2;
    int s2 = 3;
    double r = 0.76;
    std::array<int, 3> layer_boundaries{3, 10, 19};
    int layers = 12;
    int heads = 4;
    int d_model = 64;
    int mlp_ratio = 4;
    std::uint64_t seed = 0;
    StageSet disable_stages;

    /// Throws ConfigError on any out-of-range field.
    void validate() const;

    bool operator==(const RunConfig&) const = default;
};

/// Config with every stage disabled; the vanilla-model control.
RunConfig baseline_of(RunConfig cfg);

/// Parses a JSON object. Unknown keys are reported through `warnings`
/// rather than rejected.
RunConfig parse_config(const nlohmann::json& j, std::vector<std::string>* warnings = nullptr);
RunConfig load_config(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

/// Fully specified JSON; parse_config(to_json(c)) == c.
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace metok
