// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Closed-form cost model. With d = d_model and m = mlp_ratio:
//
//   layer_flops(n)       = (8 + 4m) n d^2 + 4 n^2 d
//                          (Q/K/V/O projections 8nd^2, scores and value mix
//                           4n^2d, MLP 4m nd^2)
//   decode_token_flops(c) = (8 + 4m) d^2 + 4 c d
//                          (one query against c cached positions, itself included)
//   prefill              = sum over layers of layer_flops(len_l)
//   decode               = sum over steps s and layers l of
//                          decode_token_flops(cached_l + s + 1)
//   kv_bytes             = sum over layers of 2 * cached_l * d * bytes_per_element
//
// cached_l counts prompt positions held at layer l once the decode keep mask
// has been applied.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "metok/schedule.hpp"

namespace metok::accounting {

struct ModelShape {
    int layers = 0;
    std::size_t d_model = 0;
    int mlp_ratio = 0;

    bool operator==(const ModelShape&) const = default;
};

struct InferenceTrace {
    ModelShape shape;
    std::vector<std::size_t> prefill_lengths;
    std::vector<std::size_t> cached_positions;
    std::size_t decode_steps = 0;
    std::size_t visual_key = 0;
    std::size_t visual_non_key = 0;
    std::size_t text_tokens = 0;
    std::optional<double> prefill_ms;

    /// Throws DataError if per-layer vectors disagree with the shape, a
    /// cache holds more than its layer processed, or lengths grow with depth.
    void validate() const;

    bool operator==(const InferenceTrace&) const = default;
};

std::uint64_t layer_flops(std::uint64_t n, std::uint64_t d_model, std::uint64_t mlp_ratio);
std::uint64_t decode_token_flops(std::uint64_t cached, std::uint64_t d_model, std::uint64_t mlp_ratio);

struct FlopsBreakdown {
    std::uint64_t prefill = 0;
    std::uint64_t decode = 0;
    std::uint64_t total() const { return prefill + decode; }
};

FlopsBreakdown pipeline_flops(const InferenceTrace& trace);

inline constexpr std::size_t kDefaultBytesPerElement = 2;

std::uint64_t kv_bytes(const InferenceTrace& trace, std::size_t bytes_per_element = kDefaultBytesPerElement);

/// Trace implied by the schedule alone, without running a model. `sched`
/// empty means no prefill pruning; `kv_l1` empty means no decode KV policy.
InferenceTrace analytic_trace(const ModelShape& shape, std::size_t visual_key, std::size_t visual_non_key,
                              std::size_t text_tokens, std::size_t decode_steps,
                              const std::optional<prune::PruneSchedule>& sched, std::optional<int> kv_l1);

struct MetricPair {
    double baseline = 0.0;
    double compressed = 0.0;
    double reduction_pct = 0.0;
};

struct ReductionReport {
    MetricPair flops;
    MetricPair kv_bytes;
    /// Present only when both traces carry wall-clock timing.
    std::optional<MetricPair> prefill_ms;
    nlohmann::json config;
};

/// 100 * (1 - compressed / baseline) per metric. Throws DataError if the
/// shapes differ or a baseline metric is zero.
ReductionReport reduction_report(const InferenceTrace& baseline, const InferenceTrace& compressed,
                                 std::size_t bytes_per_element = kDefaultBytesPerElement,
                                 nlohmann::json config = nlohmann::json::object());

nlohmann::json to_json(const ReductionReport& report);
nlohmann::json to_json(const InferenceTrace& trace);

}  // namespace metok::accounting
