// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#include "metok/accounting.hpp"

#include <string>

#include "metok/error.hpp"

namespace metok::accounting {

void InferenceTrace::validate() const {
    const auto layers = static_cast<std::size_t>(shape.layers);
    if (shape.layers < 1 || shape.d_model == 0) {
        throw DataError("trace: model shape must be positive");
    }
    if (prefill_lengths.size() != layers || cached_positions.size() != layers) {
        throw DataError("trace: per-layer vectors must have one entry per layer");
    }
    for (std::size_t l = 0; l < layers; ++l) {
        if (cached_positions[l] > prefill_lengths[l]) {
            throw DataError("trace: layer " + std::to_string(l) + " caches more positions than it processed");
        }
        if (l > 0 && prefill_lengths[l] > prefill_lengths[l - 1]) {
            throw DataError("trace: sequence length grows at layer " + std::to_string(l));
        }
    }
}

std::uint64_t layer_flops(std::uint64_t n, std::uint64_t d_model, std::uint64_t mlp_ratio) {
    return (8 + 4 * mlp_ratio) * n * d_model * d_model + 4 * n * n * d_model;
}

std::uint64_t decode_token_flops(std::uint64_t cached, std::uint64_t d_model, std::uint64_t mlp_ratio) {
    return (8 + 4 * mlp_ratio) * d_model * d_model + 4 * cached * d_model;
}

FlopsBreakdown pipeline_flops(const InferenceTrace& trace) {
    trace.validate();
    const std::uint64_t d = trace.shape.d_model;
    const auto m = static_cast<std::uint64_t>(trace.shape.mlp_ratio);
    FlopsBreakdown out;
    for (std::size_t len : trace.prefill_lengths) {
        out.prefill += layer_flops(len, d, m);
    }
    for (std::size_t s = 0; s < trace.decode_steps; ++s) {
        for (std::size_t cached : trace.cached_positions) {
            out.decode += decode_token_flops(cached + s + 1, d, m);
        }
    }
    return out;
}

std::uint64_t kv_bytes(const InferenceTrace& trace, std::size_t bytes_per_element) {
    std::uint64_t total = 0;
    for (std::size_t cached : trace.cached_positions) {
        total += 2 * static_cast<std::uint64_t>(cached) * trace.shape.d_model * bytes_per_element;
    }
    return total;
}

InferenceTrace analytic_trace(const ModelShape& shape, std::size_t visual_key, std::size_t visual_non_key,
                              std::size_t text_tokens, std::size_t decode_steps,
                              const std::optional<prune::PruneSchedule>& sched, std::optional<int> kv_l1) {
    InferenceTrace t;
    t.shape = shape;
    t.decode_steps = decode_steps;
    t.visual_key = visual_key;
    t.visual_non_key = visual_non_key;
    t.text_tokens = text_tokens;
    for (int l = 0; l < shape.layers; ++l) {
        std::size_t visual = visual_key + visual_non_key;
        if (sched) {
            visual = prune::retained_count(l, prune::Group::key, *sched) +
                     prune::retained_count(l, prune::Group::non_key, *sched);
        }
        const std::size_t len = visual + text_tokens;
        t.prefill_lengths.push_back(len);
        t.cached_positions.push_back((kv_l1 && l >= *kv_l1) ? text_tokens : len);
    }
    return t;
}

namespace {

MetricPair make_pair(double baseline, double compressed, const char* what) {
    if (baseline == 0.0) {
        throw DataError(std::string("reduction_report: baseline ") + what + " is zero");
    }
    return {baseline, compressed, 100.0 * (1.0 - compressed / baseline)};
}

}  // namespace

ReductionReport reduction_report(const InferenceTrace& baseline, const InferenceTrace& compressed,
                                 std::size_t bytes_per_element, nlohmann::json config) {
    if (!(baseline.shape == compressed.shape)) {
        throw DataError("reduction_report: traces come from different model shapes");
    }
    ReductionReport r;
    r.flops = make_pair(static_cast<double>(pipeline_flops(baseline).total()),
                        static_cast<double>(pipeline_flops(compressed).total()), "FLOPs");
    r.kv_bytes = make_pair(static_cast<double>(kv_bytes(baseline, bytes_per_element)),
                           static_cast<double>(kv_bytes(compressed, bytes_per_element)), "KV bytes");
    if (baseline.prefill_ms && compressed.prefill_ms) {
        r.prefill_ms = make_pair(*baseline.prefill_ms, *compressed.prefill_ms, "prefill time");
    }
    r.config = std::move(config);
    return r;
}

nlohmann::json to_json(const ReductionReport& report) {
    using nlohmann::json;
    auto counted = [](const MetricPair& p) {
        return json{{"baseline", static_cast<std::uint64_t>(p.baseline)},
                    {"compressed", static_cast<std::uint64_t>(p.compressed)},
                    {"reduction_pct", p.reduction_pct}};
    };
    json j;
    j["flops"] = counted(report.flops);
    j["kv_bytes"] = counted(report.kv_bytes);
    if (report.prefill_ms) {
        j["prefill_ms"] = json{{"baseline", report.prefill_ms->baseline},
                               {"compressed", report.prefill_ms->compressed},
                               {"reduction_pct", report.prefill_ms->reduction_pct}};
    } else {
        j["prefill_ms"] = json{{"baseline", nullptr}, {"compressed", nullptr}, {"reduction_pct", nullptr}};
    }
    j["config"] = report.config;
    return j;
}

nlohmann::json to_json(const InferenceTrace& trace) {
    using nlohmann::json;
    json j;
    j["layers"] = trace.shape.layers;
    j["d_model"] = trace.shape.d_model;
    j["mlp_ratio"] = trace.shape.mlp_ratio;
    j["prefill_lengths"] = trace.prefill_lengths;
    j["cached_positions"] = trace.cached_positions;
    j["decode_steps"] = trace.decode_steps;
    j["visual_tokens"] = json{{"key", trace.visual_key}, {"non_key", trace.visual_non_key}};
    j["text_tokens"] = trace.text_tokens;
    if (trace.prefill_ms) {
        j["prefill_ms"] = *trace.prefill_ms;
    }
    return j;
}

}  // namespace metok::accounting
