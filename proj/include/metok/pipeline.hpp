// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// End-to-end composition: vision stage -> toy model prefill (with pruning)
// -> KV keep mask -> greedy decode -> trace. Also the analytic path, which
// stops after the vision stage and derives the trace from the schedule.

#include <cstddef>
#include <optional>

#include <json.hpp>

#include "metok/accounting.hpp"
#include "metok/config.hpp"
#include "metok/embeddings.hpp"
#include "metok/model.hpp"
#include "metok/vision.hpp"

namespace metok {

struct PipelineOptions {
    vision::VisionOptions vision;
    std::size_t decode_steps = 8;
    /// Skip the toy forward pass; derive the trace from the schedule.
    bool analytic = false;
    std::size_t bytes_per_element = accounting::kDefaultBytesPerElement;
    /// Record wall-clock prefill time in traces (breaks byte-reproducibility).
    bool record_timing = false;
};

nlohmann::json to_json(const PipelineOptions& options);
/// Inverse of to_json; missing keys keep their defaults.
PipelineOptions pipeline_options_from_json(const nlohmann::json& j);

struct PipelineRun {
    vision::VisionResult vision;
    accounting::InferenceTrace trace;
    /// Empty in analytic mode.
    std::optional<model::PrefillResult> prefill;
    std::optional<model::DecodeOutput> decode;
};

/// Runs one configuration. The model is drawn from cfg.seed; pass `model`
/// to reuse one already built for the same config and visual dim.
PipelineRun run_pipeline(const FrameEmbeddings& v, const TextEmbedding& t, const RunConfig& cfg,
                         const PipelineOptions& options, const model::ToyModel* model = nullptr);

struct Simulation {
    PipelineRun baseline;
    PipelineRun compressed;
    accounting::ReductionReport report;
};

/// Runs cfg and its all-stages-disabled baseline and compares them.
Simulation simulate(const FrameEmbeddings& v, const TextEmbedding& t, const RunConfig& cfg,
                    const PipelineOptions& options);

nlohmann::json trace_json(const PipelineRun& run);

}  // namespace metok
