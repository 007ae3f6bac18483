// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#include "metok/pipeline.hpp"

#include "metok/digest.hpp"
#include "metok/error.hpp"
#include "metok/schedule.hpp"

namespace metok {

namespace {

using nlohmann::json;

accounting::ModelShape shape_of(const RunConfig& cfg) {
    return {cfg.layers, static_cast<std::size_t>(cfg.d_model), cfg.mlp_ratio};
}

const char* name(vision::FrameReduce m) {
    return m == vision::FrameReduce::mean ? "mean" : "flatten";
}

const char* name(vision::EventScore m) {
    return m == vision::EventScore::mean ? "mean" : "max";
}

}  // namespace

json to_json(const PipelineOptions& o) {
    return json{{"frame_reduce", name(o.vision.frame_reduce)},
                {"event_score", name(o.vision.event_score)},
                {"base_stride", o.vision.base_stride},
                {"decode_steps", o.decode_steps},
                {"analytic", o.analytic},
                {"bytes_per_element", o.bytes_per_element},
                {"record_timing", o.record_timing}};
}

PipelineOptions pipeline_options_from_json(const json& j) {
    PipelineOptions o;
    if (j.contains("frame_reduce")) {
        const auto s = j.at("frame_reduce").get<std::string>();
        if (s != "mean" && s != "flatten") throw DataError("options: bad frame_reduce " + s);
        o.vision.frame_reduce = s == "mean" ? vision::FrameReduce::mean : vision::FrameReduce::flatten;
    }
    if (j.contains("event_score")) {
        const auto s = j.at("event_score").get<std::string>();
        if (s != "mean" && s != "max") throw DataError("options: bad event_score " + s);
        o.vision.event_score = s == "mean" ? vision::EventScore::mean : vision::EventScore::max;
    }
    if (j.contains("base_stride")) o.vision.base_stride = j.at("base_stride").get<std::size_t>();
    if (j.contains("decode_steps")) o.decode_steps = j.at("decode_steps").get<std::size_t>();
    if (j.contains("analytic")) o.analytic = j.at("analytic").get<bool>();
    if (j.contains("bytes_per_element")) o.bytes_per_element = j.at("bytes_per_element").get<std::size_t>();
    if (j.contains("record_timing")) o.record_timing = j.at("record_timing").get<bool>();
    return o;
}

PipelineRun run_pipeline(const FrameEmbeddings& v, const TextEmbedding& t, const RunConfig& cfg,
                         const PipelineOptions& options, const model::ToyModel* model) {
    cfg.validate();
    t.validate();
    PipelineRun run;
    run.vision = vision::run_vision_stage(v, t, cfg, options.vision);
    const std::size_t n_key = run.vision.stream.count_key_event();
    const std::size_t n_non_key = run.vision.stream.count_non_key_event();
    const std::size_t text_len = t.prompt_ids.size();

    std::optional<prune::PruneSchedule> sched;
    if (!cfg.disable_stages.prefill) {
        sched = prune::PruneSchedule::from_config(cfg, n_key, n_non_key);
    }
    std::optional<int> kv_l1;
    if (!cfg.disable_stages.decode) {
        kv_l1 = cfg.layer_boundaries[0];
    }

    if (options.analytic) {
        run.trace = accounting::analytic_trace(shape_of(cfg), n_key, n_non_key, text_len, options.decode_steps,
                                               sched, kv_l1);
        return run;
    }

    std::optional<model::ToyModel> owned;
    if (!model) {
        owned = model::init_model(cfg, v.dim);
        model = &*owned;
    }
    const model::PrefillInput input = model::make_prefill_input(*model, run.vision.stream, t);
    run.prefill = model::prefill(*model, input, sched);

    model::KvCache cache = run.prefill->cache;
    if (kv_l1) {
        const auto kinds = cache.kinds();
        cache = model::apply_keep_mask(cache, prune::kv_keep_mask(*kv_l1, kinds));
    }

    auto& trace = run.trace;
    trace.shape = shape_of(cfg);
    trace.prefill_lengths = run.prefill->layer_lengths;
    trace.cached_positions = cache.sizes();
    trace.decode_steps = options.decode_steps;
    trace.visual_key = n_key;
    trace.visual_non_key = n_non_key;
    trace.text_tokens = text_len;
    if (options.record_timing) {
        trace.prefill_ms = run.prefill->wall_ms;
    }
    if (options.decode_steps > 0) {
        run.decode = model::decode(*model, std::move(cache), run.prefill->last_logits, options.decode_steps);
    }
    return run;
}

Simulation simulate(const FrameEmbeddings& v, const TextEmbedding& t, const RunConfig& cfg,
                    const PipelineOptions& options) {
    Simulation sim;
    std::optional<model::ToyModel> model;
    if (!options.analytic) {
        model = model::init_model(cfg, v.dim);
    }
    const model::ToyModel* shared = model ? &*model : nullptr;
    sim.baseline = run_pipeline(v, t, baseline_of(cfg), options, shared);
    sim.compressed = run_pipeline(v, t, cfg, options, shared);
    sim.report = accounting::reduction_report(sim.baseline.trace, sim.compressed.trace, options.bytes_per_element,
                                              json{{"run", to_json(cfg)}, {"options", to_json(options)}});
    return sim;
}

json trace_json(const PipelineRun& run) {
    json j = accounting::to_json(run.trace);
    const auto& p = run.vision.partition;
    json events = json::array();
    for (std::size_t e = 0; e < p.event_count(); ++e) {
        events.push_back(json{{"start", p.event_begin(e)},
                              {"end", p.event_end(e)},
                              {"score", p.event_scores[e]},
                              {"key", static_cast<bool>(p.key_event[e])}});
    }
    j["events"] = events;
    if (run.decode) {
        j["generated"] = run.decode->tokens;
        j["logits_digest"] = to_hex(run.decode->logits_digest());
    }
    return j;
}

}  // namespace metok
