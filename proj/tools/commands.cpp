// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "metok/config.hpp"
#include "metok/digest.hpp"
#include "metok/embeddings.hpp"
#include "metok/error.hpp"
#include "metok/kernels.hpp"
#include "metok/manifest.hpp"
#include "metok/pipeline.hpp"
#include "metok/synthetic.hpp"

namespace metok::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Options shared by the commands that consume embeddings.
struct RunArgs {
    std::string config_path;
    std::string input;
    std::string text;
    std::string out;
    std::string event_score = "mean";
    std::string frame_reduce = "mean";
    std::size_t base_stride = 1;
    std::size_t steps = 8;
    std::size_t bytes_per_element = accounting::kDefaultBytesPerElement;
    bool analytic = false;
    bool timing = false;
};

struct GenArgs {
    std::uint64_t seed = 0;
    std::size_t frames = 30;
    std::string grid = "4x4";
    std::size_t dim = 32;
    std::size_t events = 3;
    std::size_t prompt_len = 8;
    std::string out;
};

struct SweepArgs {
    std::vector<std::string> params;
};

std::string fmt_pct(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fmt_num(double v) {
    return json(v).dump();
}

std::pair<std::size_t, std::size_t> parse_grid(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) {
        throw UsageError("--grid must look like HxW, got '" + s + "'");
    }
    try {
        const long h = std::stol(s.substr(0, x));
        const long w = std::stol(s.substr(x + 1));
        if (h <= 0 || w <= 0) {
            throw UsageError("--grid dimensions must be positive");
        }
        return {static_cast<std::size_t>(h), static_cast<std::size_t>(w)};
    } catch (const std::logic_error&) {
        throw UsageError("--grid must look like HxW, got '" + s + "'");
    }
}

PipelineOptions options_of(const RunArgs& a) {
    PipelineOptions o;
    o.vision.event_score = a.event_score == "max" ? vision::EventScore::max : vision::EventScore::mean;
    o.vision.frame_reduce = a.frame_reduce == "flatten" ? vision::FrameReduce::flatten : vision::FrameReduce::mean;
    o.vision.base_stride = a.base_stride;
    o.decode_steps = a.steps;
    o.analytic = a.analytic;
    o.bytes_per_element = a.bytes_per_element;
    o.record_timing = a.timing;
    return o;
}

RunArgs args_of(const PipelineOptions& o) {
    RunArgs a;
    a.event_score = o.vision.event_score == vision::EventScore::max ? "max" : "mean";
    a.frame_reduce = o.vision.frame_reduce == vision::FrameReduce::flatten ? "flatten" : "mean";
    a.base_stride = o.vision.base_stride;
    a.steps = o.decode_steps;
    a.analytic = o.analytic;
    a.bytes_per_element = o.bytes_per_element;
    a.timing = o.record_timing;
    return a;
}

RunConfig load_run_config(const std::string& path) {
    if (path.empty()) {
        return RunConfig{};
    }
    std::vector<std::string> warnings;
    RunConfig cfg = load_config(path, &warnings);
    for (const auto& w : warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    return cfg;
}

fs::path prepare_out(const std::string& out) {
    if (out.empty()) {
        throw UsageError("--out is required");
    }
    fs::path dir(out);
    fs::create_directories(dir);
    return dir;
}

FileRecord input_record(const std::string& role, const std::string& path) {
    const fs::path abs = fs::absolute(path).lexically_normal();
    return {role, abs.string(), file_digest(abs)};
}

FileRecord artifact_record(const fs::path& dir, const std::string& role, const std::string& name) {
    return {role, name, file_digest(dir / name)};
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << text;
}

struct Inputs {
    FrameEmbeddings frames;
    TextEmbedding text;
};

Inputs read_inputs(const RunArgs& a) {
    if (a.input.empty() || a.text.empty()) {
        throw UsageError("--input and --text are required");
    }
    return {read_embeddings(a.input), read_text(a.text)};
}

RunManifest base_manifest(const std::string& command, const RunConfig& cfg, const PipelineOptions& opts,
                          const RunArgs& a) {
    RunManifest m;
    m.command = command;
    m.seed = cfg.seed;
    m.config = to_json(cfg);
    m.options = to_json(opts);
    m.inputs.push_back(input_record("input", a.input));
    m.inputs.push_back(input_record("text", a.text));
    return m;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_gen(const GenArgs& g) {
    const auto [h, w] = parse_grid(g.grid);
    const fs::path dir = prepare_out(g.out);
    EventProfile profile;
    profile.segments = g.events;
    profile.prompt_length = g.prompt_len;
    const SyntheticVideo vid = gen_synthetic(g.frames, h, w, g.dim, g.seed, profile);
    write_embeddings(vid.frames, dir / "video.mebf");
    write_text(vid.text, dir / "text.mebf");

    RunManifest m;
    m.command = "gen";
    m.seed = g.seed;
    m.options = json{{"frames", g.frames}, {"grid", g.grid}, {"dim", g.dim}, {"events", g.events},
                     {"prompt_len", g.prompt_len}, {"segment_starts", vid.segment_starts},
                     {"text_segment", vid.text_segment}};
    m.artifacts.push_back(artifact_record(dir, "video", "video.mebf"));
    m.artifacts.push_back(artifact_record(dir, "text", "text.mebf"));
    write_json(to_json(m), dir / "manifest.json");
}

json stream_stats(const vision::VisionResult& res, const FrameEmbeddings& v) {
    const auto& p = res.partition;
    json events = json::array();
    for (std::size_t e = 0; e < p.event_count(); ++e) {
        events.push_back(json{{"event", e},
                              {"start", p.event_begin(e)},
                              {"end", p.event_end(e)},
                              {"score", p.event_scores[e]},
                              {"key", static_cast<bool>(p.key_event[e])}});
    }
    std::vector<std::size_t> per_frame(v.frames, 0), stride(v.frames, 0);
    for (const auto& o : res.stream.origin) {
        ++per_frame[o.frame];
        stride[o.frame] = o.stride;
    }
    const auto frame_event = p.frame_events();
    json frames = json::array();
    for (std::size_t f = 0; f < v.frames; ++f) {
        frames.push_back(json{{"frame", f},
                              {"event", frame_event[f]},
                              {"score", p.frame_scores[f]},
                              {"key_frame", static_cast<bool>(p.key_frame[f])},
                              {"stride", stride[f]},
                              {"tokens", per_frame[f]}});
    }
    const std::size_t original = v.frames * v.tokens_per_frame();
    return json{{"frames", v.frames},
                {"grid", {v.height, v.width}},
                {"dim", v.dim},
                {"original_tokens", original},
                {"retained_tokens", res.stream.size()},
                {"retained_key_event", res.stream.count_key_event()},
                {"retained_non_key_event", res.stream.count_non_key_event()},
                {"retained_pct", 100.0 * static_cast<double>(res.stream.size()) / static_cast<double>(original)},
                {"adjacent_similarity", p.adjacent_similarity},
                {"events", events},
                {"frame_detail", frames}};
}

void cmd_compress(const RunArgs& a, const RunConfig& cfg) {
    const fs::path dir = prepare_out(a.out);
    const Inputs in = read_inputs(a);
    const PipelineOptions opts = options_of(a);
    const auto res = vision::run_vision_stage(in.frames, in.text, cfg, opts.vision);
    write_json(stream_stats(res, in.frames), dir / "tokenstream.json");
    RunManifest m = base_manifest("compress", cfg, opts, a);
    m.artifacts.push_back(artifact_record(dir, "tokenstream", "tokenstream.json"));
    write_json(to_json(m), dir / "manifest.json");
}

void cmd_simulate(const RunArgs& a, const RunConfig& cfg) {
    const fs::path dir = prepare_out(a.out);
    const Inputs in = read_inputs(a);
    const PipelineOptions opts = options_of(a);
    const Simulation sim = simulate(in.frames, in.text, cfg, opts);
    write_json(json{{"baseline", trace_json(sim.baseline)}, {"compressed", trace_json(sim.compressed)}},
               dir / "trace.json");
    write_json(accounting::to_json(sim.report), dir / "report.json");
    RunManifest m = base_manifest("simulate", cfg, opts, a);
    m.artifacts.push_back(artifact_record(dir, "trace", "trace.json"));
    m.artifacts.push_back(artifact_record(dir, "report", "report.json"));
    write_json(to_json(m), dir / "manifest.json");
}

void cmd_attention_ratio(const RunArgs& a, const RunConfig& cfg) {
    if (a.analytic) {
        throw UsageError("diag attention-ratio needs the model forward pass; drop --analytic");
    }
    if (a.steps < 1) {
        throw UsageError("--steps must be >= 1");
    }
    const fs::path dir = prepare_out(a.out);
    const Inputs in = read_inputs(a);
    const PipelineOptions opts = options_of(a);
    const PipelineRun run = run_pipeline(in.frames, in.text, cfg, opts);
    const auto ratios = model::attention_ratio_trace(*run.decode);
    std::ostringstream csv;
    csv << "layer,visual_ratio,text_ratio\n";
    for (std::size_t l = 0; l < ratios.size(); ++l) {
        char line[128];
        std::snprintf(line, sizeof line, "%zu,%.9f,%.9f\n", l, ratios[l].first, ratios[l].second);
        csv << line;
    }
    write_text_file(dir / "attention_ratio.csv", csv.str());
    RunManifest m = base_manifest("diag attention-ratio", cfg, opts, a);
    m.artifacts.push_back(artifact_record(dir, "attention_ratio", "attention_ratio.csv"));
    write_json(to_json(m), dir / "manifest.json");
}

struct SweepAxis {
    std::string name;
    std::vector<double> values;
};

std::vector<SweepAxis> parse_axes(const std::vector<std::string>& params) {
    static const std::vector<std::string> known = {"alpha", "beta", "r", "s1", "s2", "k"};
    std::vector<SweepAxis> axes;
    for (const auto& p : params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos) {
            throw UsageError("--param must look like name=v1,v2,... got '" + p + "'");
        }
        SweepAxis axis{p.substr(0, eq), {}};
        if (std::find(known.begin(), known.end(), axis.name) == known.end()) {
            throw UsageError("--param: unknown parameter '" + axis.name + "' (alpha, beta, r, s1, s2, k)");
        }
        std::stringstream ss(p.substr(eq + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                axis.values.push_back(std::stod(item, &used));
                if (used != item.size()) {
                    throw std::invalid_argument(item);
                }
            } catch (const std::logic_error&) {
                throw UsageError("--param " + axis.name + ": bad value '" + item + "'");
            }
        }
        if (axis.values.empty()) {
            throw UsageError("--param " + axis.name + ": no values");
        }
        axes.push_back(std::move(axis));
    }
    if (axes.empty()) {
        throw UsageError("sweep needs at least one --param");
    }
    return axes;
}

RunConfig apply_point(RunConfig cfg, const std::vector<SweepAxis>& axes, const std::vector<double>& point) {
    for (std::size_t i = 0; i < axes.size(); ++i) {
        const std::string& n = axes[i].name;
        const double v = point[i];
        if (n == "alpha") cfg.alpha = v;
        else if (n == "beta") cfg.beta = v;
        else if (n == "r") cfg.r = v;
        else if (n == "s1") cfg.s1 = static_cast<int>(v);
        else if (n == "s2") cfg.s2 = static_cast<int>(v);
        else if (n == "k") cfg.k = static_cast<int>(v);
        if ((n == "s1" || n == "s2" || n == "k") && v != static_cast<double>(static_cast<int>(v))) {
            throw ConfigError("sweep: " + n + " must be an integer");
        }
    }
    cfg.validate();
    return cfg;
}

std::size_t thread_budget() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("METOK_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) {
            n = std::min(n, static_cast<std::size_t>(cap));
        }
    }
    return n;
}

void cmd_sweep(const RunArgs& a, const SweepArgs& s, const RunConfig& cfg) {
    const auto axes = parse_axes(s.params);
    const fs::path dir = prepare_out(a.out);
    const Inputs in = read_inputs(a);
    const PipelineOptions opts = options_of(a);

    std::vector<std::vector<double>> points{{}};
    for (const auto& axis : axes) {
        std::vector<std::vector<double>> next;
        for (const auto& p : points) {
            for (double v : axis.values) {
                auto q = p;
                q.push_back(v);
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    std::vector<RunConfig> configs;
    configs.reserve(points.size());
    for (const auto& p : points) {
        configs.push_back(apply_point(cfg, axes, p));
    }

    std::vector<std::optional<Simulation>> results(points.size());
    std::vector<std::string> errors(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                results[i] = simulate(in.frames, in.text, configs[i], opts);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const std::size_t n_threads = std::min(thread_budget(), points.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!results[i]) {
            throw DataError("sweep point " + std::to_string(i) + ": " + errors[i]);
        }
    }

    RunManifest m = base_manifest("sweep", cfg, opts, a);
    m.options["params"] = s.params;
    std::ostringstream csv;
    csv << "point";
    for (const auto& axis : axes) {
        csv << ',' << axis.name;
    }
    csv << ",visual_tokens,flops_reduction_pct,kv_reduction_pct\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "point_%03zu", i);
        fs::create_directories(dir / name);
        const std::string rel = std::string(name) + "/report.json";
        write_json(accounting::to_json(results[i]->report), dir / rel);
        m.artifacts.push_back(artifact_record(dir, "report", rel));
        csv << i;
        for (double v : points[i]) {
            csv << ',' << fmt_num(v);
        }
        csv << ',' << results[i]->compressed.vision.stream.size() << ','
            << fmt_pct(results[i]->report.flops.reduction_pct) << ','
            << fmt_pct(results[i]->report.kv_bytes.reduction_pct) << '\n';
    }
    write_text_file(dir / "sweep.csv", csv.str());
    m.artifacts.push_back(artifact_record(dir, "summary", "sweep.csv"));
    write_json(to_json(m), dir / "manifest.json");
}

void cmd_replay(const std::string& manifest_path, const std::string& out) {
    const RunManifest m = read_manifest(manifest_path);
    if (m.tool != "metok") {
        throw DataError("manifest: not a metok manifest");
    }
    for (const auto& rec : m.inputs) {
        const std::string now = file_digest(rec.path);
        if (now != rec.digest) {
            throw DataError("replay: input " + rec.path + " changed (digest " + now + ", manifest " + rec.digest +
                            ")");
        }
    }
    if (m.command == "gen") {
        GenArgs g;
        g.seed = m.seed;
        g.frames = m.options.at("frames").get<std::size_t>();
        g.grid = m.options.at("grid").get<std::string>();
        g.dim = m.options.at("dim").get<std::size_t>();
        g.events = m.options.at("events").get<std::size_t>();
        g.prompt_len = m.options.at("prompt_len").get<std::size_t>();
        g.out = out;
        cmd_gen(g);
        return;
    }
    const RunConfig cfg = parse_config(m.config);
    RunArgs a = args_of(pipeline_options_from_json(m.options));
    a.out = out;
    for (const auto& rec : m.inputs) {
        (rec.role == "input" ? a.input : a.text) = rec.path;
    }
    if (m.command == "compress") {
        cmd_compress(a, cfg);
    } else if (m.command == "simulate") {
        cmd_simulate(a, cfg);
    } else if (m.command == "diag attention-ratio") {
        cmd_attention_ratio(a, cfg);
    } else if (m.command == "sweep") {
        SweepArgs s;
        s.params = m.options.at("params").get<std::vector<std::string>>();
        cmd_sweep(a, s, cfg);
    } else {
        throw DataError("manifest: unknown command '" + m.command + "'");
    }
}

void add_run_options(CLI::App* cmd, RunArgs& a, bool with_model_options) {
    cmd->add_option("--config", a.config_path, "Run configuration JSON (defaults when omitted)");
    cmd->add_option("--input", a.input, "Frame embeddings (MEBF)")->required();
    cmd->add_option("--text", a.text, "Text embedding (MEBF)")->required();
    cmd->add_option("--out", a.out, "Output directory")->required();
    cmd->add_option("--event-score", a.event_score, "Event score aggregation")
        ->check(CLI::IsMember({"mean", "max"}));
    cmd->add_option("--frame-reduce", a.frame_reduce, "Frame reduction before cosine")
        ->check(CLI::IsMember({"mean", "flatten"}));
    cmd->add_option("--base-stride", a.base_stride, "Uniform pooling stride when the vision stage is disabled")
        ->check(CLI::PositiveNumber);
    if (with_model_options) {
        cmd->add_option("--steps", a.steps, "Greedy decode steps");
        cmd->add_option("--bytes-per-element", a.bytes_per_element, "KV element size in bytes")
            ->check(CLI::PositiveNumber);
        cmd->add_flag("--analytic", a.analytic, "Derive traces from the schedule, skip the model forward pass");
        cmd->add_flag("--timing", a.timing, "Record wall-clock prefill time (output no longer byte-reproducible)");
    }
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"metok: event-aware visual token compression on a toy transformer"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Write synthetic MEBF embeddings");
    gen_cmd->add_option("--seed", gen.seed, "PRNG seed");
    gen_cmd->add_option("--frames", gen.frames, "Frames T")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--grid", gen.grid, "Token grid HxW per frame");
    gen_cmd->add_option("--dim", gen.dim, "Embedding dim d")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--events", gen.events, "Planted segments G")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--prompt-len", gen.prompt_len, "Prompt token count")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--out", gen.out, "Output directory")->required();

    RunArgs compress_args, simulate_args, diag_args, sweep_args;
    SweepArgs sweep;
    auto* compress_cmd = app.add_subcommand("compress", "Run the vision stage and report token statistics");
    add_run_options(compress_cmd, compress_args, false);
    auto* simulate_cmd = app.add_subcommand("simulate", "Full pipeline against an automatic baseline");
    add_run_options(simulate_cmd, simulate_args, true);

    auto* diag_cmd = app.add_subcommand("diag", "Diagnostics");
    diag_cmd->require_subcommand(1);
    auto* ratio_cmd = diag_cmd->add_subcommand("attention-ratio", "Per-layer visual/text decode attention (CSV)");
    add_run_options(ratio_cmd, diag_args, true);

    auto* sweep_cmd = app.add_subcommand("sweep", "Cartesian sweep over alpha/beta/r/strides/k");
    add_run_options(sweep_cmd, sweep_args, true);
    sweep_cmd->add_option("--param", sweep.params, "name=v1,v2,... (repeatable)")->required();

    std::string manifest_path, replay_out;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run a command from its manifest");
    replay_cmd->add_option("--manifest", manifest_path, "manifest.json")->required();
    replay_cmd->add_option("--out", replay_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*gen_cmd) {
            cmd_gen(gen);
        } else if (*compress_cmd) {
            cmd_compress(compress_args, load_run_config(compress_args.config_path));
        } else if (*simulate_cmd) {
            cmd_simulate(simulate_args, load_run_config(simulate_args.config_path));
        } else if (*ratio_cmd) {
            cmd_attention_ratio(diag_args, load_run_config(diag_args.config_path));
        } else if (*sweep_cmd) {
            cmd_sweep(sweep_args, sweep, load_run_config(sweep_args.config_path));
        } else if (*replay_cmd) {
            cmd_replay(manifest_path, replay_out);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}

}  // namespace metok::cli
