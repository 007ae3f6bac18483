// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "helpers.hpp"
#include "metok/accounting.hpp"
#include "metok/model.hpp"
#include "metok/pipeline.hpp"
#include "metok/schedule.hpp"
#include "metok/synthetic.hpp"
#include "metok/tensor.hpp"
#include "metok/vision.hpp"

using namespace metok;
using prune::Group;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            detail << "first failure: " << what << "; ";
        }
        pass = pass && ok;
    }
};

using Check = std::function<void(Outcome&)>;

bool run_criterion(int id, const char* name, double limit_s, const Check& fn) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        fn(o);
    } catch (const std::exception& e) {
        o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0 && secs > limit_s) {
        o.require(false, "runtime " + std::to_string(secs) + " s over the " + std::to_string(limit_s) + " s limit");
    }
    std::printf("[%s] %d. %-42s %7.2f s  %s\n", o.pass ? "PASS" : "FAIL", id, name, secs, o.detail.str().c_str());
    std::fflush(stdout);
    return o.pass;
}

RunConfig longva_config() {
    RunConfig cfg;
    cfg.k = 13;
    cfg.alpha = 0.5;
    cfg.beta = 0.45;
    cfg.s1 = 2;
    cfg.s2 = 3;
    cfg.r = 0.55;
    cfg.layer_boundaries = {3, 10, 19};
    cfg.layers = 28;
    cfg.heads = 28;
    cfg.d_model = 3584;
    cfg.mlp_ratio = 4;
    return cfg;
}

// 1 -------------------------------------------------------------------------
void schedule_exactness(Outcome& o) {
    const RunConfig cfg = longva_config();
    const auto s = prune::PruneSchedule::from_config(cfg, 1000, 1000);
    const double r = 0.55, r2 = r * r;
    for (int l = 0; l < 28; ++l) {
        const double key = l < 3 ? 1.0 : l < 10 ? r : l < 19 ? r2 : 0.0;
        const double non = l < 3 ? 1.0 : l < 10 ? 0.275 : 0.0;
        o.require(prune::retention_ratio(l, Group::key, s) == key, "key ratio at layer " + std::to_string(l));
        o.require(prune::retention_ratio(l, Group::non_key, s) == non, "non-key ratio at layer " + std::to_string(l));
    }
    const double ulp = std::nextafter(0.3025, 1.0) - 0.3025;
    const double gap = std::abs(prune::retention_ratio(12, Group::key, s) - 0.3025);
    o.require(gap <= ulp, "r^2 tier not within one ulp of 0.3025");
    o.detail << "key {1, 0.55, " << (gap == 0 ? "0.3025" : "0.55*0.55 (1 ulp from 0.3025)") << ", 0}, non-key {1, 0.275, 0}";
}

// 2 -------------------------------------------------------------------------
std::vector<double> oracle_sims(const FrameEmbeddings& v) {
    std::vector<std::vector<double>> fv(v.frames, std::vector<double>(v.dim, 0.0));
    for (std::size_t f = 0; f < v.frames; ++f) {
        for (std::size_t n = 0; n < v.tokens_per_frame(); ++n)
            for (std::size_t c = 0; c < v.dim; ++c) fv[f][c] += v.token(f, n)[c];
        for (double& x : fv[f]) x /= static_cast<double>(v.tokens_per_frame());
    }
    std::vector<double> sims;
    for (std::size_t f = 0; f + 1 < v.frames; ++f) {
        double ab = 0, aa = 0, bb = 0;
        for (std::size_t c = 0; c < v.dim; ++c) {
            ab += fv[f][c] * fv[f + 1][c];
            aa += fv[f][c] * fv[f][c];
            bb += fv[f + 1][c] * fv[f + 1][c];
        }
        sims.push_back(ab / std::sqrt(aa * bb));
    }
    return sims;
}

std::vector<std::size_t> sort_and_cut(const std::vector<double>& sims, std::size_t k) {
    std::vector<std::size_t> idx(sims.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return sims[a] < sims[b]; });
    std::vector<std::size_t> starts{0};
    for (std::size_t j = 0; j + 1 < k; ++j) starts.push_back(idx[j] + 1);
    std::sort(starts.begin(), starts.end());
    return starts;
}

void segmentation_oracle(Outcome& o) {
    std::mt19937_64 g(2026);
    std::size_t ties = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t t = 1 + g() % 64, k = 1 + g() % t;
        auto v = testing::random_video(g, t, 2, 2, 3);
        if (trial % 2 == 0) {
            // periodic content produces exactly duplicated similarities
            const std::size_t period = 2 + g() % 3;
            for (std::size_t f = period; f < t; ++f)
                std::copy_n(v.frame(f % period).begin(), v.frame_stride(), v.frame(f).begin());
        }
        const auto part = vision::segment_events(v, k);
        const auto& sims = part.adjacent_similarity;
        const auto ref = oracle_sims(v);
        for (std::size_t i = 0; i < sims.size(); ++i) {
            o.require(std::abs(sims[i] - ref[i]) <= 1e-12, "similarity differs from oracle");
        }
        std::vector<double> sorted = sims;
        std::sort(sorted.begin(), sorted.end());
        ties += std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
        o.require(part.event_starts == sort_and_cut(sims, k), "partition differs in trial " + std::to_string(trial));
    }
    o.detail << "1000 videos, " << ties << " with duplicated similarities";
}

// 3 -------------------------------------------------------------------------
void token_count_closed_form(Outcome& o) {
    std::mt19937_64 g(303);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t t = 1 + g() % 24, h = 1 + g() % 12, w = 1 + g() % 12, d = 1 + g() % 4;
        auto v = testing::random_video(g, t, h, w, d);
        auto text = testing::random_text(g, d);
        RunConfig cfg;
        cfg.k = 1 + static_cast<int>(g() % t);
        cfg.alpha = static_cast<double>(1 + g() % 20) / 20.0;
        cfg.beta = static_cast<double>(1 + g() % 20) / 20.0;
        cfg.s1 = 1 + static_cast<int>(g() % 4);
        cfg.s2 = cfg.s1 + static_cast<int>(g() % 4);
        const auto res = vision::run_vision_stage(v, text, cfg);
        const auto& p = res.partition;
        const auto ev = p.frame_events();
        std::size_t expect = 0;
        for (std::size_t f = 0; f < t; ++f) {
            const bool ke = p.key_event[ev[f]], kf = p.key_frame[f];
            const double base = kf ? cfg.s1 : cfg.s2;
            const auto s = static_cast<std::size_t>(ke ? base : std::max(1.0, std::round(base / cfg.alpha)));
            expect += ((h + s - 1) / s) * ((w + s - 1) / s);
        }
        o.require(res.stream.size() == expect, "count mismatch in trial " + std::to_string(trial));
    }
    o.detail << "200 configs";
}

// 4 -------------------------------------------------------------------------
void softmax_exclusion(Outcome& o) {
    std::mt19937_64 g(404);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        RunConfig cfg;
        cfg.seed = g();
        cfg.k = 3;
        const int l1 = 1 + static_cast<int>(g() % 10);
        cfg.layer_boundaries = {l1, l1 + 1 + static_cast<int>(g() % 3), 12 + static_cast<int>(g() % 8)};
        EventProfile prof;
        prof.segments = 3;
        prof.prompt_length = 4 + g() % 8;
        auto vid = gen_synthetic(6 + g() % 6, 4, 4, 8, cfg.seed, prof);
        auto model = model::init_model(cfg, 8);
        auto vis = vision::run_vision_stage(vid.frames, vid.text, cfg);
        auto input = model::make_prefill_input(model, vis.stream, vid.text);
        auto sched = prune::PruneSchedule::from_config(cfg, vis.stream.count_key_event(),
                                                       vis.stream.count_non_key_event());
        auto pre = model::prefill(model, input, sched);
        auto mask = prune::kv_keep_mask(l1, pre.cache.kinds());
        auto dropped = model::decode(model, model::apply_keep_mask(pre.cache, mask), pre.last_logits, 6);
        auto masked = model::decode(model, pre.cache, pre.last_logits, 6, &mask);
        for (std::size_t s = 0; s < dropped.step_logits.size(); ++s)
            for (std::size_t i = 0; i < dropped.step_logits[s].size(); ++i)
                worst = std::max(worst, std::abs(dropped.step_logits[s][i] - masked.step_logits[s][i]));
        o.require(dropped.tokens == masked.tokens, "token ids differ in trial " + std::to_string(trial));
    }
    o.require(worst <= 1e-9, "logit difference above 1e-9");
    o.detail << "100 runs, max |dlogit| = " << worst;
}

// 5 -------------------------------------------------------------------------
void bypass(Outcome& o) {
    EventProfile prof;
    prof.segments = 4;
    auto vid = gen_synthetic(16, 4, 4, 8, 55, prof);
    RunConfig cfg;
    cfg.k = 4;
    cfg.disable_stages = {true, true, true};
    PipelineOptions opts;
    opts.decode_steps = 6;
    auto run = run_pipeline(vid.frames, vid.text, cfg, opts);

    // reference path with no compression machinery at all
    auto model = model::init_model(cfg, 8);
    vision::TokenStream raw;
    raw.dim = 8;
    raw.tokens = vid.frames.tokens;
    for (std::size_t f = 0; f < 16; ++f)
        for (std::size_t n = 0; n < 16; ++n) {
            vision::TokenOrigin origin;
            origin.frame = static_cast<std::uint32_t>(f);
            raw.origin.push_back(origin);
        }
    auto pre = model::prefill(model, model::make_prefill_input(model, raw, vid.text), std::nullopt);
    auto dec = model::decode(model, pre.cache, pre.last_logits, 6);

    o.require(run.vision.stream.tokens == raw.tokens, "visual tokens differ");
    o.require(run.prefill->last_logits == pre.last_logits, "prefill logits differ");
    o.require(run.prefill->hidden == pre.hidden, "prefill hidden states differ");
    o.require(run.prefill->layer_lengths == pre.layer_lengths, "layer lengths differ");
    o.require(run.decode->step_logits == dec.step_logits, "decode logits differ");
    o.require(run.decode->tokens == dec.tokens, "decode tokens differ");

    auto sim = simulate(vid.frames, vid.text, cfg, opts);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.2f%% FLOPs, %.2f%% KV", sim.report.flops.reduction_pct,
                  sim.report.kv_bytes.reduction_pct);
    o.require(std::string(buf) == "0.00% FLOPs, 0.00% KV", "report not zero");
    o.require(sim.report.flops.reduction_pct == 0.0 && sim.report.kv_bytes.reduction_pct == 0.0, "report not zero");
    o.detail << "bitwise identical; report " << buf;
}

// 6 -------------------------------------------------------------------------
struct Replica {
    double flops = 0, kv = 0;
    std::size_t base_tokens = 0, kept_tokens = 0;
};

Replica replica(std::size_t grid, std::size_t base_stride, std::size_t text_len, std::size_t steps) {
    EventProfile prof;
    prof.segments = 13;
    prof.prompt_length = text_len;
    auto vid = gen_synthetic(128, grid, grid, 8, 6, prof);
    PipelineOptions opts;
    opts.analytic = true;
    opts.decode_steps = steps;
    opts.vision.base_stride = base_stride;
    auto sim = simulate(vid.frames, vid.text, longva_config(), opts);
    return {sim.report.flops.reduction_pct, sim.report.kv_bytes.reduction_pct,
            sim.baseline.vision.stream.size(), sim.compressed.vision.stream.size()};
}

void desk_replica(Outcome& o) {
    // 144 tokens/frame is the vanilla model pooling a 24x24 patch grid at stride 2;
    // compression strides act on the native 24x24 grid.
    const Replica main = replica(24, 2, 64, 8);
    o.require(main.base_tokens == 128 * 144, "baseline is not 144 tokens/frame");
    o.require(std::abs(main.flops - 80.6) <= 10.0, "FLOPs reduction outside 80.6 +/- 10");
    o.require(std::abs(main.kv - 93.5) <= 5.0, "KV reduction outside 93.5 +/- 5");
    char buf[256];
    std::snprintf(buf, sizeof buf, "FLOPs -%.2f%% (target 80.6 +/- 10), KV -%.2f%% (target 93.5 +/- 5), tokens %zu -> %zu",
                  main.flops, main.kv, main.base_tokens, main.kept_tokens);
    o.detail << buf;
}

void replica_sensitivity() {
    struct Row {
        const char* label;
        std::size_t grid, base, text, steps;
    };
    const Row rows[] = {
        {"24x24 grid, base stride 2, text 64, 8 decode", 24, 2, 64, 8},
        {"24x24 grid, base stride 2, text 32, 8 decode", 24, 2, 32, 8},
        {"24x24 grid, base stride 2, text 256, 8 decode", 24, 2, 256, 8},
        {"24x24 grid, base stride 2, text 64, 64 decode", 24, 2, 64, 64},
        {"12x12 grid, no base pooling, text 64, 8 decode", 12, 1, 64, 8},
    };
    std::printf("      replica sensitivity:\n");
    for (const auto& r : rows) {
        const Replica x = replica(r.grid, r.base, r.text, r.steps);
        std::printf("        %-48s FLOPs -%6.2f%%  KV -%6.2f%%  tokens %zu -> %zu\n", r.label, x.flops, x.kv,
                    x.base_tokens, x.kept_tokens);
    }
}

// 7 -------------------------------------------------------------------------
void nesting_monotonicity(Outcome& o) {
    std::mt19937_64 g(707);
    for (int trial = 0; trial < 500; ++trial) {
        prune::PruneSchedule s;
        s.total_layers = 1 + static_cast<int>(g() % 32);
        s.l1 = static_cast<int>(g() % 16);
        s.l2 = s.l1 + 1 + static_cast<int>(g() % 10);
        s.l3 = s.l2 + 1 + static_cast<int>(g() % 10);
        s.r = static_cast<double>(1 + g() % 1000) / 1000.0;
        s.alpha = static_cast<double>(1 + g() % 1000) / 1000.0;
        s.origin_key = g() % 400;
        s.origin_non_key = g() % 400;

        for (Group grp : {Group::key, Group::non_key}) {
            std::vector<std::vector<double>> scores(3, std::vector<double>(s.origin(grp)));
            for (auto& tier : scores)
                for (auto& x : tier) x = static_cast<double>(g() % 16);
            const auto ks = prune::plan_keep_set(s, grp, scores);
            o.require(std::includes(ks.tiers[0].begin(), ks.tiers[0].end(), ks.tiers[1].begin(), ks.tiers[1].end()) &&
                          std::includes(ks.tiers[1].begin(), ks.tiers[1].end(), ks.tiers[2].begin(),
                                        ks.tiers[2].end()),
                      "keep sets not nested");
            double prev = 1.0;
            for (int l = 0; l < s.total_layers; ++l) {
                const double r = prune::retention_ratio(l, grp, s);
                o.require(r <= prev, "retention increases with layer");
                prev = r;
            }
        }

        const accounting::ModelShape shape{s.total_layers, 8 * (1 + g() % 16), 1 + static_cast<int>(g() % 4)};
        const std::size_t m = 1 + g() % 64, steps = g() % 16;
        auto base = accounting::analytic_trace(shape, s.origin_key, s.origin_non_key, m, steps, std::nullopt,
                                               std::nullopt);
        double prev_red = -1.0;
        for (int i = 20; i >= 1; --i) {
            auto t = s;
            t.r = i / 20.0;
            auto tr = accounting::analytic_trace(shape, s.origin_key, s.origin_non_key, m, steps, t, s.l1);
            const double red = accounting::reduction_report(base, tr).flops.reduction_pct;
            o.require(red >= prev_red, "FLOPs reduction not monotone in r");
            prev_red = red;
        }
    }
    o.detail << "500 schedules x 2 groups; r swept over 20 values each";
}

// 8 -------------------------------------------------------------------------
int cli(const std::string& args) {
    const std::string cmd = std::string("\"") + METOK_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

void determinism(Outcome& o) {
    const auto dir = testing::scratch_dir("acceptance_determinism");
    const std::string d = dir.string();
    o.require(cli("gen --seed 11 --frames 24 --grid 4x4 --dim 16 --events 4 --out \"" + d + "/in\"") == 0, "gen");
    o.require(cli("simulate --input \"" + d + "/in/video.mebf\" --text \"" + d + "/in/text.mebf\" --out \"" + d +
                  "/a\"") == 0,
              "simulate");
    o.require(cli("replay --manifest \"" + d + "/a/manifest.json\" --out \"" + d + "/b\"") == 0, "replay 1");
    o.require(cli("replay --manifest \"" + d + "/a/manifest.json\" --out \"" + d + "/c\"") == 0, "replay 2");
    for (const char* f : {"report.json", "trace.json"}) {
        const auto a = testing::slurp(dir / "a" / f);
        o.require(!a.empty(), std::string(f) + " missing");
        o.require(a == testing::slurp(dir / "b" / f) && a == testing::slurp(dir / "c" / f),
                  std::string(f) + " differs between runs");
    }
    o.detail << "report.json and trace.json byte-identical across 3 runs";
}

}  // namespace

int main() {
    int failed = 0;
    failed += !run_criterion(1, "schedule exactness", 1.0, schedule_exactness);
    failed += !run_criterion(2, "segmentation oracle", 10.0, segmentation_oracle);
    failed += !run_criterion(3, "vision token-count closed form", 10.0, token_count_closed_form);
    failed += !run_criterion(4, "softmax-exclusion identity", 60.0, softmax_exclusion);
    failed += !run_criterion(5, "bypass equivalence", 0.0, bypass);
    failed += !run_criterion(6, "desk replica of headline efficiency", 5.0, desk_replica);
    replica_sensitivity();
    failed += !run_criterion(7, "nesting and monotonicity", 0.0, nesting_monotonicity);
    failed += !run_criterion(8, "determinism from manifest", 0.0, determinism);
    std::printf("%d of 8 criteria passed\n", 8 - failed);
    return failed == 0 ? 0 : 1;
}
