// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include <json.hpp>

#include "helpers.hpp"
#include "metok/config.hpp"
#include "metok/embeddings.hpp"
#include "metok/error.hpp"
#include "metok/synthetic.hpp"
#include "metok/vision.hpp"

using namespace metok;
using nlohmann::json;

namespace {

std::vector<std::byte> header(std::uint8_t type, std::vector<std::uint32_t> fields) {
    std::vector<std::byte> b;
    for (char c : std::string("MEBF")) b.push_back(std::byte(c));
    b.push_back(std::byte{1});
    b.push_back(std::byte{type});
    for (std::uint32_t f : fields)
        for (int i = 0; i < 4; ++i) b.push_back(std::byte((f >> (8 * i)) & 0xFF));
    return b;
}

}  // namespace

TEST_CASE("MEBF frame round trip is exact after f32 quantization") {
    std::mt19937_64 g(10);
    auto v = testing::random_video(g, 3, 2, 5, 7);
    auto bytes = encode_embeddings(v);
    CHECK(bytes.size() == 6 + 16 + 3 * 2 * 5 * 7 * 4);
    auto back = decode_embeddings(bytes);
    CHECK(back.frames == 3);
    CHECK(back.height == 2);
    CHECK(back.width == 5);
    CHECK(back.dim == 7);
    for (std::size_t i = 0; i < v.tokens.size(); ++i)
        CHECK(back.tokens[i] == static_cast<double>(static_cast<float>(v.tokens[i])));
    CHECK(back == quantize_f32(v));
    // a quantized tensor survives unchanged
    CHECK(decode_embeddings(encode_embeddings(back)) == back);
}

TEST_CASE("MEBF layout is little-endian with the documented header") {
    FrameEmbeddings v(1, 1, 1, 1);
    v.tokens[0] = 1.0;
    auto b = encode_embeddings(v);
    REQUIRE(b.size() == 26);
    CHECK(std::memcmp(b.data(), "MEBF", 4) == 0);
    CHECK(b[4] == std::byte{1});
    CHECK(b[5] == std::byte{1});
    CHECK(b[6] == std::byte{1});
    CHECK(b[7] == std::byte{0});
    // 1.0f = 0x3F800000
    CHECK(b[22] == std::byte{0x00});
    CHECK(b[25] == std::byte{0x3F});
    CHECK(b[24] == std::byte{0x80});
}

TEST_CASE("MEBF text round trip") {
    TextEmbedding t{{0.25, -1.5, 3.0}, {1, 2, 255, 7}};
    auto b = encode_text(t);
    CHECK(b.size() == 6 + 8 + 3 * 4 + 4 * 4);
    CHECK(decode_text(b) == t);
    auto dir = testing::scratch_dir("mebf_text");
    write_text(t, dir / "t.mebf");
    CHECK(read_text(dir / "t.mebf") == t);
}

TEST_CASE("MEBF errors are distinct") {
    std::vector<std::byte> bad{std::byte('X'), std::byte('X'), std::byte('X'), std::byte('X'), std::byte{1},
                               std::byte{1}};
    CHECK_THROWS_AS(decode_embeddings(bad), BadMagicError);

    auto trunc = header(1, {2, 2, 2, 2});
    trunc.resize(trunc.size() + 4 * 5);
    CHECK_THROWS_AS(decode_embeddings(trunc), TruncatedError);
    CHECK_THROWS_AS(decode_embeddings(header(1, {2, 2})), TruncatedError);

    CHECK_THROWS_AS(decode_embeddings(header(1, {0xFFFFFFFF, 0xFFFFFFFF, 0xFFFFFFFF, 0xFFFFFFFF})),
                    DimensionOverflowError);

    CHECK_THROWS_AS(decode_embeddings(header(2, {1, 1})), UnsupportedRecordError);
    auto v9 = header(1, {1, 1, 1, 1});
    v9[4] = std::byte{9};
    CHECK_THROWS_AS(decode_embeddings(v9), UnsupportedRecordError);

    auto trailing = header(1, {1, 1, 1, 1});
    trailing.resize(trailing.size() + 8);
    CHECK_THROWS_AS(decode_embeddings(trailing), DataError);

    // all distinct types, all DataError
    CHECK_THROWS_AS(decode_embeddings(bad), DataError);
    CHECK_THROWS_AS(read_embeddings("/nonexistent/metok.mebf"), DataError);
}

TEST_CASE("file round trip") {
    std::mt19937_64 g(11);
    auto v = quantize_f32(testing::random_video(g, 4, 3, 3, 5));
    auto dir = testing::scratch_dir("mebf_frames");
    write_embeddings(v, dir / "v.mebf");
    CHECK(read_embeddings(dir / "v.mebf") == v);
}

TEST_CASE("gen_synthetic is a pure function of its arguments") {
    EventProfile p;
    p.segments = 3;
    auto a = gen_synthetic(30, 4, 4, 32, 7, p);
    auto b = gen_synthetic(30, 4, 4, 32, 7, p);
    CHECK(encode_embeddings(a.frames) == encode_embeddings(b.frames));
    CHECK(encode_text(a.text) == encode_text(b.text));
    auto c = gen_synthetic(30, 4, 4, 32, 8, p);
    CHECK(a.frames.tokens != c.frames.tokens);
    CHECK_THROWS_AS(gen_synthetic(2, 2, 2, 4, 0, EventProfile{3}), InvalidArgument);
}

TEST_CASE("planted boundaries are the similarity minima") {
    EventProfile p;
    p.segments = 3;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto vid = gen_synthetic(30, 4, 4, 32, seed, p);
        CHECK(vid.segment_starts == std::vector<std::size_t>{0, 10, 20});
        auto sims = vision::adjacent_similarities(vid.frames);
        std::vector<std::size_t> order(sims.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return sims[x] < sims[y]; });
        std::vector<std::size_t> two{order[0], order[1]};
        std::sort(two.begin(), two.end());
        CHECK(two == std::vector<std::size_t>{9, 19});
    }
}

TEST_CASE("single segment shows no planted dip") {
    // Per-token noise has norm at most 0.05*sqrt(3) of its clean token. Averaging can
    // only shrink the relative perturbation of the frame vector by the triangle
    // inequality when clean tokens are aligned; we bound it with the measured ratio of
    // mean token norm to frame-vector norm. Two vectors each within angle asin(eps) of
    // the clean mean are within 2*asin(eps) of each other.
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto vid = gen_synthetic(30, 4, 4, 32, seed, EventProfile{1});
        const auto& v = vid.frames;
        double worst = 0.0;
        for (std::size_t f = 0; f < v.frames; ++f) {
            auto fv = vision::frame_vector(v, f, vision::FrameReduce::mean);
            double mean_tok = 0.0;
            for (std::size_t n = 0; n < v.tokens_per_frame(); ++n) {
                double s = 0;
                for (double x : v.token(f, n)) s += x * x;
                mean_tok += std::sqrt(s);
            }
            mean_tok /= static_cast<double>(v.tokens_per_frame());
            double fn = 0;
            for (double x : fv) fn += x * x;
            worst = std::max(worst, mean_tok / std::sqrt(fn));
        }
        const double eps = std::min(1.0, 0.05 * std::sqrt(3.0) * worst * 1.1);
        const double floor = std::cos(2.0 * std::asin(eps));
        auto sims = vision::adjacent_similarities(v);
        const auto [lo, hi] = std::minmax_element(sims.begin(), sims.end());
        CHECK(*lo >= floor);
        CHECK(*hi - *lo <= 1.0 - floor);
    }
}

TEST_CASE("config defaults") {
    auto cfg = parse_config(json::object());
    CHECK(cfg == RunConfig{});
    CHECK(cfg.k == 5);
    CHECK(cfg.alpha == 0.5);
    CHECK(cfg.beta == 0.4);
    CHECK(cfg.r == 0.76);
    CHECK(cfg.s1 == 2);
    CHECK(cfg.s2 == 3);
    CHECK(cfg.layer_boundaries == std::array<int, 3>{3, 10, 19});
    CHECK(cfg.layers == 12);
    CHECK(cfg.heads == 4);
    CHECK(cfg.d_model == 64);
    CHECK(cfg.mlp_ratio == 4);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(parse_config(json{{"alpha", 1.5}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"alpha", 0.0}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"beta", -0.1}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"r", 1.01}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"layer_boundaries", {10, 3, 19}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"layer_boundaries", {3, 3, 19}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"s1", 4}, {"s2", 3}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"heads", 5}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"disable_stages", {"vision", "bogus"}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"k", "five"}}), ConfigError);

    std::vector<std::string> warnings;
    auto cfg = parse_config(json{{"kk", 3}, {"alpha", 0.25}}, &warnings);
    CHECK(cfg.alpha == 0.25);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("kk") != std::string::npos);
}

TEST_CASE("config defaulting is idempotent") {
    std::mt19937_64 g(12);
    for (int trial = 0; trial < 100; ++trial) {
        RunConfig c;
        c.k = 1 + static_cast<int>(g() % 20);
        c.alpha = 0.05 + 0.95 * static_cast<double>(g() % 1000) / 1000.0;
        c.beta = 0.05 + 0.95 * static_cast<double>(g() % 1000) / 1000.0;
        c.s1 = 1 + static_cast<int>(g() % 3);
        c.s2 = c.s1 + static_cast<int>(g() % 3);
        c.r = 0.01 + 0.99 * static_cast<double>(g() % 1000) / 1000.0;
        c.layer_boundaries = {1, 4, 30};
        c.seed = g();
        c.disable_stages.decode = g() % 2;
        auto j = to_json(c);
        CHECK(j.size() == 13);
        auto back = parse_config(j);
        CHECK(back == c);
        CHECK(to_json(back) == j);
    }
    auto dir = testing::scratch_dir("config");
    {
        std::ofstream(dir / "c.json") << to_json(RunConfig{}).dump(2);
    }
    CHECK(load_config(dir / "c.json") == RunConfig{});
    CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
}
