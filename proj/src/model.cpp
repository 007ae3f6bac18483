// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#include "metok/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "metok/digest.hpp"
#include "metok/error.hpp"
#include "metok/kernels.hpp"
#include "metok/rng.hpp"
#include "metok/tensor.hpp"

namespace metok::model {

namespace {

using prune::Group;
using prune::TokenKind;

constexpr double kNormEps = 1e-6;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Linear draw_linear(Rng64& rng, std::size_t rows, std::size_t cols, double scale) {
    Linear l{rows, cols, std::vector<double>(rows * cols)};
    for (double& x : l.w) {
        x = scale * rng.next_unit();
    }
    return l;
}

// Uniform [-1,1) times sqrt(3/fan_in) gives unit-variance outputs for unit inputs.
double fan_in_scale(std::size_t fan_in) {
    return std::sqrt(3.0 / static_cast<double>(fan_in));
}

void rms_norm(std::span<const double> x, std::span<double> out) {
    const double ms = kernels::dot(x, x) / static_cast<double>(x.size());
    const double inv = 1.0 / std::sqrt(ms + kNormEps);
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] * inv;
    }
}

double gelu(double x) {
    constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
    return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

void add_position(std::span<double> x, std::size_t pos) {
    const std::size_t d = x.size();
    for (std::size_t i = 0; i < d; i += 2) {
        const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d));
        const double angle = static_cast<double>(pos) * freq;
        x[i] += std::sin(angle);
        if (i + 1 < d) {
            x[i + 1] += std::cos(angle);
        }
    }
}

void mlp_residual(const LayerWeights& lw, std::span<double> x, std::vector<double>& normed,
                  std::vector<double>& hidden, std::vector<double>& out) {
    rms_norm(x, normed);
    lw.mlp_in.apply(normed, hidden);
    for (double& h : hidden) {
        h = gelu(h);
    }
    lw.mlp_out.apply(hidden, out);
    kernels::axpy(1.0, out, x);
}

// Scores of one query head against `count` cached keys, scaled by 1/sqrt(dh).
void head_scores(std::span<const double> q, const double* keys, std::size_t count, std::size_t d_model,
                 std::size_t offset, std::size_t dh, std::span<double> scores) {
    const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t j = 0; j < count; ++j) {
        scores[j] = kernels::dot(q.subspan(offset, dh), std::span<const double>(keys + j * d_model + offset, dh)) * inv;
    }
}

void head_mix(std::span<const double> probs, const double* values, std::size_t d_model, std::size_t offset,
              std::size_t dh, std::span<double> out) {
    auto dst = out.subspan(offset, dh);
    std::fill(dst.begin(), dst.end(), 0.0);
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (probs[j] != 0.0) {
            kernels::axpy(probs[j], std::span<const double>(values + j * d_model + offset, dh), dst);
        }
    }
}

}  // namespace

void Linear::apply(std::span<const double> x, std::span<double> y) const {
    kernels::matvec(w, x, y);
}

std::uint64_t ToyModel::checksum() const {
    Fnv1a64 h;
    auto feed = [&](const Linear& l) {
        for (double x : l.w) {
            h.update(x);
        }
    };
    feed(token_embedding);
    feed(visual_projector);
    for (const auto& b : blocks) {
        feed(b.wq);
        feed(b.wk);
        feed(b.wv);
        feed(b.wo);
        feed(b.mlp_in);
        feed(b.mlp_out);
    }
    feed(unembedding);
    return h.value();
}

ToyModel init_model(const RunConfig& cfg, std::size_t visual_dim, std::size_t vocab) {
    if (cfg.layers < 1 || cfg.heads < 1 || cfg.d_model < 1 || cfg.mlp_ratio < 1 || visual_dim == 0 || vocab == 0) {
        throw InvalidArgument("init_model: dimensions must be positive");
    }
    if (cfg.d_model % cfg.heads != 0) {
        throw InvalidArgument("init_model: heads (" + std::to_string(cfg.heads) + ") must divide d_model (" +
                              std::to_string(cfg.d_model) + ")");
    }
    ToyModel m;
    m.layers = cfg.layers;
    m.heads = cfg.heads;
    m.d_model = static_cast<std::size_t>(cfg.d_model);
    m.mlp_hidden = static_cast<std::size_t>(cfg.mlp_ratio) * m.d_model;
    m.vocab = vocab;
    m.visual_dim = visual_dim;

    Rng64 rng(cfg.seed);
    const std::size_t d = m.d_model;
    m.token_embedding = draw_linear(rng, vocab, d, 1.0);
    m.blocks.reserve(static_cast<std::size_t>(cfg.layers));
    for (int l = 0; l < cfg.layers; ++l) {
        LayerWeights lw;
        lw.wq = draw_linear(rng, d, d, fan_in_scale(d));
        lw.wk = draw_linear(rng, d, d, fan_in_scale(d));
        lw.wv = draw_linear(rng, d, d, fan_in_scale(d));
        lw.wo = draw_linear(rng, d, d, fan_in_scale(d));
        lw.mlp_in = draw_linear(rng, m.mlp_hidden, d, fan_in_scale(d));
        lw.mlp_out = draw_linear(rng, d, m.mlp_hidden, fan_in_scale(m.mlp_hidden));
        m.blocks.push_back(std::move(lw));
    }
    m.unembedding = draw_linear(rng, vocab, d, fan_in_scale(d));
    m.visual_projector = draw_linear(rng, d, visual_dim, fan_in_scale(visual_dim));
    return m;
}

std::size_t PrefillInput::visual_count() const {
    return static_cast<std::size_t>(std::count(kinds.begin(), kinds.end(), TokenKind::visual));
}

std::size_t PrefillInput::group_count(Group g) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < size(); ++i) {
        n += (kinds[i] == TokenKind::visual && groups[i] == g) ? 1 : 0;
    }
    return n;
}

PrefillInput make_prefill_input(const ToyModel& model, const vision::TokenStream& stream, const TextEmbedding& text) {
    if (stream.size() > 0 && stream.dim != model.visual_dim) {
        throw DataError("prefill input: visual dim " + std::to_string(stream.dim) + " != model projector dim " +
                        std::to_string(model.visual_dim));
    }
    if (text.prompt_ids.empty()) {
        throw DataError("prefill input: empty prompt");
    }
    const std::size_t d = model.d_model;
    const std::size_t n = stream.size() + text.prompt_ids.size();
    PrefillInput in;
    in.d_model = d;
    in.embeddings.assign(n * d, 0.0);
    in.kinds.reserve(n);
    in.groups.reserve(n);
    in.position_ids.reserve(n);
    for (std::size_t i = 0; i < stream.size(); ++i) {
        model.visual_projector.apply(stream.token(i), std::span<double>(in.embeddings.data() + i * d, d));
        in.kinds.push_back(TokenKind::visual);
        in.groups.push_back(stream.origin[i].key_event ? Group::key : Group::non_key);
        in.position_ids.push_back(i);
    }
    for (std::size_t j = 0; j < text.prompt_ids.size(); ++j) {
        const std::uint32_t id = text.prompt_ids[j];
        if (id >= model.vocab) {
            throw DataError("prefill input: token id " + std::to_string(id) + " outside vocabulary of " +
                            std::to_string(model.vocab));
        }
        const std::size_t row = stream.size() + j;
        std::copy_n(model.token_embedding.w.data() + id * d, d, in.embeddings.data() + row * d);
        in.kinds.push_back(TokenKind::text);
        in.groups.push_back(Group::key);
        in.position_ids.push_back(row);
    }
    return in;
}

std::vector<std::vector<TokenKind>> KvCache::kinds() const {
    std::vector<std::vector<TokenKind>> out;
    out.reserve(layers.size());
    for (const auto& l : layers) {
        out.push_back(l.kinds);
    }
    return out;
}

std::vector<std::size_t> KvCache::sizes() const {
    std::vector<std::size_t> out;
    out.reserve(layers.size());
    for (const auto& l : layers) {
        out.push_back(l.size());
    }
    return out;
}

std::size_t KvCache::entries() const {
    std::size_t n = 0;
    for (const auto& l : layers) {
        n += l.size();
    }
    return n;
}

KvCache apply_keep_mask(const KvCache& cache, const prune::KvKeepMask& mask) {
    if (mask.size() != cache.layers.size()) {
        throw InvalidArgument("apply_keep_mask: mask layer count differs from cache");
    }
    const std::size_t d = cache.d_model;
    KvCache out;
    out.d_model = d;
    out.next_position = cache.next_position;
    out.layers.resize(cache.layers.size());
    for (std::size_t l = 0; l < cache.layers.size(); ++l) {
        const LayerCache& src = cache.layers[l];
        if (mask[l].size() != src.size()) {
            throw InvalidArgument("apply_keep_mask: mask size differs from layer " + std::to_string(l));
        }
        LayerCache& dst = out.layers[l];
        for (std::size_t i = 0; i < src.size(); ++i) {
            if (!mask[l][i]) {
                continue;
            }
            dst.keys.insert(dst.keys.end(), src.keys.begin() + static_cast<std::ptrdiff_t>(i * d),
                            src.keys.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
            dst.values.insert(dst.values.end(), src.values.begin() + static_cast<std::ptrdiff_t>(i * d),
                              src.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
            dst.position_ids.push_back(src.position_ids[i]);
            dst.kinds.push_back(src.kinds[i]);
        }
    }
    return out;
}

PrefillResult prefill(const ToyModel& model, const PrefillInput& input,
                      const std::optional<prune::PruneSchedule>& sched) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t d = model.d_model;
    const std::size_t dh = model.head_dim();
    const std::size_t heads = static_cast<std::size_t>(model.heads);
    if (input.d_model != d) {
        throw InvalidArgument("prefill: input d_model differs from model");
    }
    if (input.text_count() == 0) {
        throw InvalidArgument("prefill: input has no text positions");
    }

    // Residual stream of every input position; only `alive` rows advance.
    std::vector<double> x = input.embeddings;
    for (std::size_t i = 0; i < input.size(); ++i) {
        add_position(std::span<double>(x.data() + i * d, d), input.position_ids[i]);
    }
    std::vector<std::size_t> alive(input.size());
    for (std::size_t i = 0; i < alive.size(); ++i) {
        alive[i] = i;
    }

    PrefillResult res;
    res.cache.d_model = d;
    res.cache.layers.resize(static_cast<std::size_t>(model.layers));
    res.cache.next_position =
        input.position_ids.empty() ? 0 : *std::max_element(input.position_ids.begin(), input.position_ids.end()) + 1;
    res.layer_lengths.reserve(static_cast<std::size_t>(model.layers));

    std::vector<double> normed(d), hidden(model.mlp_hidden), tmp(d), attn_out(d), scores;
    for (int l = 0; l < model.layers; ++l) {
        const LayerWeights& lw = model.blocks[static_cast<std::size_t>(l)];
        std::size_t n = alive.size();
        std::vector<double> q(n * d), k(n * d), v(n * d);
        for (std::size_t i = 0; i < n; ++i) {
            rms_norm(std::span<const double>(x.data() + alive[i] * d, d), normed);
            lw.wq.apply(normed, std::span<double>(q.data() + i * d, d));
            lw.wk.apply(normed, std::span<double>(k.data() + i * d, d));
            lw.wv.apply(normed, std::span<double>(v.data() + i * d, d));
        }

        if (sched && sched->is_boundary(l)) {
            // Text rows of this layer's attention over its unpruned input.
            std::vector<std::size_t> text_rows;
            for (std::size_t i = 0; i < n; ++i) {
                if (input.kinds[alive[i]] != TokenKind::visual) {
                    text_rows.push_back(i);
                }
            }
            prune::AttentionMap attn{heads, text_rows.size(), n, std::vector<double>(heads * text_rows.size() * n, 0.0)};
            for (std::size_t h = 0; h < heads; ++h) {
                for (std::size_t t = 0; t < text_rows.size(); ++t) {
                    const std::size_t qi = text_rows[t];
                    std::span<double> row(attn.weights.data() + (h * text_rows.size() + t) * n, qi + 1);
                    head_scores(std::span<const double>(q.data() + qi * d, d), k.data(), qi + 1, d, h * dh, dh, row);
                    softmax_inplace(row);
                }
            }
            std::vector<std::size_t> query_ids(text_rows.size());
            for (std::size_t t = 0; t < query_ids.size(); ++t) {
                query_ids[t] = t;
            }
            std::vector<bool> keep_row(n, true);
            for (Group g : {Group::key, Group::non_key}) {
                std::vector<std::size_t> rows;
                for (std::size_t i = 0; i < n; ++i) {
                    if (input.kinds[alive[i]] == TokenKind::visual && input.groups[alive[i]] == g) {
                        rows.push_back(i);
                    }
                }
                const auto importance = prune::token_importance(attn, query_ids, rows);
                const auto kept = prune::select_at_boundary(importance, rows, sched->origin(g),
                                                            prune::retention_ratio(l, g, *sched));
                for (std::size_t i : rows) {
                    keep_row[i] = false;
                }
                for (std::size_t i : kept) {
                    keep_row[i] = true;
                }
            }
            std::size_t w = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (!keep_row[i]) {
                    continue;
                }
                if (w != i) {
                    alive[w] = alive[i];
                    std::copy_n(q.data() + i * d, d, q.data() + w * d);
                    std::copy_n(k.data() + i * d, d, k.data() + w * d);
                    std::copy_n(v.data() + i * d, d, v.data() + w * d);
                }
                ++w;
            }
            alive.resize(w);
            n = w;
            q.resize(n * d);
            k.resize(n * d);
            v.resize(n * d);
        }

        LayerCache& lc = res.cache.layers[static_cast<std::size_t>(l)];
        lc.keys = k;
        lc.values = v;
        lc.position_ids.reserve(n);
        lc.kinds.reserve(n);
        for (std::size_t i : alive) {
            lc.position_ids.push_back(input.position_ids[i]);
            lc.kinds.push_back(input.kinds[i]);
        }
        res.layer_lengths.push_back(n);

        scores.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t h = 0; h < heads; ++h) {
                std::span<double> row(scores.data(), i + 1);
                head_scores(std::span<const double>(q.data() + i * d, d), k.data(), i + 1, d, h * dh, dh, row);
                softmax_inplace(row);
                head_mix(row, v.data(), d, h * dh, dh, attn_out);
            }
            std::span<double> xi(x.data() + alive[i] * d, d);
            lw.wo.apply(attn_out, tmp);
            kernels::axpy(1.0, tmp, xi);
            mlp_residual(lw, xi, normed, hidden, tmp);
        }
    }

    res.survivors = alive;
    res.hidden.resize(alive.size() * d);
    for (std::size_t i = 0; i < alive.size(); ++i) {
        rms_norm(std::span<const double>(x.data() + alive[i] * d, d), std::span<double>(res.hidden.data() + i * d, d));
    }
    res.last_logits.resize(model.vocab);
    model.unembedding.apply(std::span<const double>(res.hidden.data() + (alive.size() - 1) * d, d), res.last_logits);
    res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

std::uint32_t argmax(std::span<const double> logits) {
    if (logits.empty()) {
        throw InvalidArgument("argmax: empty logits");
    }
    return static_cast<std::uint32_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

std::uint64_t DecodeOutput::logits_digest() const {
    Fnv1a64 h;
    for (const auto& step : step_logits) {
        for (double x : step) {
            h.update(x);
        }
    }
    return h.value();
}

DecodeOutput decode(const ToyModel& model, KvCache cache, std::span<const double> prefill_logits, std::size_t steps,
                    const prune::KvKeepMask* logit_mask) {
    if (steps < 1) {
        throw InvalidArgument("decode: steps must be >= 1");
    }
    if (cache.layers.size() != static_cast<std::size_t>(model.layers) || cache.d_model != model.d_model) {
        throw InvalidArgument("decode: cache does not match model");
    }
    if (logit_mask) {
        if (logit_mask->size() != cache.layers.size()) {
            throw InvalidArgument("decode: logit mask layer count differs from cache");
        }
        for (std::size_t l = 0; l < cache.layers.size(); ++l) {
            if ((*logit_mask)[l].size() != cache.layers[l].size()) {
                throw InvalidArgument("decode: logit mask size differs from layer " + std::to_string(l));
            }
        }
    }
    const std::size_t d = model.d_model;
    const std::size_t dh = model.head_dim();
    const std::size_t heads = static_cast<std::size_t>(model.heads);

    DecodeOutput out;
    out.layers = static_cast<std::size_t>(model.layers);
    out.heads = heads;
    out.tokens.reserve(steps);
    out.samples.reserve(steps * out.layers * heads);

    std::uint32_t input_token = argmax(prefill_logits);
    std::vector<double> x(d), normed(d), q(d), kv(d), attn_out(d), tmp(d), hidden(model.mlp_hidden), scores;
    std::vector<double> logits(model.vocab);
    for (std::size_t step = 0; step < steps; ++step) {
        std::copy_n(model.token_embedding.w.data() + input_token * d, d, x.data());
        add_position(x, cache.next_position);
        for (std::size_t l = 0; l < out.layers; ++l) {
            const LayerWeights& lw = model.blocks[l];
            LayerCache& lc = cache.layers[l];
            rms_norm(x, normed);
            lw.wq.apply(normed, q);
            lw.wk.apply(normed, kv);
            lc.keys.insert(lc.keys.end(), kv.begin(), kv.end());
            lw.wv.apply(normed, kv);
            lc.values.insert(lc.values.end(), kv.begin(), kv.end());
            lc.position_ids.push_back(cache.next_position);
            lc.kinds.push_back(TokenKind::generated);

            const std::size_t n = lc.size();
            const std::vector<bool>* mask = logit_mask ? &(*logit_mask)[l] : nullptr;
            scores.resize(n);
            for (std::size_t h = 0; h < heads; ++h) {
                head_scores(q, lc.keys.data(), n, d, h * dh, dh, scores);
                if (mask) {
                    for (std::size_t j = 0; j < mask->size(); ++j) {
                        if (!(*mask)[j]) {
                            scores[j] = kNegInf;
                        }
                    }
                }
                softmax_inplace(scores);
                RatioSample s;
                for (std::size_t j = 0; j < n; ++j) {
                    if (lc.kinds[j] == TokenKind::visual) {
                        s.visual += scores[j];
                    } else if (lc.kinds[j] == TokenKind::text) {
                        s.text += scores[j];
                    }
                }
                out.samples.push_back(s);
                head_mix(scores, lc.values.data(), d, h * dh, dh, attn_out);
            }
            lw.wo.apply(attn_out, tmp);
            kernels::axpy(1.0, tmp, x);
            mlp_residual(lw, x, normed, hidden, tmp);
        }
        rms_norm(x, normed);
        model.unembedding.apply(normed, logits);
        out.step_logits.push_back(logits);
        input_token = argmax(logits);
        out.tokens.push_back(input_token);
        ++cache.next_position;
    }
    return out;
}

std::vector<std::pair<double, double>> attention_ratio_trace(const DecodeOutput& out) {
    if (out.layers == 0 || out.heads == 0 || out.samples.empty()) {
        throw InvalidArgument("attention_ratio_trace: no decode step recorded");
    }
    const std::size_t steps = out.samples.size() / (out.layers * out.heads);
    std::vector<std::pair<double, double>> ratios(out.layers);
    for (std::size_t l = 0; l < out.layers; ++l) {
        double vis = 0.0;
        std::size_t count = 0;
        for (std::size_t s = 0; s < steps; ++s) {
            for (std::size_t h = 0; h < out.heads; ++h) {
                const RatioSample& rs = out.sample(s, l, h);
                const double prompt = rs.visual + rs.text;
                if (prompt > 0.0) {
                    vis += rs.visual / prompt;
                    ++count;
                }
            }
        }
        if (count == 0) {
            throw InvalidArgument("attention_ratio_trace: layer " + std::to_string(l) + " has no prompt positions");
        }
        const double v = vis / static_cast<double>(count);
        ratios[l] = {v, 1.0 - v};
    }
    return ratios;
}

}  // namespace metok::model
