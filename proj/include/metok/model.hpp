// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// A small deterministic decoder-only transformer with an explicit KV cache.
// Pre-norm residual blocks (RMS norm without gain), no biases, GELU MLP,
// sinusoidal absolute positions keyed by each token's original position id.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "metok/config.hpp"
#include "metok/embeddings.hpp"
#include "metok/schedule.hpp"
#include "metok/vision.hpp"

namespace metok::model {

inline constexpr std::size_t kDefaultVocab = 256;

/// Row-major (rows x cols) weight matrix; y = W x.
struct Linear {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> w;

    void apply(std::span<const double> x, std::span<double> y) const;
};

struct LayerWeights {
    Linear wq, wk, wv, wo;
    Linear mlp_in, mlp_out;
};

struct ToyModel {
    int layers = 0;
    int heads = 0;
    std::size_t d_model = 0;
    std::size_t mlp_hidden = 0;
    std::size_t vocab = 0;
    std::size_t visual_dim = 0;

    Linear token_embedding;  // vocab x d_model, row per token id
    Linear visual_projector; // d_model x visual_dim
    std::vector<LayerWeights> blocks;
    Linear unembedding;      // vocab x d_model

    std::size_t head_dim() const { return d_model / static_cast<std::size_t>(heads); }
    std::uint64_t checksum() const;
};

/// Draws every weight from Rng64(cfg.seed). Throws InvalidArgument if heads
/// does not divide d_model.
ToyModel init_model(const RunConfig& cfg, std::size_t visual_dim, std::size_t vocab = kDefaultVocab);

/// X = [X_vis; X_text] before positional encoding.
struct PrefillInput {
    std::size_t d_model = 0;
    std::vector<double> embeddings;  // size() x d_model
    std::vector<prune::TokenKind> kinds;
    std::vector<prune::Group> groups;  // meaningful for visual positions
    std::vector<std::size_t> position_ids;

    std::size_t size() const { return kinds.size(); }
    std::size_t visual_count() const;
    std::size_t text_count() const { return size() - visual_count(); }
    std::size_t group_count(prune::Group g) const;
};

/// Projects visual tokens with the model's projector and looks up prompt ids.
/// Throws DataError on dim mismatch or out-of-vocabulary ids.
PrefillInput make_prefill_input(const ToyModel& model, const vision::TokenStream& stream, const TextEmbedding& text);

struct LayerCache {
    std::vector<double> keys;    // size() x d_model
    std::vector<double> values;  // size() x d_model
    std::vector<std::size_t> position_ids;
    std::vector<prune::TokenKind> kinds;

    std::size_t size() const { return kinds.size(); }
};

struct KvCache {
    std::size_t d_model = 0;
    std::vector<LayerCache> layers;
    /// Position id the next generated token takes.
    std::size_t next_position = 0;

    std::vector<std::vector<prune::TokenKind>> kinds() const;
    std::vector<std::size_t> sizes() const;
    std::size_t entries() const;
};

/// Physically removes masked entries.
KvCache apply_keep_mask(const KvCache& cache, const prune::KvKeepMask& mask);

struct PrefillResult {
    KvCache cache;
    /// Final-norm hidden state of every surviving position, in sequence order.
    std::vector<double> hidden;
    std::vector<double> last_logits;
    /// Sequence length processed by each layer.
    std::vector<std::size_t> layer_lengths;
    /// Original input indices alive after the last layer.
    std::vector<std::size_t> survivors;
    double wall_ms = 0.0;
};

/// Full causal prefill. When `sched` is given, visual tokens are pruned at
/// each boundary layer below the layer count: that layer's attention from
/// text queries to visual keys (measured on its unpruned input) ranks the
/// survivors of each group, and the layer then runs on the kept set. Text is
/// never pruned. Throws ScheduleError if the schedule is infeasible.
PrefillResult prefill(const ToyModel& model, const PrefillInput& input,
                      const std::optional<prune::PruneSchedule>& sched);

/// Attention mass a decode query puts on visual and on text prompt positions
/// (generated positions excluded).
struct RatioSample {
    double visual = 0.0;
    double text = 0.0;
};

struct DecodeOutput {
    std::vector<std::uint32_t> tokens;
    std::vector<std::vector<double>> step_logits;
    std::size_t layers = 0;
    std::size_t heads = 0;
    std::vector<RatioSample> samples;  // [step][layer][head]

    const RatioSample& sample(std::size_t step, std::size_t layer, std::size_t head) const {
        return samples[(step * layers + layer) * heads + head];
    }
    /// Digest over every step's logits.
    std::uint64_t logits_digest() const;
};

/// Greedy decoding. The first input is the argmax of `prefill_logits`; each
/// step appends the new token's K/V at every layer. With `logit_mask`, masked
/// initial cache entries get a -inf attention logit instead of being removed.
/// Throws InvalidArgument if steps < 1.
DecodeOutput decode(const ToyModel& model, KvCache cache, std::span<const double> prefill_logits, std::size_t steps,
                    const prune::KvKeepMask* logit_mask = nullptr);

/// Per layer (visual_ratio, text_ratio): each sample normalized over prompt
/// positions, then averaged over steps and heads. Throws InvalidArgument if
/// no step was recorded or a layer never saw a prompt position.
std::vector<std::pair<double, double>> attention_ratio_trace(const DecodeOutput& out);

std::uint32_t argmax(std::span<const double> logits);

}  // namespace metok::model
