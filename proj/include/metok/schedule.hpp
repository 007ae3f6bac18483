// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Layer-wise retention policy for visual tokens inside the language model and
// the decode-time KV-cache keep mask.
//
// Retention is relative to the number of visual tokens that entered the
// model, per group:
//   key      1 (l < l1), r (l1 <= l < l2), r^2 (l2 <= l < l3), 0 (l >= l3)
//   non-key  1 (l < l1), alpha*r (l1 <= l < l2), 0 (l >= l2)
// A boundary at or beyond the layer count simply never fires.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "metok/config.hpp"

namespace metok::prune {

enum class Group { key, non_key };

enum class TokenKind : std::uint8_t { visual, text, generated };

struct PruneSchedule {
    int l1 = 0;
    int l2 = 0;
    int l3 = 0;
    double r = 1.0;
    double alpha = 1.0;
    int total_layers = 0;
    /// Visual tokens per group entering layer 0.
    std::size_t origin_key = 0;
    std::size_t origin_non_key = 0;

    static PruneSchedule from_config(const RunConfig& cfg, std::size_t origin_key, std::size_t origin_non_key);

    std::size_t origin(Group g) const { return g == Group::key ? origin_key : origin_non_key; }
    bool is_boundary(int layer) const { return layer == l1 || layer == l2 || layer == l3; }
};

/// Fraction of the group's original tokens alive at `layer`. Throws
/// InvalidArgument unless 0 <= layer < total_layers.
double retention_ratio(int layer, Group group, const PruneSchedule& sched);

/// ceil(ratio * origin) for the group at `layer`.
std::size_t retained_count(int layer, Group group, const PruneSchedule& sched);

/// Attention probabilities recorded at one layer: for every head and every
/// recorded query row, a distribution over `keys` positions.
struct AttentionMap {
    std::size_t heads = 0;
    std::size_t queries = 0;
    std::size_t keys = 0;
    std::vector<double> weights;  // [head][query][key]

    double at(std::size_t h, std::size_t q, std::size_t k) const { return weights[(h * queries + q) * keys + k]; }
};

/// Importance of each visual key: mean over heads and over the given text
/// query rows of the attention it receives. Throws InvalidArgument if
/// text_queries is empty.
std::vector<double> token_importance(const AttentionMap& attn, std::span<const std::size_t> text_queries,
                                     std::span<const std::size_t> visual_keys);

/// Keeps the top ceil(ratio * origin_count) of `survivors` by score (scores
/// aligned with survivors), returned ascending. Throws ScheduleError if that
/// exceeds the number of survivors.
std::vector<std::size_t> select_at_boundary(std::span<const double> scores, std::span<const std::size_t> survivors,
                                            std::size_t origin_count, double ratio);

/// Nested survivor sets of one group at the three boundaries (l1, l2, l3 tiers).
struct KeepSet {
    std::array<std::vector<std::size_t>, 3> tiers;
};

/// Runs select_at_boundary at each boundary in turn. tier_scores[i] holds a
/// score for every original position of the group, as measured at boundary i.
KeepSet plan_keep_set(const PruneSchedule& sched, Group group, std::span<const std::vector<double>> tier_scores);

using KvKeepMask = std::vector<std::vector<bool>>;

/// Per-layer keep mask over cached positions. Layers below l1 keep all;
/// layers >= l1 drop every visual position. Text and generated positions are
/// always kept.
KvKeepMask kv_keep_mask(int l1, std::span<const std::vector<TokenKind>> cached_kinds);

/// Count-only form: kept positions per layer for a cache holding
/// `visual[l]` visual and `text` text positions at layer l.
std::vector<std::size_t> kv_keep_counts(int l1, std::span<const std::size_t> visual, std::size_t text);

}  // namespace metok::prune
