// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#include "metok/schedule.hpp"

#include <string>

#include "metok/error.hpp"
#include "metok/tensor.hpp"

namespace metok::prune {

PruneSchedule PruneSchedule::from_config(const RunConfig& cfg, std::size_t origin_key, std::size_t origin_non_key) {
    PruneSchedule s;
    s.l1 = cfg.layer_boundaries[0];
    s.l2 = cfg.layer_boundaries[1];
    s.l3 = cfg.layer_boundaries[2];
    s.r = cfg.r;
    s.alpha = cfg.alpha;
    s.total_layers = cfg.layers;
    s.origin_key = origin_key;
    s.origin_non_key = origin_non_key;
    return s;
}

double retention_ratio(int layer, Group group, const PruneSchedule& sched) {
    if (layer < 0 || layer >= sched.total_layers) {
        throw InvalidArgument("retention_ratio: layer " + std::to_string(layer) + " outside [0, " +
                              std::to_string(sched.total_layers) + ")");
    }
    if (layer < sched.l1) {
        return 1.0;
    }
    if (group == Group::key) {
        if (layer < sched.l2) {
            return sched.r;
        }
        if (layer < sched.l3) {
            return sched.r * sched.r;
        }
        return 0.0;
    }
    if (layer < sched.l2) {
        return sched.alpha * sched.r;
    }
    return 0.0;
}

std::size_t retained_count(int layer, Group group, const PruneSchedule& sched) {
    return ceil_count(retention_ratio(layer, group, sched), sched.origin(group));
}

std::vector<double> token_importance(const AttentionMap& attn, std::span<const std::size_t> text_queries,
                                     std::span<const std::size_t> visual_keys) {
    if (text_queries.empty()) {
        throw InvalidArgument("token_importance: no text query positions");
    }
    if (attn.heads == 0) {
        throw InvalidArgument("token_importance: attention map has no heads");
    }
    std::vector<double> scores(visual_keys.size(), 0.0);
    for (std::size_t h = 0; h < attn.heads; ++h) {
        for (std::size_t q : text_queries) {
            for (std::size_t j = 0; j < visual_keys.size(); ++j) {
                scores[j] += attn.at(h, q, visual_keys[j]);
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(attn.heads * text_queries.size());
    for (double& s : scores) {
        s *= inv;
    }
    return scores;
}

std::vector<std::size_t> select_at_boundary(std::span<const double> scores, std::span<const std::size_t> survivors,
                                            std::size_t origin_count, double ratio) {
    if (scores.size() != survivors.size()) {
        throw InvalidArgument("select_at_boundary: scores and survivors differ in length");
    }
    const std::size_t keep = ceil_count(ratio, origin_count);
    if (keep > survivors.size()) {
        throw ScheduleError("select_at_boundary: schedule keeps " + std::to_string(keep) + " of " +
                            std::to_string(origin_count) + " but only " + std::to_string(survivors.size()) +
                            " survive");
    }
    std::vector<std::size_t> out;
    out.reserve(keep);
    for (std::size_t i : top_k_stable(scores, keep)) {
        out.push_back(survivors[i]);
    }
    return out;
}

KeepSet plan_keep_set(const PruneSchedule& sched, Group group, std::span<const std::vector<double>> tier_scores) {
    if (tier_scores.size() != 3) {
        throw InvalidArgument("plan_keep_set: need scores for three boundaries");
    }
    const std::size_t origin = sched.origin(group);
    std::vector<std::size_t> survivors(origin);
    for (std::size_t i = 0; i < origin; ++i) {
        survivors[i] = i;
    }
    const std::array<int, 3> bounds{sched.l1, sched.l2, sched.l3};
    KeepSet ks;
    for (std::size_t t = 0; t < 3; ++t) {
        if (tier_scores[t].size() != origin) {
            throw InvalidArgument("plan_keep_set: tier scores must cover every original position");
        }
        if (bounds[t] < sched.total_layers) {
            std::vector<double> s;
            s.reserve(survivors.size());
            for (std::size_t i : survivors) {
                s.push_back(tier_scores[t][i]);
            }
            survivors = select_at_boundary(s, survivors, origin, retention_ratio(bounds[t], group, sched));
        }
        ks.tiers[t] = survivors;
    }
    return ks;
}

KvKeepMask kv_keep_mask(int l1, std::span<const std::vector<TokenKind>> cached_kinds) {
    KvKeepMask mask(cached_kinds.size());
    for (std::size_t l = 0; l < cached_kinds.size(); ++l) {
        const bool drop_visual = static_cast<int>(l) >= l1;
        mask[l].resize(cached_kinds[l].size());
        for (std::size_t i = 0; i < cached_kinds[l].size(); ++i) {
            mask[l][i] = !(drop_visual && cached_kinds[l][i] == TokenKind::visual);
        }
    }
    return mask;
}

std::vector<std::size_t> kv_keep_counts(int l1, std::span<const std::size_t> visual, std::size_t text) {
    std::vector<std::size_t> out(visual.size());
    for (std::size_t l = 0; l < visual.size(); ++l) {
        out[l] = (static_cast<int>(l) >= l1 ? 0 : visual[l]) + text;
    }
    return out;
}

}  // namespace metok::prune
