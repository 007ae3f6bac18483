// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Event-aware reduction of visual tokens before they reach the language
// model: segment the video at the lowest adjacent-frame similarities, rank
// events and frames by text relevance, then pool each frame with a stride
// picked by its key/non-key status.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "metok/config.hpp"
#include "metok/embeddings.hpp"

namespace metok::vision {

/// How a frame's N x d token matrix is reduced before cosine similarity.
enum class FrameReduce { mean, flatten };

/// How per-frame relevance scores are aggregated into an event score.
enum class EventScore { mean, max };

struct VisionOptions {
    FrameReduce frame_reduce = FrameReduce::mean;
    EventScore event_score = EventScore::mean;
    /// Uniform stride used when the vision stage is disabled (the vanilla
    /// model's own pooling). 1 keeps raw tokens.
    std::size_t base_stride = 1;
};

struct EventPartition {
    std::size_t frames = 0;
    /// First frame of each event; event_starts[0] == 0, strictly ascending.
    std::vector<std::size_t> event_starts;
    /// cos(frame i, frame i+1), T-1 entries.
    std::vector<double> adjacent_similarity;
    std::vector<double> frame_scores;
    std::vector<double> event_scores;
    std::vector<bool> key_event;
    std::vector<bool> key_frame;

    std::size_t event_count() const { return event_starts.size(); }
    std::size_t event_begin(std::size_t e) const { return event_starts[e]; }
    std::size_t event_end(std::size_t e) const {
        return e + 1 < event_starts.size() ? event_starts[e + 1] : frames;
    }
    std::size_t event_length(std::size_t e) const { return event_end(e) - event_begin(e); }
    /// Event id of every frame.
    std::vector<std::size_t> frame_events() const;
};

struct TokenOrigin {
    std::uint32_t event = 0;
    std::uint32_t frame = 0;
    bool key_event = false;
    bool key_frame = false;
    /// Top-left cell of the pooling window in the frame's native grid.
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    std::uint32_t stride = 1;

    bool operator==(const TokenOrigin&) const = default;
};

/// Flat sequence of visual tokens in frame order with per-token provenance.
struct TokenStream {
    std::size_t dim = 0;
    std::vector<double> tokens;
    std::vector<TokenOrigin> origin;

    std::size_t size() const { return origin.size(); }
    std::span<const double> token(std::size_t i) const { return {tokens.data() + i * dim, dim}; }
    std::size_t count_key_event() const;
    std::size_t count_non_key_event() const { return size() - count_key_event(); }
};

std::vector<double> frame_vector(const FrameEmbeddings& v, std::size_t frame, FrameReduce mode);

/// cos(v_i, v_{i+1}) for i in [0, T-1).
std::vector<double> adjacent_similarities(const FrameEmbeddings& v, FrameReduce mode = FrameReduce::mean);

/// Cuts after the k-1 smallest similarities (ties toward the smaller index).
/// `sims` has T-1 entries. Throws InvalidArgument unless 1 <= k <= T.
EventPartition partition_from_similarities(std::span<const double> sims, std::size_t k);

EventPartition segment_events(const FrameEmbeddings& v, std::size_t k, FrameReduce mode = FrameReduce::mean);

/// Fills frame_scores (cosine to the text embedding) and event_scores.
void score_relevance(const FrameEmbeddings& v, const TextEmbedding& t, EventPartition& partition,
                     const VisionOptions& options = {});

/// ceil(alpha * k) with float snapping; at least 1.
std::size_t key_event_count(double alpha, std::size_t k);
/// max(1, ceil(beta * len)).
std::size_t key_frame_count(double beta, std::size_t event_length);

/// Fills key_event and key_frame from the scores.
void select_keys(EventPartition& partition, double alpha, double beta);

/// round(s / alpha), at least 1.
std::size_t scaled_stride(std::size_t stride, double alpha);

/// Stride for a frame by the four-way key event / key frame rule.
std::size_t frame_stride(bool key_event, bool key_frame, std::size_t s1, std::size_t s2, double alpha);

TokenStream adaptive_pool(const FrameEmbeddings& v, const EventPartition& partition, std::size_t s1,
                          std::size_t s2, double alpha);

/// Every frame pooled with the same stride, provenance kept.
TokenStream uniform_pool(const FrameEmbeddings& v, const EventPartition& partition, std::size_t stride);

struct VisionResult {
    TokenStream stream;
    EventPartition partition;
};

/// segment_events -> score_relevance -> select_keys -> adaptive_pool. With the
/// vision stage disabled the partition is still computed (it tags groups for
/// later stages) but every frame uses options.base_stride.
VisionResult run_vision_stage(const FrameEmbeddings& v, const TextEmbedding& t, const RunConfig& cfg,
                              const VisionOptions& options = {});

}  // namespace metok::vision
