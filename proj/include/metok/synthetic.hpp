// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "metok/embeddings.hpp"

namespace metok {

struct EventProfile {
    /// Planted ground-truth segments (G). Segment g spans frames
    /// [g*T/G, (g+1)*T/G).
    std::size_t segments = 1;
    /// Per-token noise norm relative to the clean token's norm.
    double noise_scale = 0.05;
    std::size_t prompt_length = 8;
    std::uint32_t vocab_size = 256;
};

struct SyntheticVideo {
    FrameEmbeddings frames;
    TextEmbedding text;
    /// First frame of each planted segment.
    std::vector<std::size_t> segment_starts;
    /// Segment whose content the text embedding sits near.
    std::size_t text_segment = 0;
};

/// Deterministic stand-in for vision-encoder output. Each planted segment
/// draws a centre vector plus a per-position spatial pattern; every frame of
/// the segment repeats that grid with fresh noise, so adjacent-frame
/// similarity dips only at segment boundaries.
SyntheticVideo gen_synthetic(std::size_t frames, std::size_t height, std::size_t width, std::size_t dim,
                             std::uint64_t seed, const EventProfile& profile);

}  // namespace metok
