// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "metok/tensor.hpp"

namespace metok {

/// Visual tokens for one video: frames x (height x width) tokens x dim,
/// frame-major then row-major over the token grid.
struct FrameEmbeddings {
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t dim = 0;
    std::vector<double> tokens;

    FrameEmbeddings() = default;
    FrameEmbeddings(std::size_t t, std::size_t h, std::size_t w, std::size_t d);

    std::size_t tokens_per_frame() const { return height * width; }
    std::size_t frame_stride() const { return height * width * dim; }

    std::span<const double> frame(std::size_t f) const {
        return {tokens.data() + f * frame_stride(), frame_stride()};
    }
    std::span<double> frame(std::size_t f) {
        return {tokens.data() + f * frame_stride(), frame_stride()};
    }
    std::span<const double> token(std::size_t f, std::size_t n) const {
        return {tokens.data() + f * frame_stride() + n * dim, dim};
    }

    TokenGrid frame_grid(std::size_t f) const;

    /// Throws DataError unless sizes agree, dims are positive and values finite.
    void validate() const;

    bool operator==(const FrameEmbeddings&) const = default;
};

/// Text side of a prompt: a dim-sized embedding used for relevance scoring
/// plus the token ids the language model consumes.
struct TextEmbedding {
    std::vector<double> vector;
    std::vector<std::uint32_t> prompt_ids;

    void validate() const;

    bool operator==(const TextEmbedding&) const = default;
};

// MEBF binary format, little-endian:
//   "MEBF" | u8 version (1) | u8 record type (1 frames, 2 text)
//   type 1: u32 T, u32 h, u32 w, u32 d, then T*h*w*d f32
//   type 2: u32 d, u32 M, then d f32, then M u32 token ids
inline constexpr std::uint8_t kMebfVersion = 1;
inline constexpr std::uint8_t kMebfFrameRecord = 1;
inline constexpr std::uint8_t kMebfTextRecord = 2;

std::vector<std::byte> encode_embeddings(const FrameEmbeddings& v);
std::vector<std::byte> encode_text(const TextEmbedding& t);
FrameEmbeddings decode_embeddings(std::span<const std::byte> bytes);
TextEmbedding decode_text(std::span<const std::byte> bytes);

void write_embeddings(const FrameEmbeddings& v, const std::filesystem::path& path);
FrameEmbeddings read_embeddings(const std::filesystem::path& path);
void write_text(const TextEmbedding& t, const std::filesystem::path& path);
TextEmbedding read_text(const std::filesystem::path& path);

/// Rounds every value through 32-bit float, which is what a file round trip does.
FrameEmbeddings quantize_f32(FrameEmbeddings v);

}  // namespace metok
