// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace metok {

/// A height x width grid of `channels`-dimensional tokens, row-major, channel
/// innermost. A scalar grid is the channels == 1 case.
struct TokenGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;
    std::vector<double> data;

    TokenGrid() = default;
    TokenGrid(std::size_t h, std::size_t w, std::size_t c);
    TokenGrid(std::size_t h, std::size_t w, std::size_t c, std::vector<double> values);

    std::size_t tokens() const { return height * width; }

    std::span<const double> token(std::size_t row, std::size_t col) const {
        return {data.data() + (row * width + col) * channels, channels};
    }
    std::span<double> token(std::size_t row, std::size_t col) {
        return {data.data() + (row * width + col) * channels, channels};
    }

    bool operator==(const TokenGrid&) const = default;
};

/// a . b / (|a| |b|). Throws InvalidArgument on length mismatch or zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

/// Euclidean norm.
double norm(std::span<const double> v);

/// Window-average pooling with a square stride. The output is
/// ceil(h/stride) x ceil(w/stride); edge windows average only the cells that
/// fall inside the grid.
TokenGrid avg_pool_2d(const TokenGrid& grid, std::size_t stride);

/// Number of output cells avg_pool_2d produces along one axis.
constexpr std::size_t pooled_extent(std::size_t extent, std::size_t stride) {
    return (extent + stride - 1) / stride;
}

/// Indices of the k largest scores, ties toward the smaller index, returned
/// ascending. Throws InvalidArgument if k > scores.size().
std::vector<std::size_t> top_k_stable(std::span<const double> scores, std::size_t k);

/// Numerically stable softmax. -inf entries map to exactly 0. Throws
/// InvalidArgument if every entry is -inf.
std::vector<double> softmax_row(std::span<const double> logits);

/// In-place variant of softmax_row.
void softmax_inplace(std::span<double> logits);

/// ceil(ratio * n) where products within 1e-9 of an integer snap to it, so
/// 0.55 * 100 counts as 55 rather than 56.
std::size_t ceil_count(double ratio, std::size_t n);

}  // namespace metok
