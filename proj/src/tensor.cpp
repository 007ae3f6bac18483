// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#include "metok/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "metok/error.hpp"
#include "metok/kernels.hpp"

namespace metok {

TokenGrid::TokenGrid(std::size_t h, std::size_t w, std::size_t c)
    : height(h), width(w), channels(c), data(h * w * c, 0.0) {}

TokenGrid::TokenGrid(std::size_t h, std::size_t w, std::size_t c, std::vector<double> values)
    : height(h), width(w), channels(c), data(std::move(values)) {
    if (data.size() != h * w * c) {
        throw InvalidArgument("TokenGrid: expected " + std::to_string(h * w * c) + " values, got " +
                              std::to_string(data.size()));
    }
}

double norm(std::span<const double> v) {
    return std::sqrt(kernels::dot(v, v));
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InvalidArgument("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    }
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw InvalidArgument("cosine: zero-norm input");
    }
    const double c = kernels::dot(a, b) / (na * nb);
    return std::clamp(c, -1.0, 1.0);
}

TokenGrid avg_pool_2d(const TokenGrid& grid, std::size_t stride) {
    if (stride < 1) {
        throw InvalidArgument("avg_pool_2d: stride must be >= 1");
    }
    if (stride == 1) {
        return grid;
    }
    const std::size_t out_h = pooled_extent(grid.height, stride);
    const std::size_t out_w = pooled_extent(grid.width, stride);
    TokenGrid out(out_h, out_w, grid.channels);
    for (std::size_t orow = 0; orow < out_h; ++orow) {
        const std::size_t r0 = orow * stride;
        const std::size_t r1 = std::min(r0 + stride, grid.height);
        for (std::size_t ocol = 0; ocol < out_w; ++ocol) {
            const std::size_t c0 = ocol * stride;
            const std::size_t c1 = std::min(c0 + stride, grid.width);
            auto acc = out.token(orow, ocol);
            for (std::size_t r = r0; r < r1; ++r) {
                for (std::size_t c = c0; c < c1; ++c) {
                    kernels::axpy(1.0, grid.token(r, c), acc);
                }
            }
            const double cells = static_cast<double>((r1 - r0) * (c1 - c0));
            for (double& x : acc) {
                x /= cells;
            }
        }
    }
    return out;
}

std::vector<std::size_t> top_k_stable(std::span<const double> scores, std::size_t k) {
    if (k > scores.size()) {
        throw InvalidArgument("top_k_stable: k=" + std::to_string(k) + " exceeds " +
                              std::to_string(scores.size()) + " scores");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) {
                              return scores[a] > scores[b];
                          }
                          return a < b;
                      });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

void softmax_inplace(std::span<double> logits) {
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    double max = neg_inf;
    for (double x : logits) {
        max = std::max(max, x);
    }
    if (max == neg_inf) {
        throw InvalidArgument("softmax_row: every entry is -inf");
    }
    double sum = 0.0;
    for (double& x : logits) {
        x = (x == neg_inf) ? 0.0 : std::exp(x - max);
        sum += x;
    }
    const double inv = 1.0 / sum;
    for (double& x : logits) {
        x *= inv;
    }
}

std::vector<double> softmax_row(std::span<const double> logits) {
    std::vector<double> out(logits.begin(), logits.end());
    softmax_inplace(out);
    return out;
}

std::size_t ceil_count(double ratio, std::size_t n) {
    const double x = ratio * static_cast<double>(n);
    const double nearest = std::round(x);
    if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, std::abs(x))) {
        return static_cast<std::size_t>(std::max(0.0, nearest));
    }
    return static_cast<std::size_t>(std::max(0.0, std::ceil(x)));
}

}  // namespace metok
