// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#include "metok/synthetic.hpp"

#include <cmath>
#include <string>

#include "metok/error.hpp"
#include "metok/rng.hpp"
#include "metok/tensor.hpp"

namespace metok {

namespace {

// Uniform [-1, 1) has variance 1/3; sqrt(3) makes the per-entry draw unit variance.
constexpr double kUnitVarianceScale = 1.7320508075688772;
// Spatial pattern amplitude relative to the segment centre.
constexpr double kPatternScale = 0.5;

void add_noise(Rng64& rng, std::span<const double> clean, std::span<double> out, double noise_scale) {
    const double per_entry =
        noise_scale * norm(clean) / std::sqrt(static_cast<double>(clean.size())) * kUnitVarianceScale;
    for (std::size_t j = 0; j < clean.size(); ++j) {
        out[j] = clean[j] + per_entry * rng.next_unit();
    }
}

}  // namespace

SyntheticVideo gen_synthetic(std::size_t frames, std::size_t height, std::size_t width, std::size_t dim,
                             std::uint64_t seed, const EventProfile& profile) {
    if (frames == 0 || height == 0 || width == 0 || dim == 0) {
        throw InvalidArgument("gen_synthetic: dimensions must be positive");
    }
    if (profile.segments == 0 || profile.segments > frames) {
        throw InvalidArgument("gen_synthetic: segments (" + std::to_string(profile.segments) +
                              ") must be in [1, frames=" + std::to_string(frames) + "]");
    }
    if (profile.prompt_length == 0 || profile.vocab_size == 0) {
        throw InvalidArgument("gen_synthetic: prompt length and vocab size must be positive");
    }

    Rng64 rng(seed);
    const std::size_t n_tokens = height * width;
    const std::size_t segs = profile.segments;

    // Clean token grids, one per segment.
    std::vector<std::vector<double>> base(segs, std::vector<double>(n_tokens * dim));
    std::vector<std::vector<double>> centre(segs, std::vector<double>(dim));
    for (std::size_t g = 0; g < segs; ++g) {
        for (double& x : centre[g]) {
            x = rng.next_unit();
        }
        for (std::size_t p = 0; p < n_tokens; ++p) {
            for (std::size_t j = 0; j < dim; ++j) {
                base[g][p * dim + j] = centre[g][j] + kPatternScale * rng.next_unit();
            }
        }
    }

    SyntheticVideo out;
    out.frames = FrameEmbeddings(frames, height, width, dim);
    out.segment_starts.reserve(segs);
    for (std::size_t g = 0; g < segs; ++g) {
        out.segment_starts.push_back(g * frames / segs);
    }

    std::size_t seg = 0;
    for (std::size_t f = 0; f < frames; ++f) {
        while (seg + 1 < segs && f >= out.segment_starts[seg + 1]) {
            ++seg;
        }
        auto frame = out.frames.frame(f);
        for (std::size_t p = 0; p < n_tokens; ++p) {
            std::span<const double> clean(base[seg].data() + p * dim, dim);
            add_noise(rng, clean, frame.subspan(p * dim, dim), profile.noise_scale);
        }
    }

    out.text_segment = static_cast<std::size_t>(rng.next_below(segs));
    // Text sits near the chosen segment's mean token.
    std::vector<double> mean(dim, 0.0);
    for (std::size_t p = 0; p < n_tokens; ++p) {
        for (std::size_t j = 0; j < dim; ++j) {
            mean[j] += base[out.text_segment][p * dim + j];
        }
    }
    for (double& x : mean) {
        x /= static_cast<double>(n_tokens);
    }
    out.text.vector.resize(dim);
    add_noise(rng, mean, out.text.vector, profile.noise_scale);
    out.text.prompt_ids.resize(profile.prompt_length);
    for (auto& id : out.text.prompt_ids) {
        id = static_cast<std::uint32_t>(rng.next_below(profile.vocab_size));
    }
    return out;
}

}  // namespace metok
