// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#include "metok/vision.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "metok/error.hpp"
#include "metok/kernels.hpp"
#include "metok/tensor.hpp"

namespace metok::vision {

std::vector<std::size_t> EventPartition::frame_events() const {
    std::vector<std::size_t> out(frames);
    for (std::size_t e = 0; e < event_count(); ++e) {
        std::fill(out.begin() + static_cast<std::ptrdiff_t>(event_begin(e)),
                  out.begin() + static_cast<std::ptrdiff_t>(event_end(e)), e);
    }
    return out;
}

std::size_t TokenStream::count_key_event() const {
    return static_cast<std::size_t>(
        std::count_if(origin.begin(), origin.end(), [](const TokenOrigin& o) { return o.key_event; }));
}

std::vector<double> frame_vector(const FrameEmbeddings& v, std::size_t frame, FrameReduce mode) {
    auto span = v.frame(frame);
    if (mode == FrameReduce::flatten) {
        return {span.begin(), span.end()};
    }
    std::vector<double> mean(v.dim, 0.0);
    for (std::size_t n = 0; n < v.tokens_per_frame(); ++n) {
        kernels::axpy(1.0, v.token(frame, n), mean);
    }
    kernels::scale(1.0 / static_cast<double>(v.tokens_per_frame()), mean);
    return mean;
}

std::vector<double> adjacent_similarities(const FrameEmbeddings& v, FrameReduce mode) {
    std::vector<double> sims;
    if (v.frames < 2) {
        return sims;
    }
    sims.reserve(v.frames - 1);
    std::vector<double> prev = frame_vector(v, 0, mode);
    for (std::size_t f = 1; f < v.frames; ++f) {
        std::vector<double> cur = frame_vector(v, f, mode);
        sims.push_back(cosine(prev, cur));
        prev = std::move(cur);
    }
    return sims;
}

EventPartition partition_from_similarities(std::span<const double> sims, std::size_t k) {
    const std::size_t frames = sims.size() + 1;
    if (k < 1 || k > frames) {
        throw InvalidArgument("segment_events: k=" + std::to_string(k) + " must be in [1, T=" +
                              std::to_string(frames) + "]");
    }
    // Lowest similarities == largest negated similarities; negation keeps
    // the smaller-index tie rule of top_k_stable.
    std::vector<double> negated(sims.size());
    std::transform(sims.begin(), sims.end(), negated.begin(), [](double s) { return -s; });
    const auto cuts = top_k_stable(negated, k - 1);

    EventPartition p;
    p.frames = frames;
    p.adjacent_similarity.assign(sims.begin(), sims.end());
    p.event_starts.reserve(k);
    p.event_starts.push_back(0);
    for (std::size_t cut : cuts) {
        p.event_starts.push_back(cut + 1);
    }
    return p;
}

EventPartition segment_events(const FrameEmbeddings& v, std::size_t k, FrameReduce mode) {
    if (k < 1 || k > v.frames) {
        throw InvalidArgument("segment_events: k=" + std::to_string(k) + " must be in [1, T=" +
                              std::to_string(v.frames) + "]");
    }
    return partition_from_similarities(adjacent_similarities(v, mode), k);
}

void score_relevance(const FrameEmbeddings& v, const TextEmbedding& t, EventPartition& partition,
                     const VisionOptions& options) {
    if (t.vector.size() != v.dim) {
        throw InvalidArgument("score_relevance: text dim " + std::to_string(t.vector.size()) +
                              " != frame dim " + std::to_string(v.dim));
    }
    const double text_norm = norm(t.vector);
    if (text_norm == 0.0) {
        throw InvalidArgument("score_relevance: zero-norm text embedding");
    }
    partition.frame_scores.assign(v.frames, 0.0);
    for (std::size_t f = 0; f < v.frames; ++f) {
        if (options.frame_reduce == FrameReduce::mean) {
            partition.frame_scores[f] = cosine(frame_vector(v, f, FrameReduce::mean), t.vector);
        } else {
            // Cosine between the flattened frame and the text tiled N times.
            double num = 0.0;
            for (std::size_t n = 0; n < v.tokens_per_frame(); ++n) {
                num += kernels::dot(v.token(f, n), t.vector);
            }
            const double frame_norm = norm(v.frame(f));
            if (frame_norm == 0.0) {
                throw InvalidArgument("score_relevance: zero-norm frame");
            }
            const double tiled_norm = text_norm * std::sqrt(static_cast<double>(v.tokens_per_frame()));
            partition.frame_scores[f] = std::clamp(num / (frame_norm * tiled_norm), -1.0, 1.0);
        }
    }
    partition.event_scores.assign(partition.event_count(), 0.0);
    for (std::size_t e = 0; e < partition.event_count(); ++e) {
        const auto first = partition.frame_scores.begin() + static_cast<std::ptrdiff_t>(partition.event_begin(e));
        const auto last = partition.frame_scores.begin() + static_cast<std::ptrdiff_t>(partition.event_end(e));
        if (options.event_score == EventScore::max) {
            partition.event_scores[e] = *std::max_element(first, last);
        } else {
            double sum = 0.0;
            for (auto it = first; it != last; ++it) {
                sum += *it;
            }
            partition.event_scores[e] = sum / static_cast<double>(partition.event_length(e));
        }
    }
}

std::size_t key_event_count(double alpha, std::size_t k) {
    return std::min(k, std::max<std::size_t>(1, ceil_count(alpha, k)));
}

std::size_t key_frame_count(double beta, std::size_t event_length) {
    return std::min(event_length, std::max<std::size_t>(1, ceil_count(beta, event_length)));
}

void select_keys(EventPartition& partition, double alpha, double beta) {
    const std::size_t k = partition.event_count();
    if (partition.event_scores.size() != k || partition.frame_scores.size() != partition.frames) {
        throw InvalidArgument("select_keys: relevance scores not populated");
    }
    partition.key_event.assign(k, false);
    for (std::size_t e : top_k_stable(partition.event_scores, key_event_count(alpha, k))) {
        partition.key_event[e] = true;
    }
    partition.key_frame.assign(partition.frames, false);
    for (std::size_t e = 0; e < k; ++e) {
        const std::size_t begin = partition.event_begin(e);
        std::span<const double> scores(partition.frame_scores.data() + begin, partition.event_length(e));
        for (std::size_t local : top_k_stable(scores, key_frame_count(beta, scores.size()))) {
            partition.key_frame[begin + local] = true;
        }
    }
}

std::size_t scaled_stride(std::size_t stride, double alpha) {
    const double scaled = static_cast<double>(stride) / alpha;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(scaled)));
}

std::size_t frame_stride(bool key_event, bool key_frame, std::size_t s1, std::size_t s2, double alpha) {
    const std::size_t base = key_frame ? s1 : s2;
    return key_event ? base : scaled_stride(base, alpha);
}

namespace {

void append_frame(TokenStream& out, const FrameEmbeddings& v, const EventPartition& p, std::size_t event,
                  std::size_t frame, std::size_t stride) {
    const TokenGrid pooled = avg_pool_2d(v.frame_grid(frame), stride);
    out.tokens.insert(out.tokens.end(), pooled.data.begin(), pooled.data.end());
    for (std::size_t row = 0; row < pooled.height; ++row) {
        for (std::size_t col = 0; col < pooled.width; ++col) {
            TokenOrigin o;
            o.event = static_cast<std::uint32_t>(event);
            o.frame = static_cast<std::uint32_t>(frame);
            o.key_event = p.key_event.empty() ? true : static_cast<bool>(p.key_event[event]);
            o.key_frame = p.key_frame.empty() ? true : static_cast<bool>(p.key_frame[frame]);
            o.row = static_cast<std::uint32_t>(row * stride);
            o.col = static_cast<std::uint32_t>(col * stride);
            o.stride = static_cast<std::uint32_t>(stride);
            out.origin.push_back(o);
        }
    }
}

void check_partition(const FrameEmbeddings& v, const EventPartition& p) {
    if (p.frames != v.frames || p.event_starts.empty() || p.event_starts.front() != 0) {
        throw InvalidArgument("adaptive_pool: partition does not cover the video");
    }
}

}  // namespace

TokenStream adaptive_pool(const FrameEmbeddings& v, const EventPartition& partition, std::size_t s1,
                          std::size_t s2, double alpha) {
    check_partition(v, partition);
    if (partition.key_event.size() != partition.event_count() || partition.key_frame.size() != v.frames) {
        throw InvalidArgument("adaptive_pool: key flags not populated");
    }
    if (s1 < 1 || s2 < 1 || s1 > s2) {
        throw InvalidArgument("adaptive_pool: strides must satisfy 1 <= s1 <= s2");
    }
    TokenStream out;
    out.dim = v.dim;
    for (std::size_t e = 0; e < partition.event_count(); ++e) {
        for (std::size_t f = partition.event_begin(e); f < partition.event_end(e); ++f) {
            const std::size_t stride = frame_stride(partition.key_event[e], partition.key_frame[f], s1, s2, alpha);
            append_frame(out, v, partition, e, f, stride);
        }
    }
    return out;
}

TokenStream uniform_pool(const FrameEmbeddings& v, const EventPartition& partition, std::size_t stride) {
    check_partition(v, partition);
    TokenStream out;
    out.dim = v.dim;
    for (std::size_t e = 0; e < partition.event_count(); ++e) {
        for (std::size_t f = partition.event_begin(e); f < partition.event_end(e); ++f) {
            append_frame(out, v, partition, e, f, stride);
        }
    }
    return out;
}

VisionResult run_vision_stage(const FrameEmbeddings& v, const TextEmbedding& t, const RunConfig& cfg,
                              const VisionOptions& options) {
    v.validate();
    VisionResult res;
    res.partition = segment_events(v, static_cast<std::size_t>(cfg.k), options.frame_reduce);
    score_relevance(v, t, res.partition, options);
    select_keys(res.partition, cfg.alpha, cfg.beta);
    if (cfg.disable_stages.vision) {
        res.stream = uniform_pool(v, res.partition, std::max<std::size_t>(1, options.base_stride));
    } else {
        res.stream = adaptive_pool(v, res.partition, static_cast<std::size_t>(cfg.s1),
                                   static_cast<std::size_t>(cfg.s2), cfg.alpha);
    }
    return res;
}

}  // namespace metok::vision
