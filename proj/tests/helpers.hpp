// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

// Small shared fixtures and independent reference implementations.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "metok/embeddings.hpp"

namespace metok::testing {

// Reference SplitMix64, written out independently of the library class.
inline std::uint64_t splitmix_ref(std::uint64_t& s) {
    s += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = s;
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

inline FrameEmbeddings random_video(std::mt19937_64& gen, std::size_t t, std::size_t h, std::size_t w,
                                    std::size_t d) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    FrameEmbeddings v(t, h, w, d);
    for (double& x : v.tokens) {
        x = u(gen);
    }
    return v;
}

inline TextEmbedding random_text(std::mt19937_64& gen, std::size_t d, std::size_t m = 4) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TextEmbedding t;
    t.vector.resize(d);
    for (double& x : t.vector) {
        x = u(gen);
    }
    for (std::size_t i = 0; i < m; ++i) {
        t.prompt_ids.push_back(static_cast<std::uint32_t>(gen() % 256));
    }
    return t;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("metok_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace metok::testing
