// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace metok {

/// SplitMix64. Chosen because any language can reproduce it bit for bit; all
/// seeded draws in the project (synthetic data, model weights) come from it.
class Rng64 {
  public:
    explicit constexpr Rng64(std::uint64_t seed = 0) : state_(seed) {}

    constexpr std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) from the top 53 bits.
    double next_unit01();

    /// Uniform in [-1, 1).
    double next_unit();

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t next_below(std::uint64_t bound);

    constexpr std::uint64_t state() const { return state_; }

  private:
    std::uint64_t state_;
};

/// Advances `rng` and returns a value in [-1, 1).
double rng_next_unit(Rng64& rng);

}  // namespace metok
