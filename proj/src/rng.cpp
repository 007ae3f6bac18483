// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#include "metok/rng.hpp"

namespace metok {

double Rng64::next_unit01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng64::next_unit() {
    return 2.0 * next_unit01() - 1.0;
}

std::uint64_t Rng64::next_below(std::uint64_t bound) {
    // Lemire's multiply-shift; the slight bias is irrelevant at our bounds.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
}

double rng_next_unit(Rng64& rng) {
    return rng.next_unit();
}

}  // namespace metok
