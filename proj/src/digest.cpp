// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#include "metok/digest.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <vector>

#include "metok/error.hpp"

namespace metok {

void Fnv1a64::update(std::span<const std::byte> bytes) {
    for (std::byte b : bytes) {
        hash_ ^= static_cast<std::uint64_t>(b);
        hash_ *= 0x100000001b3ULL;
    }
}

void Fnv1a64::update(std::string_view text) {
    update(std::as_bytes(std::span(text.data(), text.size())));
}

void Fnv1a64::update(double value) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
    std::byte buf[8];
    for (int i = 0; i < 8; ++i) {
        buf[i] = static_cast<std::byte>((bits >> (8 * i)) & 0xff);
    }
    update(std::span<const std::byte>(buf, 8));
}

std::string Fnv1a64::hex() const {
    return to_hex(hash_);
}

std::string to_hex(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Fnv1a64 h;
    h.update(std::as_bytes(std::span(bytes.data(), bytes.size())));
    return h.hex();
}

}  // namespace metok
