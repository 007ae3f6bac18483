// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace metok {

/// FNV-1a 64-bit. Used for run manifests and weight checksums, not security.
class Fnv1a64 {
  public:
    void update(std::span<const std::byte> bytes);
    void update(std::string_view text);
    void update(double value);
    std::uint64_t value() const { return hash_; }
    std::string hex() const;

  private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::string to_hex(std::uint64_t value);

/// Digest of a file's bytes as 16 lowercase hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace metok
