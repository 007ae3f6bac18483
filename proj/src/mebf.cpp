// Copyright 2026 The metok Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "metok/embeddings.hpp"
#include "metok/error.hpp"

namespace metok {

namespace {

constexpr std::size_t kHeaderBytes = 6;
// Refuse headers implying more than 2^36 floats (256 GiB); they are corrupt.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 36;

class Writer {
  public:
    void u8(std::uint8_t v) { out_.push_back(static_cast<std::byte>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            out_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
        }
    }
    void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
    void magic() {
        for (char c : {'M', 'E', 'B', 'F'}) {
            out_.push_back(static_cast<std::byte>(c));
        }
    }
    std::vector<std::byte> take() { return std::move(out_); }

  private:
    std::vector<std::byte> out_;
};

class Reader {
  public:
    explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

    void need(std::uint64_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            throw TruncatedError(std::string("MEBF: truncated ") + what + " (need " + std::to_string(n) +
                                 " bytes, have " + std::to_string(bytes_.size() - pos_) + ")");
        }
    }
    std::uint8_t u8() {
        need(1, "header");
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        }
        pos_ += 4;
        return v;
    }
    double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
    std::size_t remaining() const { return bytes_.size() - pos_; }

  private:
    std::span<const std::byte> bytes_;
    std::size_t pos_ = 0;
};

void check_header(Reader& rd, std::span<const std::byte> bytes, std::uint8_t expected_type) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "MEBF", 4) != 0) {
        throw BadMagicError("MEBF: bad magic");
    }
    for (int i = 0; i < 4; ++i) {
        rd.u8();
    }
    const std::uint8_t version = rd.u8();
    if (version != kMebfVersion) {
        throw UnsupportedRecordError("MEBF: unsupported version " + std::to_string(version));
    }
    const std::uint8_t type = rd.u8();
    if (type != expected_type) {
        throw UnsupportedRecordError("MEBF: expected record type " + std::to_string(expected_type) + ", found " +
                                     std::to_string(type));
    }
}

std::uint64_t checked_product(std::initializer_list<std::uint64_t> dims) {
    std::uint64_t total = 1;
    for (std::uint64_t d : dims) {
        if (d != 0 && total > kMaxElements / d) {
            throw DimensionOverflowError("MEBF: header dimensions overflow");
        }
        total *= d;
    }
    if (total > kMaxElements) {
        throw DimensionOverflowError("MEBF: header dimensions overflow");
    }
    return total;
}

std::vector<std::byte> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::byte> bytes(raw.size());
    std::memcpy(bytes.data(), raw.data(), raw.size());
    return bytes;
}

void spill(std::span<const std::byte> bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw DataError("write failed: " + path.string());
    }
}

}  // namespace

FrameEmbeddings::FrameEmbeddings(std::size_t t, std::size_t h, std::size_t w, std::size_t d)
    : frames(t), height(h), width(w), dim(d), tokens(t * h * w * d, 0.0) {}

TokenGrid FrameEmbeddings::frame_grid(std::size_t f) const {
    auto span = frame(f);
    return TokenGrid(height, width, dim, std::vector<double>(span.begin(), span.end()));
}

void FrameEmbeddings::validate() const {
    if (frames == 0 || height == 0 || width == 0 || dim == 0) {
        throw DataError("frame embeddings: every dimension must be positive");
    }
    if (tokens.size() != frames * height * width * dim) {
        throw DataError("frame embeddings: token buffer size does not match T*h*w*d");
    }
    for (double x : tokens) {
        if (!std::isfinite(x)) {
            throw DataError("frame embeddings: non-finite value");
        }
    }
}

void TextEmbedding::validate() const {
    if (vector.empty()) {
        throw DataError("text embedding: empty vector");
    }
    if (prompt_ids.empty()) {
        throw DataError("text embedding: prompt must have at least one token");
    }
    double sq = 0.0;
    for (double x : vector) {
        if (!std::isfinite(x)) {
            throw DataError("text embedding: non-finite value");
        }
        sq += x * x;
    }
    if (sq == 0.0) {
        throw DataError("text embedding: zero norm");
    }
}

std::vector<std::byte> encode_embeddings(const FrameEmbeddings& v) {
    v.validate();
    constexpr auto u32_max = std::numeric_limits<std::uint32_t>::max();
    if (v.frames > u32_max || v.height > u32_max || v.width > u32_max || v.dim > u32_max) {
        throw DimensionOverflowError("MEBF: dimension does not fit in u32");
    }
    Writer w;
    w.magic();
    w.u8(kMebfVersion);
    w.u8(kMebfFrameRecord);
    w.u32(static_cast<std::uint32_t>(v.frames));
    w.u32(static_cast<std::uint32_t>(v.height));
    w.u32(static_cast<std::uint32_t>(v.width));
    w.u32(static_cast<std::uint32_t>(v.dim));
    for (double x : v.tokens) {
        w.f32(x);
    }
    return w.take();
}

std::vector<std::byte> encode_text(const TextEmbedding& t) {
    t.validate();
    Writer w;
    w.magic();
    w.u8(kMebfVersion);
    w.u8(kMebfTextRecord);
    w.u32(static_cast<std::uint32_t>(t.vector.size()));
    w.u32(static_cast<std::uint32_t>(t.prompt_ids.size()));
    for (double x : t.vector) {
        w.f32(x);
    }
    for (std::uint32_t id : t.prompt_ids) {
        w.u32(id);
    }
    return w.take();
}

FrameEmbeddings decode_embeddings(std::span<const std::byte> bytes) {
    Reader rd(bytes);
    check_header(rd, bytes, kMebfFrameRecord);
    rd.need(16, "frame header");
    const std::uint64_t t = rd.u32();
    const std::uint64_t h = rd.u32();
    const std::uint64_t w = rd.u32();
    const std::uint64_t d = rd.u32();
    const std::uint64_t count = checked_product({t, h, w, d});
    rd.need(count * 4, "frame payload");
    if (rd.remaining() != count * 4) {
        throw DataError("MEBF: trailing bytes after frame payload");
    }
    FrameEmbeddings v(t, h, w, d);
    for (double& x : v.tokens) {
        x = rd.f32();
    }
    v.validate();
    return v;
}

TextEmbedding decode_text(std::span<const std::byte> bytes) {
    Reader rd(bytes);
    check_header(rd, bytes, kMebfTextRecord);
    rd.need(8, "text header");
    const std::uint64_t d = rd.u32();
    const std::uint64_t m = rd.u32();
    const std::uint64_t count = checked_product({d + m});
    rd.need(count * 4, "text payload");
    if (rd.remaining() != count * 4) {
        throw DataError("MEBF: trailing bytes after text payload");
    }
    TextEmbedding t;
    t.vector.resize(d);
    for (double& x : t.vector) {
        x = rd.f32();
    }
    t.prompt_ids.resize(m);
    for (auto& id : t.prompt_ids) {
        id = rd.u32();
    }
    t.validate();
    return t;
}

void write_embeddings(const FrameEmbeddings& v, const std::filesystem::path& path) {
    spill(encode_embeddings(v), path);
}

FrameEmbeddings read_embeddings(const std::filesystem::path& path) {
    return decode_embeddings(slurp(path));
}

void write_text(const TextEmbedding& t, const std::filesystem::path& path) {
    spill(encode_text(t), path);
}

TextEmbedding read_text(const std::filesystem::path& path) {
    return decode_text(slurp(path));
}

FrameEmbeddings quantize_f32(FrameEmbeddings v) {
    for (double& x : v.tokens) {
        x = static_cast<double>(static_cast<float>(x));
    }
    return v;
}

}  // namespace metok
