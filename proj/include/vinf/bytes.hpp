#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vinf/error.hpp"

namespace vinf {

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<const std::uint8_t>;

static_assert(std::endian::native == std::endian::little,
              "wire formats assume a little-endian host");

/// Append-only little-endian encoder.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { put(&v, sizeof v); }
    void u32(std::uint32_t v) { put(&v, sizeof v); }
    void u64(std::uint64_t v) { put(&v, sizeof v); }
    void f32(float v) { put(&v, sizeof v); }
    void raw(ByteSpan data) { buf_.insert(buf_.end(), data.begin(), data.end()); }
    void raw(std::string_view s) { put(s.data(), s.size()); }
    void f32s(std::span<const float> v) { put(v.data(), v.size() * sizeof(float)); }

    /// u64 length prefix followed by the bytes.
    void section(ByteSpan data) {
        u64(data.size());
        raw(data);
    }

    const Bytes& bytes() const& { return buf_; }
    Bytes bytes() && { return std::move(buf_); }

private:
    void put(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }

    Bytes buf_;
};

/// Bounds-checked little-endian decoder; every failure reports its offset.
class ByteReader {
public:
    explicit ByteReader(ByteSpan data, std::size_t base_offset = 0)
        : data_(data), base_(base_offset) {}

    std::uint8_t u8() { return get<std::uint8_t>("u8"); }
    std::uint16_t u16() { return get<std::uint16_t>("u16"); }
    std::uint32_t u32() { return get<std::uint32_t>("u32"); }
    std::uint64_t u64() { return get<std::uint64_t>("u64"); }
    float f32() { return get<float>("f32"); }

    ByteSpan raw(std::size_t n, const char* what = "bytes") {
        need(n, what);
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::vector<float> f32s(std::size_t n) {
        if (n > remaining() / sizeof(float)) fail("float array overruns input");
        std::vector<float> out(n);
        std::memcpy(out.data(), data_.data() + pos_, n * sizeof(float));
        pos_ += n * sizeof(float);
        return out;
    }

    void expect_magic(std::string_view magic) {
        auto got = raw(magic.size(), "magic");
        if (std::memcmp(got.data(), magic.data(), magic.size()) != 0) {
            pos_ -= magic.size();
            fail("bad magic, expected " + std::string(magic));
        }
    }

    /// Reads a u64-length-prefixed section and returns a reader over it.
    ByteReader section(const char* what = "section") {
        std::uint64_t n = u64();
        if (n > remaining()) fail(std::string(what) + " length exceeds input");
        ByteReader sub(data_.subspan(pos_, n), offset());
        pos_ += n;
        return sub;
    }

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    std::size_t offset() const noexcept { return base_ + pos_; }
    bool done() const noexcept { return pos_ == data_.size(); }

    void expect_done(const char* what = "input") const {
        if (!done()) fail(std::string("trailing bytes after ") + what);
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, offset()); }

private:
    void need(std::size_t n, const char* what) const {
        if (n > remaining()) fail(std::string("truncated input reading ") + what);
    }

    template <typename T>
    T get(const char* what) {
        need(sizeof(T), what);
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    ByteSpan data_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

std::string to_hex(ByteSpan data);
Bytes from_hex(std::string_view hex);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, ByteSpan data);

}  // namespace vinf
