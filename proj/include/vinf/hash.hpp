#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>

#include "vinf/bytes.hpp"

namespace vinf {

using Digest = std::array<std::uint8_t, 32>;

/// Incremental SHA-256 (OpenSSL EVP). Reusable after `finish()`.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(Sha256&&) noexcept;
    Sha256& operator=(Sha256&&) noexcept;
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    Sha256& update(ByteSpan data);
    Sha256& update(const void* data, std::size_t n);
    Sha256& update_u8(std::uint8_t v) { return update(&v, 1); }
    Sha256& update_u64(std::uint64_t v) { return update(&v, sizeof v); }
    Digest finish();

private:
    struct Ctx;
    std::unique_ptr<Ctx> ctx_;
};

Digest sha256(ByteSpan data);

inline std::string to_hex(const Digest& d) { return to_hex(ByteSpan(d)); }

}  // namespace vinf
