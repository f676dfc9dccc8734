#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace rlink {

/// MurmurHash3_x64_128 (Austin Appleby's reference algorithm). Returns {h1, h2}.
std::pair<std::uint64_t, std::uint64_t> murmur3_x64_128(std::span<const std::byte> data,
                                                        std::uint32_t seed);

/// 64-bit MurmurHash3: the low half (h1) of the x64_128 variant.
std::uint64_t murmur3_64(std::span<const std::byte> data, std::uint64_t seed);

inline std::uint64_t murmur3_64(std::string_view text, std::uint64_t seed) {
    return murmur3_64(std::as_bytes(std::span(text.data(), text.size())), seed);
}

/// Murmur's 64-bit finalizer; a bijection on 64-bit values.
constexpr std::uint64_t fmix64(std::uint64_t k) noexcept {
    k ^= k >> 33;
    k *= 0xff51afd7ed558ccdULL;
    k ^= k >> 33;
    k *= 0xc4ceb9fe1a85ec53ULL;
    k ^= k >> 33;
    return k;
}

}  // namespace rlink
