// MurmurHash3 was written by Austin Appleby, and is placed in the public
// domain. This is a port of MurmurHash3_x64_128 from the reference sources.

#include "rlink/murmur3.hpp"

#include <bit>
#include <cstring>

namespace rlink {

namespace {

inline std::uint64_t load64_le(const std::byte* p) {
    std::uint64_t v;
    std::memcpy(&v, p, sizeof v);
    if constexpr (std::endian::native == std::endian::big) {
        v = __builtin_bswap64(v);
    }
    return v;
}

// The reference takes a 32-bit seed and widens it; accepting 64 bits here is a
// strict superset that agrees with the reference for every seed < 2^32.
std::pair<std::uint64_t, std::uint64_t> hash128(std::span<const std::byte> data,
                                                std::uint64_t seed) {
    const std::size_t len = data.size();
    const std::size_t nblocks = len / 16;
    const std::byte* bytes = data.data();

    std::uint64_t h1 = seed;
    std::uint64_t h2 = seed;

    constexpr std::uint64_t c1 = 0x87c37b91114253d5ULL;
    constexpr std::uint64_t c2 = 0x4cf5ad432745937fULL;

    for (std::size_t i = 0; i < nblocks; ++i) {
        std::uint64_t k1 = load64_le(bytes + i * 16);
        std::uint64_t k2 = load64_le(bytes + i * 16 + 8);

        k1 *= c1;
        k1 = std::rotl(k1, 31);
        k1 *= c2;
        h1 ^= k1;

        h1 = std::rotl(h1, 27);
        h1 += h2;
        h1 = h1 * 5 + 0x52dce729;

        k2 *= c2;
        k2 = std::rotl(k2, 33);
        k2 *= c1;
        h2 ^= k2;

        h2 = std::rotl(h2, 31);
        h2 += h1;
        h2 = h2 * 5 + 0x38495ab5;
    }

    const std::byte* tail = bytes + nblocks * 16;
    std::uint64_t k1 = 0;
    std::uint64_t k2 = 0;
    auto at = [tail](std::size_t i) { return static_cast<std::uint64_t>(tail[i]); };

    switch (len & 15) {
        case 15: k2 ^= at(14) << 48; [[fallthrough]];
        case 14: k2 ^= at(13) << 40; [[fallthrough]];
        case 13: k2 ^= at(12) << 32; [[fallthrough]];
        case 12: k2 ^= at(11) << 24; [[fallthrough]];
        case 11: k2 ^= at(10) << 16; [[fallthrough]];
        case 10: k2 ^= at(9) << 8; [[fallthrough]];
        case 9:
            k2 ^= at(8);
            k2 *= c2;
            k2 = std::rotl(k2, 33);
            k2 *= c1;
            h2 ^= k2;
            [[fallthrough]];
        case 8: k1 ^= at(7) << 56; [[fallthrough]];
        case 7: k1 ^= at(6) << 48; [[fallthrough]];
        case 6: k1 ^= at(5) << 40; [[fallthrough]];
        case 5: k1 ^= at(4) << 32; [[fallthrough]];
        case 4: k1 ^= at(3) << 24; [[fallthrough]];
        case 3: k1 ^= at(2) << 16; [[fallthrough]];
        case 2: k1 ^= at(1) << 8; [[fallthrough]];
        case 1:
            k1 ^= at(0);
            k1 *= c1;
            k1 = std::rotl(k1, 31);
            k1 *= c2;
            h1 ^= k1;
            break;
        default:
            break;
    }

    h1 ^= static_cast<std::uint64_t>(len);
    h2 ^= static_cast<std::uint64_t>(len);

    h1 += h2;
    h2 += h1;

    h1 = fmix64(h1);
    h2 = fmix64(h2);

    h1 += h2;
    h2 += h1;

    return {h1, h2};
}

}  // namespace

std::pair<std::uint64_t, std::uint64_t> murmur3_x64_128(std::span<const std::byte> data,
                                                        std::uint32_t seed) {
    return hash128(data, seed);
}

std::uint64_t murmur3_64(std::span<const std::byte> data, std::uint64_t seed) {
    return hash128(data, seed).first;
}

}  // namespace rlink
