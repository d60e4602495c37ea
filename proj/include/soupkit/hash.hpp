#pragma once

#include <cstdint>
#include <string_view>

namespace soupkit {

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = kFnvOffsetBasis) {
    std::uint64_t h = state;
    for (char ch : bytes) {
        h ^= static_cast<unsigned char>(ch);
        h *= kFnvPrime;
    }
    return h;
}

// FNV-1a over the eight little-endian seed bytes followed by the token bytes.
inline std::uint64_t fnv1a64_seeded(std::string_view token, std::uint64_t seed) {
    std::uint64_t h = kFnvOffsetBasis;
    for (int i = 0; i < 8; ++i) {
        h ^= (seed >> (8 * i)) & 0xffu;
        h *= kFnvPrime;
    }
    return fnv1a64(token, h);
}

}  // namespace soupkit
