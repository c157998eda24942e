#pragma once

#include <cstddef>
#include <cstdint>

namespace sdgs {

/// 64-bit FNV-1a. Integers are hashed in little-endian byte order.
struct Fnv1a {
    std::uint64_t state = 0xcbf29ce484222325ULL;

    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state ^= p[i];
            state *= 0x100000001b3ULL;
        }
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            const auto byte = static_cast<unsigned char>(v >> (8 * i));
            bytes(&byte, 1);
        }
    }
};

} // namespace sdgs
