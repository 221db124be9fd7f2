#ifndef HEXMAP_BITS_HPP
#define HEXMAP_BITS_HPP

#include <cstdint>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hexmap {

// 128-bit lane for address arithmetic. IPv4 addresses live right-aligned
// in the low 32 bits; bit positions are always MSB-first within the
// family's width.
using u128 = unsigned __int128;

constexpr u128 u128_from(uint64_t hi, uint64_t lo) {
    return (static_cast<u128>(hi) << 64) | lo;
}

// Mask with the low `n` bits set; n may be 0..128.
constexpr u128 low_mask(unsigned n) {
    if (n == 0) return 0;
    if (n >= 128) return ~static_cast<u128>(0);
    return (static_cast<u128>(1) << n) - 1;
}

inline uint64_t u128_hi(u128 v) { return static_cast<uint64_t>(v >> 64); }
inline uint64_t u128_lo(u128 v) { return static_cast<uint64_t>(v); }

// Big-endian byte conversions (network order).
void u128_to_bytes(u128 v, std::span<uint8_t> out); // out.size() is 4 or 16
u128 u128_from_bytes(std::span<const uint8_t> in);

std::string to_hex(std::span<const uint8_t> bytes);
std::vector<uint8_t> from_hex(const std::string& hex); // throws ConfigError
std::string to_base64(std::span<const uint8_t> bytes);

// splitmix64: tiny deterministic stream used to expand seeds.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace hexmap

#endif
